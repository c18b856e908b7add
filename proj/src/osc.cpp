#include "plantbot/osc.hpp"

#include <bit>
#include <cstring>

namespace plantbot::osc {

namespace {

constexpr std::size_t padded(std::size_t n) { return (n + 3) & ~std::size_t{3}; }

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

// OSC-string: bytes, at least one NUL, zero-padded to a 4-byte boundary.
void put_string(std::vector<std::uint8_t>& out, std::string_view s) {
  out.insert(out.end(), s.begin(), s.end());
  const std::size_t total = padded(s.size() + 1);
  out.resize(out.size() + (total - s.size()), 0);
}

bool has_whitespace(std::string_view s) {
  for (unsigned char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return true;
  }
  return false;
}

struct Decoder {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  [[noreturn]] void fail(DecodeErrc code) const { throw DecodeError(code, pos); }

  // OSC-string at `pos`; advances past its padding.
  std::string string(DecodeErrc truncated) {
    std::size_t nul = pos;
    while (nul < bytes.size() && bytes[nul] != 0) ++nul;
    if (nul >= bytes.size()) fail(truncated);
    const std::size_t end = pos + padded(nul - pos + 1);
    if (end > bytes.size()) fail(truncated);
    for (std::size_t i = nul; i < end; ++i) {
      if (bytes[i] != 0) fail(DecodeErrc::bad_padding);
    }
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), nul - pos);
    pos = end;
    return s;
  }
};

}  // namespace

bool Message::operator==(const Message& other) const {
  if (address != other.address || args.size() != other.args.size()) return false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    const auto& b = other.args[i];
    if (a.index() != b.index()) return false;
    // Floats compare by bit pattern so NaN payloads round-trip as equal.
    if (const auto* fa = std::get_if<float>(&a)) {
      if (std::bit_cast<std::uint32_t>(*fa) != std::bit_cast<std::uint32_t>(std::get<float>(b)))
        return false;
    } else if (a != b) {
      return false;
    }
  }
  return true;
}

const char* to_string(DecodeErrc code) noexcept {
  switch (code) {
    case DecodeErrc::truncated_packet: return "truncated packet";
    case DecodeErrc::bad_address: return "bad address";
    case DecodeErrc::bad_padding: return "bad padding";
    case DecodeErrc::missing_type_tags: return "missing type tag string";
    case DecodeErrc::unknown_type_tag: return "unknown type tag";
    case DecodeErrc::truncated_argument: return "truncated argument";
    case DecodeErrc::bundle_unsupported: return "bundles are not supported";
    case DecodeErrc::trailing_bytes: return "trailing bytes";
  }
  return "decode error";
}

DecodeError::DecodeError(DecodeErrc code, std::size_t offset)
    : std::runtime_error(std::string("osc decode: ") + to_string(code) + " at byte " +
                         std::to_string(offset)),
      code_(code),
      offset_(offset) {}

bool valid_address(std::string_view address) noexcept {
  return !address.empty() && address.front() == '/' &&
         address.find('\0') == std::string_view::npos && !has_whitespace(address);
}

std::vector<std::uint8_t> encode(const Message& msg) {
  if (!valid_address(msg.address)) {
    throw EncodeError(EncodeErrc::invalid_address, "address",
                      "osc encode: invalid address '" + msg.address + "'");
  }
  std::string tags = ",";
  for (std::size_t i = 0; i < msg.args.size(); ++i) {
    const auto& arg = msg.args[i];
    switch (arg.index()) {
      case 0: tags += 'i'; break;
      case 1: tags += 'f'; break;
      case 2:
        if (std::get<std::string>(arg).find('\0') != std::string::npos) {
          const std::string field = "args[" + std::to_string(i) + "]";
          throw EncodeError(EncodeErrc::embedded_null, field,
                            "osc encode: embedded null byte in " + field);
        }
        tags += 's';
        break;
      case 3: tags += 'b'; break;
    }
  }

  std::vector<std::uint8_t> out;
  put_string(out, msg.address);
  put_string(out, tags);
  for (const auto& arg : msg.args) {
    if (const auto* i = std::get_if<std::int32_t>(&arg)) {
      put_be32(out, static_cast<std::uint32_t>(*i));
    } else if (const auto* f = std::get_if<float>(&arg)) {
      put_be32(out, std::bit_cast<std::uint32_t>(*f));
    } else if (const auto* s = std::get_if<std::string>(&arg)) {
      put_string(out, *s);
    } else {
      const auto& blob = std::get<Blob>(arg);
      put_be32(out, static_cast<std::uint32_t>(blob.size()));
      out.insert(out.end(), blob.begin(), blob.end());
      out.resize(padded(out.size()), 0);
    }
  }
  return out;
}

Message decode(std::span<const std::uint8_t> bytes) {
  Decoder d{bytes};
  if (bytes.size() < 4) d.fail(DecodeErrc::truncated_packet);
  if (bytes.size() % 4 != 0) d.fail(DecodeErrc::bad_padding);
  if (bytes[0] == '#') {
    static constexpr char kBundle[] = "#bundle";
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kBundle, 8) == 0)
      d.fail(DecodeErrc::bundle_unsupported);
    d.fail(DecodeErrc::bad_address);
  }

  Message msg;
  msg.address = d.string(DecodeErrc::truncated_packet);
  if (!valid_address(msg.address)) {
    d.pos = 0;
    d.fail(DecodeErrc::bad_address);
  }
  if (d.pos >= bytes.size() || bytes[d.pos] != ',') d.fail(DecodeErrc::missing_type_tags);
  const std::string tags = d.string(DecodeErrc::missing_type_tags);

  for (std::size_t t = 1; t < tags.size(); ++t) {
    switch (tags[t]) {
      case 'i':
        if (d.pos + 4 > bytes.size()) d.fail(DecodeErrc::truncated_argument);
        msg.args.emplace_back(static_cast<std::int32_t>(get_be32(bytes, d.pos)));
        d.pos += 4;
        break;
      case 'f':
        if (d.pos + 4 > bytes.size()) d.fail(DecodeErrc::truncated_argument);
        msg.args.emplace_back(std::bit_cast<float>(get_be32(bytes, d.pos)));
        d.pos += 4;
        break;
      case 's':
        if (d.pos >= bytes.size()) d.fail(DecodeErrc::truncated_argument);
        msg.args.emplace_back(d.string(DecodeErrc::truncated_argument));
        break;
      case 'b': {
        if (d.pos + 4 > bytes.size()) d.fail(DecodeErrc::truncated_argument);
        const std::size_t len = get_be32(bytes, d.pos);
        const std::size_t start = d.pos + 4;
        if (len > bytes.size() - start) d.fail(DecodeErrc::truncated_argument);
        const std::size_t end = start + padded(len);
        if (end > bytes.size()) d.fail(DecodeErrc::truncated_argument);
        for (std::size_t i = start + len; i < end; ++i) {
          if (bytes[i] != 0) d.fail(DecodeErrc::bad_padding);
        }
        msg.args.emplace_back(Blob(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(start + len)));
        d.pos = end;
        break;
      }
      default:
        d.fail(DecodeErrc::unknown_type_tag);
    }
  }
  if (d.pos != bytes.size()) d.fail(DecodeErrc::trailing_bytes);
  return msg;
}

DecodeResult try_decode(std::span<const std::uint8_t> bytes) noexcept {
  try {
    return DecodeResult{decode(bytes)};
  } catch (const DecodeError& e) {
    return DecodeResult{e.code()};
  } catch (...) {
    // Allocation failure on absurd input; report as truncation.
    return DecodeResult{DecodeErrc::truncated_packet};
  }
}

}  // namespace plantbot::osc
