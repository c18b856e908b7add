#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace plantbot::osc {

using Blob = std::vector<std::uint8_t>;
using Argument = std::variant<std::int32_t, float, std::string, Blob>;

/// One OSC 1.0 message: an address pattern and typed arguments (i, f, s, b).
struct Message {
  std::string address;
  std::vector<Argument> args;

  bool operator==(const Message& other) const;
};

enum class EncodeErrc { invalid_address, embedded_null };

class EncodeError : public std::runtime_error {
 public:
  EncodeError(EncodeErrc code, std::string field, const std::string& what)
      : std::runtime_error(what), code_(code), field_(std::move(field)) {}
  EncodeErrc code() const noexcept { return code_; }
  /// "address" or "args[<i>]".
  const std::string& field() const noexcept { return field_; }

 private:
  EncodeErrc code_;
  std::string field_;
};

enum class DecodeErrc {
  truncated_packet,    // fewer bytes than an address block needs
  bad_address,         // address does not start with '/' or has whitespace
  bad_padding,         // non-zero pad bytes or length not a multiple of 4
  missing_type_tags,   // type-tag string absent or not starting with ','
  unknown_type_tag,
  truncated_argument,  // declared argument runs past the end of the packet
  bundle_unsupported,  // "#bundle" packets
  trailing_bytes,
};

const char* to_string(DecodeErrc code) noexcept;

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrc code, std::size_t offset);
  DecodeErrc code() const noexcept { return code_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  DecodeErrc code_;
  std::size_t offset_;
};

/// Throws EncodeError when the message violates the address or string rules.
std::vector<std::uint8_t> encode(const Message& msg);

/// Throws DecodeError; never reads outside `bytes`.
Message decode(std::span<const std::uint8_t> bytes);

/// Non-throwing variant for receive loops.
struct DecodeResult {
  std::variant<Message, DecodeErrc> value;
  bool ok() const noexcept { return value.index() == 0; }
  const Message& message() const { return std::get<Message>(value); }
  DecodeErrc error() const { return std::get<DecodeErrc>(value); }
};
DecodeResult try_decode(std::span<const std::uint8_t> bytes) noexcept;

/// Address grammar shared with the bus: non-empty, leading '/', no whitespace or NUL.
bool valid_address(std::string_view address) noexcept;

}  // namespace plantbot::osc
