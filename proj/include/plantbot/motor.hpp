#pragma once

namespace plantbot {

/// Track speeds for the differential-drive base, held for `duration` seconds.
struct MotorCommand {
  double left = 0;      // m/s
  double right = 0;     // m/s
  double duration = 0;  // s

  double linear() const { return 0.5 * (left + right); }
  bool is_stop() const { return left == 0 && right == 0; }
  bool operator==(const MotorCommand&) const = default;
};

}  // namespace plantbot
