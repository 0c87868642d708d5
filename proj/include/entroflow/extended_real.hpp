#pragma once

#include <limits>

namespace entroflow {

// A value in (-inf, +inf]; used for normalizing constants and entropies.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    r.value_ = std::numeric_limits<double>::infinity();
    return r;
  }

  constexpr bool finite() const { return !infinite_; }
  constexpr double value() const { return value_; }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace entroflow
