#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>

namespace ssridge {

/// A nonnegative extended real: either a finite double or +infinity.
///
/// The infinite case is an explicit tag so that integrands never see an IEEE
/// infinity; code that evaluates spectral integrals branches on `is_inf()`
/// and uses the analytic limit instead.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtReal inf() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_inf() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  /// Finite value; meaningless when is_inf().
  constexpr double value() const { return value_; }

  /// Finite value or IEEE +inf, for printing and comparisons only.
  double to_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend constexpr bool operator==(const ExtReal& a, const ExtReal& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }
  friend constexpr bool operator<(const ExtReal& a, const ExtReal& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend constexpr bool operator<=(const ExtReal& a, const ExtReal& b) { return !(b < a); }
  friend constexpr bool operator>(const ExtReal& a, const ExtReal& b) { return b < a; }
  friend constexpr bool operator>=(const ExtReal& a, const ExtReal& b) { return !(a < b); }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

std::ostream& operator<<(std::ostream& os, const ExtReal& x);

}  // namespace ssridge
