#pragma once

#include <cmath>
#include <limits>
#include <ostream>

namespace nkpp {

/// A real number or +infinity, with the infinite case carried as a tag instead
/// of relying on floating-point overflow.
class Extended {
 public:
  constexpr Extended() = default;
  constexpr Extended(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  static constexpr Extended infinity() {
    Extended e;
    e.infinite_ = true;
    e.value_ = std::numeric_limits<double>::infinity();
    return e;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  /// Finite value; +inf as a double when infinite.
  constexpr double value() const { return value_; }

  friend constexpr bool operator<(const Extended& a, const Extended& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend constexpr bool operator>(const Extended& a, const Extended& b) { return b < a; }
  friend constexpr bool operator<=(const Extended& a, const Extended& b) { return !(b < a); }
  friend constexpr bool operator>=(const Extended& a, const Extended& b) { return !(a < b); }
  friend constexpr bool operator==(const Extended& a, const Extended& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

  friend std::ostream& operator<<(std::ostream& os, const Extended& e) {
    if (e.infinite_) return os << "inf";
    return os << e.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace nkpp
