#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace explab {

/// Signed real number represented as sign * exp(log_magnitude).
///
/// Scale and speed measures of the explosion test reach magnitudes around
/// exp(1e4) for the lambda range we sweep, far beyond double range, so all
/// accumulation is done on (sign, log|x|) pairs. Zero is sign == 0 with the
/// log magnitude fixed at -infinity.
class LogValue {
 public:
  LogValue() : sign_(0), log_mag_(-kInf) {}

  static LogValue zero() { return LogValue(); }

  static LogValue from_double(double x) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("LogValue::from_double: non-finite input");
    }
    if (x == 0.0) return zero();
    return LogValue(x > 0.0 ? 1 : -1, std::log(std::fabs(x)));
  }

  /// Builds sign * exp(log_mag) directly. log_mag == -inf yields zero.
  static LogValue from_log(double log_mag, int sign = 1) {
    if (std::isnan(log_mag) || log_mag == kInf) {
      throw std::invalid_argument("LogValue::from_log: log magnitude must be finite or -inf");
    }
    if (sign != 1 && sign != -1 && sign != 0) {
      throw std::invalid_argument("LogValue::from_log: sign must be -1, 0 or +1");
    }
    if (sign == 0 || log_mag == -kInf) return zero();
    return LogValue(sign, log_mag);
  }

  int sign() const { return sign_; }
  bool is_zero() const { return sign_ == 0; }

  /// Natural log of |x|; -inf for zero.
  double log_magnitude() const { return log_mag_; }

  /// Base-10 log of |x|; -inf for zero. This is what reports print.
  double log10_magnitude() const { return log_mag_ / kLn10; }

  /// True when exp(log_magnitude) fits in a finite double.
  bool representable() const { return sign_ == 0 || log_mag_ <= kMaxFiniteLog; }

  /// Converts back to double. Throws std::overflow_error when the magnitude
  /// exceeds double range; subnormal magnitudes flush to zero.
  double to_double() const {
    if (sign_ == 0) return 0.0;
    if (log_mag_ > kMaxFiniteLog) {
      throw std::overflow_error("LogValue::to_double: magnitude exceeds double range (log = " +
                                std::to_string(log_mag_) + ")");
    }
    return static_cast<double>(sign_) * std::exp(log_mag_);
  }

  LogValue operator-() const { return LogValue(-sign_, log_mag_); }

  LogValue abs() const { return LogValue(sign_ == 0 ? 0 : 1, log_mag_); }

  friend LogValue operator*(const LogValue& a, const LogValue& b) {
    if (a.sign_ == 0 || b.sign_ == 0) return zero();
    return LogValue(a.sign_ * b.sign_, a.log_mag_ + b.log_mag_);
  }

  friend LogValue operator/(const LogValue& a, const LogValue& b) {
    if (b.sign_ == 0) throw std::domain_error("LogValue: division by zero");
    if (a.sign_ == 0) return zero();
    return LogValue(a.sign_ * b.sign_, a.log_mag_ - b.log_mag_);
  }

  /// Log-sum-exp addition. Signed cancellation goes through expm1 so nearly
  /// equal magnitudes lose no more accuracy than the inputs already carry.
  friend LogValue operator+(const LogValue& a, const LogValue& b) {
    if (a.sign_ == 0) return b;
    if (b.sign_ == 0) return a;
    const LogValue& big = (a.log_mag_ >= b.log_mag_) ? a : b;
    const LogValue& small = (a.log_mag_ >= b.log_mag_) ? b : a;
    const double d = small.log_mag_ - big.log_mag_;  // <= 0
    if (a.sign_ == b.sign_) {
      return LogValue(a.sign_, big.log_mag_ + std::log1p(std::exp(d)));
    }
    if (d == 0.0) return zero();  // exact cancellation
    return LogValue(big.sign_, big.log_mag_ + std::log(-std::expm1(d)));
  }

  friend LogValue operator-(const LogValue& a, const LogValue& b) { return a + (-b); }

  friend bool operator==(const LogValue& a, const LogValue& b) {
    return a.sign_ == b.sign_ && (a.sign_ == 0 || a.log_mag_ == b.log_mag_);
  }
  friend bool operator!=(const LogValue& a, const LogValue& b) { return !(a == b); }

  friend bool operator<(const LogValue& a, const LogValue& b) {
    if (a.sign_ != b.sign_) return a.sign_ < b.sign_;
    if (a.sign_ == 0) return false;
    return a.sign_ > 0 ? a.log_mag_ < b.log_mag_ : a.log_mag_ > b.log_mag_;
  }
  friend bool operator>(const LogValue& a, const LogValue& b) { return b < a; }
  friend bool operator<=(const LogValue& a, const LogValue& b) { return !(b < a); }
  friend bool operator>=(const LogValue& a, const LogValue& b) { return !(a < b); }

  static bool abs_less(const LogValue& a, const LogValue& b) { return a.log_mag_ < b.log_mag_; }

 private:
  LogValue(int sign, double log_mag) : sign_(sign), log_mag_(log_mag) {}

  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kLn10 = 2.302585092994045684;
  // log(DBL_MAX), rounded down.
  static constexpr double kMaxFiniteLog = 709.782712893383996;

  int sign_;
  double log_mag_;
};

}  // namespace explab
