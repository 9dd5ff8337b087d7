#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "vanguard/errors.hpp"

namespace vanguard {

/// Exact rational number over 128-bit integers.
///
/// The codec evaluates code<->voltage mappings in this type so that
/// staircase increments, symmetry identities and midpoint ties are exact;
/// floating point appears only at the external boundary (to_double()).
/// Magnitudes stay far below the 128-bit limit for every value the codec
/// produces, including rationals lifted exactly from a double voltage.
class Ratio {
 public:
  using Int = __int128;

  constexpr Ratio() : num_(0), den_(1) {}
  constexpr Ratio(std::int64_t n) : num_(n), den_(1) {}
  constexpr Ratio(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
    if (d == 0) throw Error(Err::OutOfRange, "zero denominator");
    normalize();
  }

  /// Lifts a finite double exactly (every finite double is a rational).
  static Ratio from_double(double v) {
    if (!std::isfinite(v)) throw Error(Err::OutOfRange, "non-finite value");
    if (v == 0.0) return Ratio();
    int exp = 0;
    double frac = std::frexp(v, &exp);  // v = frac * 2^exp, |frac| in [0.5, 1)
    auto mant = static_cast<std::int64_t>(std::ldexp(frac, 53));  // exact
    int shift = exp - 53;
    Ratio r;
    r.num_ = mant;
    r.den_ = 1;
    if (shift >= 0) {
      while (shift-- > 0) r.num_ *= 2;
    } else {
      while (shift++ < 0) r.den_ *= 2;
    }
    r.normalize();
    return r;
  }

  double to_double() const {
    return static_cast<double>(static_cast<long double>(num_) /
                               static_cast<long double>(den_));
  }

  constexpr Int num() const { return num_; }
  constexpr Int den() const { return den_; }

  friend Ratio operator+(const Ratio& a, const Ratio& b) {
    return make(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Ratio operator-(const Ratio& a, const Ratio& b) {
    return make(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Ratio operator*(const Ratio& a, const Ratio& b) {
    return make(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend Ratio operator/(const Ratio& a, const Ratio& b) {
    if (b.num_ == 0) throw Error(Err::OutOfRange, "rational division by zero");
    return make(a.num_ * b.den_, a.den_ * b.num_);
  }
  Ratio operator-() const {
    Ratio r = *this;
    r.num_ = -r.num_;
    return r;
  }

  friend bool operator==(const Ratio& a, const Ratio& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Ratio& a, const Ratio& b) { return !(a == b); }
  friend bool operator<(const Ratio& a, const Ratio& b) {
    return a.num_ * b.den_ < b.num_ * a.den_;
  }
  friend bool operator>(const Ratio& a, const Ratio& b) { return b < a; }
  friend bool operator<=(const Ratio& a, const Ratio& b) { return !(b < a); }
  friend bool operator>=(const Ratio& a, const Ratio& b) { return !(a < b); }

  /// Largest integer <= value.
  std::int64_t floor() const {
    Int q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return static_cast<std::int64_t>(q);
  }

  std::string str() const {
    auto int128_str = [](Int v) {
      if (v == 0) return std::string("0");
      bool neg = v < 0;
      unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : v;
      std::string s;
      while (u) {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
      }
      return neg ? "-" + s : s;
    };
    return int128_str(num_) + "/" + int128_str(den_);
  }

 private:
  static Ratio make(Int n, Int d) {
    Ratio r;
    r.num_ = n;
    r.den_ = d;
    r.normalize();
    return r;
  }

  constexpr void normalize() {
    if (den_ == 0) {
      num_ = 0;
      den_ = 1;
      return;
    }
    if (den_ < 0) {
      den_ = -den_;
      num_ = -num_;
    }
    Int a = num_ < 0 ? -num_ : num_;
    Int b = den_;
    while (b != 0) {
      Int t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      num_ /= a;
      den_ /= a;
    }
    if (num_ == 0) den_ = 1;
  }

  Int num_;
  Int den_;
};

}  // namespace vanguard
