#pragma once

#include <complex>
#include <cstdint>
#include <string>

#include <gmpxx.h>

namespace dimerlab {

using Rational = mpq_class;

// Element of Q(sqrt 2): x + y*sqrt(2).
struct Qr2 {
  Rational x{0};
  Rational y{0};

  Qr2() = default;
  Qr2(long v) : x(v) {}
  Qr2(Rational v) : x(std::move(v)) {}
  Qr2(Rational xx, Rational yy) : x(std::move(xx)), y(std::move(yy)) {}

  bool is_zero() const { return sgn(x) == 0 && sgn(y) == 0; }
  bool operator==(const Qr2& o) const { return x == o.x && y == o.y; }

  Qr2 operator-() const { return {-x, -y}; }
  Qr2 operator+(const Qr2& o) const { return {x + o.x, y + o.y}; }
  Qr2 operator-(const Qr2& o) const { return {x - o.x, y - o.y}; }
  Qr2 operator*(const Qr2& o) const {
    return {x * o.x + 2 * y * o.y, x * o.y + y * o.x};
  }
  // Galois conjugate sqrt(2) -> -sqrt(2).
  Qr2 bar2() const { return {x, -y}; }
  Qr2 inv() const;
  Qr2 operator/(const Qr2& o) const { return *this * o.inv(); }

  double to_double() const;
  int sign() const;  // sign of the real number x + y*sqrt(2)
};

// Element of the field Q(i, sqrt 2): re + i*im with re, im in Q(sqrt 2).
// This is the smallest field containing the four unit weights {1,i,l,lbar}
// of the signed adjacency stencil, so all elimination stays exact.
struct ExactScalar {
  Qr2 re;
  Qr2 im;

  ExactScalar() = default;
  ExactScalar(long v) : re(v) {}
  ExactScalar(Rational v) : re(std::move(v)) {}
  ExactScalar(Qr2 r) : re(std::move(r)) {}
  ExactScalar(Qr2 r, Qr2 i) : re(std::move(r)), im(std::move(i)) {}

  static ExactScalar zero() { return {}; }
  static ExactScalar one() { return ExactScalar(1L); }
  static ExactScalar i() { return {Qr2(0L), Qr2(1L)}; }
  static ExactScalar sqrt2() { return {Qr2(Rational(0), Rational(1)), Qr2(0L)}; }
  // lambda = exp(i pi/4) = (1+i)/sqrt(2)
  static ExactScalar lambda() {
    Qr2 h(Rational(0), Rational(1, 2));
    return {h, h};
  }
  static ExactScalar lambda_bar() {
    Qr2 h(Rational(0), Rational(1, 2));
    return {h, -h};
  }
  static ExactScalar from_rational(const Rational& r) { return ExactScalar(r); }

  bool is_zero() const { return re.is_zero() && im.is_zero(); }
  bool is_real() const { return im.is_zero(); }
  bool operator==(const ExactScalar& o) const { return re == o.re && im == o.im; }

  ExactScalar operator-() const { return {-re, -im}; }
  ExactScalar operator+(const ExactScalar& o) const { return {re + o.re, im + o.im}; }
  ExactScalar operator-(const ExactScalar& o) const { return {re - o.re, im - o.im}; }
  ExactScalar operator*(const ExactScalar& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  ExactScalar conj() const { return {re, -im}; }
  ExactScalar inv() const;
  ExactScalar operator/(const ExactScalar& o) const { return *this * o.inv(); }

  ExactScalar& operator+=(const ExactScalar& o) { *this = *this + o; return *this; }
  ExactScalar& operator-=(const ExactScalar& o) { *this = *this - o; return *this; }
  ExactScalar& operator*=(const ExactScalar& o) { *this = *this * o; return *this; }

  std::complex<double> to_complex() const { return {re.to_double(), im.to_double()}; }

  // |z|^2 = z * conj(z); always a nonnegative element of Q(sqrt 2).
  Qr2 abs2() const { return re * re + im * im; }

  // Lossless text form "a/b + c/d s2 + e/f i + g/h i s2".
  std::string str() const;

  // Rough size of the representation, used for pivot choice.
  size_t bit_size() const;
};

}  // namespace dimerlab
