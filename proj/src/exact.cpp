#include "dimerlab/exact.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dimerlab {

Qr2 Qr2::inv() const {
  // 1/(x + y s2) = (x - y s2) / (x^2 - 2 y^2); denominator vanishes only at 0
  // because sqrt(2) is irrational.
  Rational n = x * x - 2 * y * y;
  if (sgn(n) == 0) {
    if (is_zero()) throw std::domain_error("Qr2: division by zero");
    throw std::logic_error("Qr2: norm vanished on nonzero element");
  }
  return {x / n, -y / n};
}

double Qr2::to_double() const {
  return x.get_d() + y.get_d() * std::sqrt(2.0);
}

int Qr2::sign() const {
  int sx = sgn(x), sy = sgn(y);
  if (sy == 0) return sx;
  if (sx == 0) return sy;
  if (sx == sy) return sx;
  // x and 2 y^2/x have opposite signs; compare x^2 with 2 y^2
  Rational d = x * x - 2 * y * y;
  return sgn(d) * sx;
}

ExactScalar ExactScalar::inv() const {
  Qr2 n = abs2();
  if (n.is_zero()) throw std::domain_error("ExactScalar: division by zero");
  Qr2 ninv = n.inv();
  return {re * ninv, -(im * ninv)};
}

namespace {
void append_rat(std::ostringstream& os, const Rational& r, const char* unit,
                bool& first) {
  if (sgn(r) == 0) return;
  if (!first && sgn(r) > 0) os << "+";
  os << r.get_str();
  if (unit[0]) os << " " << unit;
  first = false;
}
}  // namespace

std::string ExactScalar::str() const {
  std::ostringstream os;
  bool first = true;
  append_rat(os, re.x, "", first);
  append_rat(os, re.y, "s2", first);
  append_rat(os, im.x, "i", first);
  append_rat(os, im.y, "i s2", first);
  if (first) os << "0";
  return os.str();
}

namespace {
size_t rat_bits(const Rational& r) {
  return mpz_sizeinbase(r.get_num_mpz_t(), 2) +
         mpz_sizeinbase(r.get_den_mpz_t(), 2);
}
}  // namespace

size_t ExactScalar::bit_size() const {
  return rat_bits(re.x) + rat_bits(re.y) + rat_bits(im.x) + rat_bits(im.y);
}

}  // namespace dimerlab
