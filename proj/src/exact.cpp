#include "k3lab/exact.hpp"

#include "k3lab/error.hpp"

namespace k3lab {

Gaussian operator/(const Gaussian& a, const Gaussian& b) {
  if (b.is_zero()) throw PreconditionError("division by zero in Q(i)");
  const Rational n = b.norm();
  return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
}

Gaussian pow(const Gaussian& base, unsigned exponent) {
  Gaussian result(1);
  Gaussian b = base;
  while (exponent != 0) {
    if (exponent & 1u) result *= b;
    b *= b;
    exponent >>= 1;
  }
  return result;
}

std::string Gaussian::to_string() const {
  if (sgn(im) == 0) return re.get_str();
  if (sgn(re) == 0) return im.get_str() + "*i";
  std::string s = "(" + re.get_str();
  s += sgn(im) < 0 ? " - " : " + ";
  s += Rational(abs(im)).get_str() + "*i)";
  return s;
}

}  // namespace k3lab
