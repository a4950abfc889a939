#pragma once

// Univariate polynomials in t, exactly over Q(i) and in complex doubles.
// Coefficient vectors are little-endian (index k holds the t^k coefficient)
// and kept trimmed, so the zero polynomial has no coefficients.

#include <complex>
#include <string>
#include <vector>

#include "k3lab/exact.hpp"

namespace k3lab::poly {

using Complex = std::complex<double>;

class ExactPoly {
 public:
  ExactPoly() = default;
  explicit ExactPoly(std::vector<Gaussian> coeffs);
  ExactPoly(const Gaussian& constant);  // NOLINT(google-explicit-constructor)
  ExactPoly(long constant);  // NOLINT(google-explicit-constructor)

  static ExactPoly t() { return ExactPoly({Gaussian(0), Gaussian(1)}); }
  /// (t - root).
  static ExactPoly linear(const Gaussian& root);

  bool is_zero() const { return c_.empty(); }
  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<Gaussian>& coeffs() const { return c_; }
  /// Coefficient of t^k, zero beyond the degree.
  Gaussian coeff(int k) const;
  Gaussian leading() const;

  Gaussian operator()(const Gaussian& x) const;
  Complex operator()(Complex x) const;

  ExactPoly derivative() const;
  ExactPoly monic() const;
  /// t^cap f(1/t): the section in the chart at infinity.
  ExactPoly reversed(int cap) const;
  /// Number of leading zero coefficients relative to the cap: the order at infinity.
  int order_at_infinity(int cap) const { return is_zero() ? cap + 1 : cap - degree(); }
  /// Multiplicity of t = 0.
  int order_at_zero() const;

  std::vector<Complex> to_complex() const;
  std::string to_string(const std::string& var = "t") const;

  friend ExactPoly operator+(const ExactPoly& a, const ExactPoly& b);
  friend ExactPoly operator-(const ExactPoly& a, const ExactPoly& b);
  friend ExactPoly operator-(const ExactPoly& a);
  friend ExactPoly operator*(const ExactPoly& a, const ExactPoly& b);
  friend ExactPoly operator*(const Gaussian& s, const ExactPoly& a);
  ExactPoly& operator+=(const ExactPoly& b) { return *this = *this + b; }
  ExactPoly& operator-=(const ExactPoly& b) { return *this = *this - b; }
  ExactPoly& operator*=(const ExactPoly& b) { return *this = *this * b; }
  friend bool operator==(const ExactPoly& a, const ExactPoly& b) { return a.c_ == b.c_; }

 private:
  void trim();
  std::vector<Gaussian> c_;
};

ExactPoly pow(const ExactPoly& base, unsigned exponent);

struct DivMod {
  ExactPoly quotient;
  ExactPoly remainder;
};
/// Throws PreconditionError when dividing by zero.
DivMod divmod(const ExactPoly& a, const ExactPoly& b);
/// Exact quotient; throws PreconditionError if the remainder is non-zero.
ExactPoly exact_div(const ExactPoly& a, const ExactPoly& b);
/// Monic gcd; gcd(0, 0) = 0.
ExactPoly gcd(const ExactPoly& a, const ExactPoly& b);
/// Yun's algorithm: f = lc(f) * prod_i factors[i]^(i+1) with squarefree,
/// pairwise coprime, monic factors (some possibly constant 1).
std::vector<ExactPoly> squarefree_decomposition(const ExactPoly& f);
/// Pairwise coprime squarefree polynomials whose products generate the
/// inputs: every input (assumed squarefree) is a product of a subset.
std::vector<ExactPoly> coprime_basis(const std::vector<ExactPoly>& squarefree);

/// Binary form of degree `cap` under t -> (a t + b) / (c t + d):
/// sum_k f_k (a t + b)^k (c t + d)^(cap - k).
ExactPoly substitute_mobius(const ExactPoly& f, int cap, const Gaussian& a, const Gaussian& b,
                            const Gaussian& c, const Gaussian& d);

/// Complex-coefficient polynomial with the same layout as ExactPoly.
class ComplexPoly {
 public:
  ComplexPoly() = default;
  explicit ComplexPoly(std::vector<Complex> coeffs);

  bool is_zero() const { return c_.empty(); }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<Complex>& coeffs() const { return c_; }
  Complex coeff(int k) const { return k >= 0 && k < static_cast<int>(c_.size()) ? c_[k] : Complex{}; }
  Complex operator()(Complex x) const;
  ComplexPoly reversed(int cap) const;
  /// Coefficients of f(x0 + u) in powers of u.
  std::vector<Complex> taylor_shift(Complex x0) const;
  /// max |coefficient|.
  double norm_inf() const;

  friend ComplexPoly operator+(const ComplexPoly& a, const ComplexPoly& b);
  friend ComplexPoly operator-(const ComplexPoly& a, const ComplexPoly& b);
  friend ComplexPoly operator*(const ComplexPoly& a, const ComplexPoly& b);
  friend ComplexPoly operator*(Complex s, const ComplexPoly& a);

 private:
  std::vector<Complex> c_;
};

/// Eigenvalues of the companion matrix; empty for constants.
std::vector<Complex> roots(const ComplexPoly& f);
ComplexPoly substitute_mobius(const ComplexPoly& f, int cap, Complex a, Complex b, Complex c, Complex d);

}  // namespace k3lab::poly
