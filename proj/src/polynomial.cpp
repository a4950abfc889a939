#include "k3lab/polynomial.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "k3lab/error.hpp"

namespace k3lab::poly {

ExactPoly::ExactPoly(std::vector<Gaussian> coeffs) : c_(std::move(coeffs)) { trim(); }
ExactPoly::ExactPoly(const Gaussian& constant) : c_{constant} { trim(); }
ExactPoly::ExactPoly(long constant) : c_{Gaussian(constant)} { trim(); }

ExactPoly ExactPoly::linear(const Gaussian& root) { return ExactPoly({-root, Gaussian(1)}); }

void ExactPoly::trim() {
  while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
}

Gaussian ExactPoly::coeff(int k) const {
  if (k < 0 || k >= static_cast<int>(c_.size())) return Gaussian(0);
  return c_[k];
}

Gaussian ExactPoly::leading() const { return c_.empty() ? Gaussian(0) : c_.back(); }

Gaussian ExactPoly::operator()(const Gaussian& x) const {
  Gaussian acc(0);
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Complex ExactPoly::operator()(Complex x) const {
  Complex acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + it->to_complex();
  return acc;
}

ExactPoly ExactPoly::derivative() const {
  std::vector<Gaussian> d;
  for (std::size_t k = 1; k < c_.size(); ++k) d.push_back(Gaussian(static_cast<long>(k)) * c_[k]);
  return ExactPoly(std::move(d));
}

ExactPoly ExactPoly::monic() const {
  if (is_zero()) return *this;
  const Gaussian inv = Gaussian(1) / leading();
  return inv * *this;
}

ExactPoly ExactPoly::reversed(int cap) const {
  if (degree() > cap) throw PreconditionError("reversed: degree exceeds cap");
  std::vector<Gaussian> r(static_cast<std::size_t>(cap) + 1, Gaussian(0));
  for (int k = 0; k <= degree(); ++k) r[cap - k] = c_[k];
  return ExactPoly(std::move(r));
}

int ExactPoly::order_at_zero() const {
  if (is_zero()) throw PreconditionError("order_at_zero: zero polynomial");
  int k = 0;
  while (c_[k].is_zero()) ++k;
  return k;
}

std::vector<Complex> ExactPoly::to_complex() const {
  std::vector<Complex> out;
  out.reserve(c_.size());
  for (const auto& g : c_) out.push_back(g.to_complex());
  return out;
}

std::string ExactPoly::to_string(const std::string& var) const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int k = degree(); k >= 0; --k) {
    if (c_[k].is_zero()) continue;
    if (!first) os << " + ";
    first = false;
    const bool unit = c_[k] == Gaussian(1);
    if (k == 0 || !unit) os << c_[k].to_string();
    if (k > 0) {
      if (!unit) os << "*";
      os << var;
      if (k > 1) os << "^" << k;
    }
  }
  return os.str();
}

ExactPoly operator+(const ExactPoly& a, const ExactPoly& b) {
  std::vector<Gaussian> r(std::max(a.c_.size(), b.c_.size()), Gaussian(0));
  for (std::size_t k = 0; k < a.c_.size(); ++k) r[k] += a.c_[k];
  for (std::size_t k = 0; k < b.c_.size(); ++k) r[k] += b.c_[k];
  return ExactPoly(std::move(r));
}

ExactPoly operator-(const ExactPoly& a) {
  std::vector<Gaussian> r;
  for (const auto& g : a.c_) r.push_back(-g);
  return ExactPoly(std::move(r));
}

ExactPoly operator-(const ExactPoly& a, const ExactPoly& b) { return a + (-b); }

ExactPoly operator*(const ExactPoly& a, const ExactPoly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<Gaussian> r(a.c_.size() + b.c_.size() - 1, Gaussian(0));
  for (std::size_t i = 0; i < a.c_.size(); ++i) {
    if (a.c_[i].is_zero()) continue;
    for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
  }
  return ExactPoly(std::move(r));
}

ExactPoly operator*(const Gaussian& s, const ExactPoly& a) {
  std::vector<Gaussian> r;
  for (const auto& g : a.c_) r.push_back(s * g);
  return ExactPoly(std::move(r));
}

ExactPoly pow(const ExactPoly& base, unsigned exponent) {
  ExactPoly result(1);
  ExactPoly b = base;
  while (exponent != 0) {
    if (exponent & 1u) result *= b;
    exponent >>= 1;
    if (exponent != 0) b *= b;
  }
  return result;
}

DivMod divmod(const ExactPoly& a, const ExactPoly& b) {
  if (b.is_zero()) throw PreconditionError("polynomial division by zero");
  if (a.degree() < b.degree()) return {ExactPoly(), a};
  std::vector<Gaussian> rem = a.coeffs();
  std::vector<Gaussian> quo(static_cast<std::size_t>(a.degree() - b.degree()) + 1, Gaussian(0));
  const Gaussian inv = Gaussian(1) / b.leading();
  const int db = b.degree();
  for (int k = a.degree(); k >= db; --k) {
    if (rem[k].is_zero()) continue;
    const Gaussian q = rem[k] * inv;
    quo[k - db] = q;
    for (int j = 0; j <= db; ++j) rem[k - db + j] -= q * b.coeffs()[j];
  }
  return {ExactPoly(std::move(quo)), ExactPoly(std::move(rem))};
}

ExactPoly exact_div(const ExactPoly& a, const ExactPoly& b) {
  DivMod qr = divmod(a, b);
  if (!qr.remainder.is_zero()) throw PreconditionError("exact_div: non-zero remainder");
  return qr.quotient;
}

ExactPoly gcd(const ExactPoly& a, const ExactPoly& b) {
  ExactPoly x = a.monic(), y = b.monic();
  while (!y.is_zero()) {
    ExactPoly r = divmod(x, y).remainder.monic();
    x = std::move(y);
    y = std::move(r);
  }
  return x;
}

std::vector<ExactPoly> squarefree_decomposition(const ExactPoly& f) {
  std::vector<ExactPoly> out;
  if (f.degree() < 1) return out;
  const ExactPoly fp = f.derivative();
  const ExactPoly a0 = gcd(f, fp);
  ExactPoly b = exact_div(f, a0).monic();
  ExactPoly c = exact_div(fp, a0);
  c = (Gaussian(1) / exact_div(f, a0).leading()) * c;
  ExactPoly d = c - b.derivative();
  while (b.degree() >= 1) {
    const ExactPoly a = gcd(b, d);
    out.push_back(a);
    b = exact_div(b, a);
    c = exact_div(d, a);
    d = c - b.derivative();
  }
  return out;
}

std::vector<ExactPoly> coprime_basis(const std::vector<ExactPoly>& squarefree) {
  std::vector<ExactPoly> basis;
  for (const ExactPoly& input : squarefree) {
    ExactPoly g = input.monic();
    if (g.degree() < 1) continue;
    std::vector<ExactPoly> next;
    for (const ExactPoly& b : basis) {
      const ExactPoly d = gcd(b, g);
      if (d.degree() >= 1) {
        next.push_back(d);
        ExactPoly rest = exact_div(b, d);
        if (rest.degree() >= 1) next.push_back(rest.monic());
        g = exact_div(g, d).monic();
      } else {
        next.push_back(b);
      }
    }
    if (g.degree() >= 1) next.push_back(g);
    basis = std::move(next);
  }
  return basis;
}

namespace {

template <typename Poly, typename Scalar>
Poly mobius_impl(const Poly& f, int cap, const Scalar& a, const Scalar& b, const Scalar& c, const Scalar& d,
                 const Poly& one) {
  if (f.degree() > cap) throw PreconditionError("substitute_mobius: degree exceeds cap");
  const Poly num = Poly(std::vector<Scalar>{b, a});
  const Poly den = Poly(std::vector<Scalar>{d, c});
  // Powers of both linear forms, built once.
  std::vector<Poly> np{one}, dp{one};
  for (int k = 1; k <= cap; ++k) {
    np.push_back(np.back() * num);
    dp.push_back(dp.back() * den);
  }
  Poly out;
  for (int k = 0; k <= f.degree(); ++k) out = out + f.coeff(k) * (np[k] * dp[cap - k]);
  return out;
}

}  // namespace

ExactPoly substitute_mobius(const ExactPoly& f, int cap, const Gaussian& a, const Gaussian& b,
                            const Gaussian& c, const Gaussian& d) {
  return mobius_impl<ExactPoly, Gaussian>(f, cap, a, b, c, d, ExactPoly(1));
}

ComplexPoly::ComplexPoly(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {
  while (!c_.empty() && c_.back() == Complex{}) c_.pop_back();
}

Complex ComplexPoly::operator()(Complex x) const {
  Complex acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

ComplexPoly ComplexPoly::reversed(int cap) const {
  if (degree() > cap) throw PreconditionError("reversed: degree exceeds cap");
  std::vector<Complex> r(static_cast<std::size_t>(cap) + 1);
  for (int k = 0; k <= degree(); ++k) r[cap - k] = c_[k];
  return ComplexPoly(std::move(r));
}

std::vector<Complex> ComplexPoly::taylor_shift(Complex x0) const {
  // Repeated synthetic division by (t - x0).
  std::vector<Complex> a = c_;
  const int n = degree();
  for (int i = 0; i < n; ++i)
    for (int k = n - 1; k >= i; --k) a[k] += x0 * a[k + 1];
  return a;
}

double ComplexPoly::norm_inf() const {
  double m = 0;
  for (const auto& z : c_) m = std::max(m, std::abs(z));
  return m;
}

ComplexPoly operator+(const ComplexPoly& a, const ComplexPoly& b) {
  std::vector<Complex> r(std::max(a.c_.size(), b.c_.size()));
  for (std::size_t k = 0; k < a.c_.size(); ++k) r[k] += a.c_[k];
  for (std::size_t k = 0; k < b.c_.size(); ++k) r[k] += b.c_[k];
  return ComplexPoly(std::move(r));
}

ComplexPoly operator-(const ComplexPoly& a, const ComplexPoly& b) { return a + Complex(-1.0) * b; }

ComplexPoly operator*(const ComplexPoly& a, const ComplexPoly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<Complex> r(a.c_.size() + b.c_.size() - 1);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
  return ComplexPoly(std::move(r));
}

ComplexPoly operator*(Complex s, const ComplexPoly& a) {
  std::vector<Complex> r;
  for (const auto& z : a.c_) r.push_back(s * z);
  return ComplexPoly(std::move(r));
}

std::vector<Complex> roots(const ComplexPoly& f) {
  const int n = f.degree();
  if (n < 1) return {};
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
  const Complex lead = f.coeffs().back();
  for (int k = 0; k < n; ++k) companion(0, k) = -f.coeffs()[n - 1 - k] / lead;
  for (int k = 1; k < n; ++k) companion(k, k - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw ConvergenceError("roots: eigenvalue iteration failed", 0.0);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

ComplexPoly substitute_mobius(const ComplexPoly& f, int cap, Complex a, Complex b, Complex c, Complex d) {
  return mobius_impl<ComplexPoly, Complex>(f, cap, a, b, c, d, ComplexPoly({Complex(1.0)}));
}

}  // namespace k3lab::poly
