#include "k3lab/weierstrass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "k3lab/error.hpp"

namespace k3lab::weierstrass {

using poly::coprime_basis;
using poly::squarefree_decomposition;

WeierstrassData WeierstrassData::exact(ExactPoly h8, ExactPoly h12) {
  if (h8.degree() > kCap8) throw PreconditionError("h8 has degree above 8");
  if (h12.degree() > kCap12) throw PreconditionError("h12 has degree above 12");
  if (h8.is_zero() && h12.is_zero()) throw PreconditionError("h8 and h12 are both identically zero");
  WeierstrassData w;
  w.mode_ = Mode::Exact;
  w.n8_ = ComplexPoly(h8.to_complex());
  w.n12_ = ComplexPoly(h12.to_complex());
  w.h8_ = std::move(h8);
  w.h12_ = std::move(h12);
  return w;
}

WeierstrassData WeierstrassData::numeric(ComplexPoly h8, ComplexPoly h12) {
  if (h8.degree() > kCap8) throw PreconditionError("h8 has degree above 8");
  if (h12.degree() > kCap12) throw PreconditionError("h12 has degree above 12");
  if (h8.is_zero() && h12.is_zero()) throw PreconditionError("h8 and h12 are both identically zero");
  WeierstrassData w;
  w.mode_ = Mode::Numeric;
  w.n8_ = std::move(h8);
  w.n12_ = std::move(h12);
  return w;
}

namespace {

std::string complex_poly_string(const ComplexPoly& p) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (int k = p.degree(); k >= 0; --k) {
    const Complex c = p.coeff(k);
    if (c == Complex{}) continue;
    if (!first) os << " + ";
    first = false;
    if (c.imag() == 0.0) {
      os << c.real();
    } else {
      os << "(" << c.real() << (c.imag() < 0 ? " - " : " + ") << std::abs(c.imag()) << "*i)";
    }
    if (k > 0) os << "*t";
    if (k > 1) os << "^" << k;
  }
  return os.str();
}

std::string format_complex(Complex z) {
  std::ostringstream os;
  os.precision(12);
  os << z.real();
  if (z.imag() != 0.0) os << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

}  // namespace

std::string to_string(const WeierstrassData& w) {
  if (w.mode() == Mode::Exact) return "h8 = " + w.h8().to_string() + "; h12 = " + w.h12().to_string();
  return "h8 = " + complex_poly_string(w.h8_numeric()) + "; h12 = " + complex_poly_string(w.h12_numeric());
}

ExactPoly discriminant(const ExactPoly& h8, const ExactPoly& h12) {
  return h8 * h8 * h8 - Gaussian(27) * (h12 * h12);
}

Discriminant discriminant(const WeierstrassData& w, const NumericOptions& opt) {
  Discriminant d;
  d.mode = w.mode();
  if (w.mode() == Mode::Exact) {
    d.exact = discriminant(w.h8(), w.h12());
    d.numeric = ComplexPoly(d.exact.to_complex());
    d.identically_zero = d.exact.is_zero();
    return d;
  }
  const ComplexPoly cube = w.h8_numeric() * w.h8_numeric() * w.h8_numeric();
  const ComplexPoly square = Complex(27.0) * (w.h12_numeric() * w.h12_numeric());
  d.numeric = cube - square;
  const double scale = cube.norm_inf() + square.norm_inf();
  d.identically_zero = d.numeric.norm_inf() <= opt.tol * scale;
  if (d.identically_zero) d.numeric = ComplexPoly();
  return d;
}

std::string Point::label() const {
  if (at_infinity) return "inf";
  if (factor.degree() == 1) return "t = " + (-factor.coeff(0)).to_string();
  if (factor.degree() > 1) return "roots of " + factor.to_string();
  if (locations.size() == 1) return "t ~ " + format_complex(locations.front());
  return "?";
}

namespace {

// ---------------------------------------------------------------- exact mode

struct Decomposed {
  bool zero = false;
  std::vector<ExactPoly> parts;  // parts[i] has multiplicity i + 1
};

Decomposed decompose(const ExactPoly& f) {
  Decomposed d;
  d.zero = f.is_zero();
  if (!d.zero) d.parts = squarefree_decomposition(f);
  return d;
}

int exact_order(const Decomposed& d, const ExactPoly& factor) {
  if (d.zero) return kInfiniteOrder;
  for (std::size_t i = 0; i < d.parts.size(); ++i)
    if (poly::gcd(d.parts[i], factor).degree() >= 1) return static_cast<int>(i) + 1;
  return 0;
}

int order_at_infinity(bool zero, int degree, int cap) { return zero ? kInfiniteOrder : cap - degree; }

OrderTable exact_orders(const WeierstrassData& w) {
  const ExactPoly delta = discriminant(w.h8(), w.h12());
  const Decomposed d8 = decompose(w.h8()), d12 = decompose(w.h12()), dd = decompose(delta);
  OrderTable table;
  table.h8_zero = d8.zero;
  table.h12_zero = d12.zero;
  table.delta_zero = dd.zero;

  std::vector<ExactPoly> pieces;
  for (const Decomposed* d : {&d8, &d12, &dd}) pieces.insert(pieces.end(), d->parts.begin(), d->parts.end());
  for (const ExactPoly& b : coprime_basis(pieces)) {
    PointOrders e;
    e.point.factor = b;
    e.point.locations = poly::roots(ComplexPoly(b.to_complex()));
    if (b.degree() == 1) e.point.locations = {(-b.coeff(0)).to_complex()};
    e.orders = {exact_order(d8, b), exact_order(d12, b), exact_order(dd, b)};
    table.entries.push_back(std::move(e));
  }
  const Orders inf{order_at_infinity(d8.zero, w.h8().degree(), kCap8),
                   order_at_infinity(d12.zero, w.h12().degree(), kCap12),
                   order_at_infinity(dd.zero, delta.degree(), kCapDelta)};
  const auto finite_positive = [](int v) { return v > 0 && v < kInfiniteOrder; };
  if (finite_positive(inf.v8) || finite_positive(inf.v12) || finite_positive(inf.vdelta)) {
    PointOrders e;
    e.point.at_infinity = true;
    e.orders = inf;
    table.entries.push_back(std::move(e));
  }
  return table;
}

// -------------------------------------------------------------- numeric mode

// Coefficient magnitudes |c_i| as a polynomial.
ComplexPoly magnitudes(const ComplexPoly& f) {
  std::vector<Complex> c;
  for (const auto& z : f.coeffs()) c.emplace_back(std::abs(z));
  return ComplexPoly(c);
}

ComplexPoly drop_low(const ComplexPoly& f, int n) {
  if (n > f.degree()) return {};
  return ComplexPoly(std::vector<Complex>(f.coeffs().begin() + n, f.coeffs().end()));
}

ComplexPoly raise(const ComplexPoly& f, int n) {
  std::vector<Complex> c(static_cast<std::size_t>(n), Complex{});
  c.insert(c.end(), f.coeffs().begin(), f.coeffs().end());
  return ComplexPoly(c);
}

int low_zeros(const ComplexPoly& f) {
  int z = 0;
  while (z <= f.degree() && f.coeff(z) == Complex{}) ++z;
  return z;
}

// One summand weight * value * magnitude of the first-order error of a
// section: `value` is an exact factor, `magnitude` the coefficient sizes of a
// relative perturbation. For the discriminant these are 3 h8^2 |h8| and
// 54 h12 |h12|, so the bound shrinks where h8 and h12 vanish together.
struct ErrorTerm {
  double weight;
  ComplexPoly value, magnitude;
};

// A chart polynomial with its exact zero low-order coefficients split off.
// The eigenvalue solver would smear an exact root at 0 over a circle of
// radius eps^(1/m), so it is counted here instead.
struct Deflated {
  ComplexPoly rest;
  std::vector<ErrorTerm> terms;  // deflated alike
  int zeros = 0;
};

Deflated deflate(const ComplexPoly& f, const std::vector<ErrorTerm>& terms) {
  Deflated d;
  d.zeros = low_zeros(f);
  d.rest = drop_low(f, d.zeros);
  for (const ErrorTerm& e : terms) {
    if (e.value.is_zero() || e.magnitude.is_zero()) continue;
    const int za = low_zeros(e.value), zb = low_zeros(e.magnitude);
    d.terms.push_back({e.weight, drop_low(e.value, za),
                       raise(drop_low(e.magnitude, zb), std::max(0, za + zb - d.zeros))});
  }
  return d;
}

// Numerical multiplicity at x: leading Taylor coefficients that lie within
// tol of their propagated error bound.
int numeric_order(const Deflated& f, Complex x, double tol) {
  const std::vector<Complex> a = f.rest.taylor_shift(x);
  const std::size_t n = a.size();
  std::vector<double> bound(n, 0.0);
  for (const ErrorTerm& e : f.terms) {
    const std::vector<Complex> v = e.value.taylor_shift(x);
    const std::vector<Complex> m = e.magnitude.taylor_shift(std::abs(x));
    for (std::size_t i = 0; i < v.size() && i < n; ++i)
      for (std::size_t j = 0; j < m.size() && i + j < n; ++j)
        bound[i + j] += e.weight * std::abs(v[i]) * std::abs(m[j]);
  }
  std::size_t k = 0;
  while (k < n && std::abs(a[k]) <= tol * bound[k]) ++k;
  return static_cast<int>(k);
}

struct Cluster {
  Complex centre;
  int size = 0;
  double spread = 0;
};

// Groups computed roots into clusters, largest first. A perturbed m-fold root
// spreads its members over a small ring, so candidate groups are the k roots
// nearest to a centre that is moved to their mean until it settles. A group is
// valid when the Taylor test at its centre confirms a root of at least its
// size and every other root stays clear of the ring; the tightest valid group
// of the largest size wins. Only roots with
// |z| <= reach take part.
std::vector<Cluster> cluster_roots(const Deflated& f, double tol, double reach) {
  std::vector<Cluster> out;
  if (f.zeros > 0) out.push_back({Complex{}, f.zeros, 0.0});

  std::vector<Complex> all;
  for (const Complex& z : poly::roots(f.rest))
    if (std::abs(z) <= reach) all.push_back(z);
  const int n = static_cast<int>(all.size());
  std::vector<bool> taken(all.size(), false);

  auto nearest = [&](Complex centre, int k) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (!taken[i]) idx.push_back(i);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                      [&](int u, int v) { return std::abs(all[u] - centre) < std::abs(all[v] - centre); });
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  auto describe = [&](const std::vector<int>& idx) {
    Cluster c;
    c.size = static_cast<int>(idx.size());
    for (int i : idx) c.centre += all[i];
    c.centre /= static_cast<double>(c.size);
    for (int i : idx) c.spread = std::max(c.spread, std::abs(all[i] - c.centre));
    return c;
  };
  // The mean of a cluster carries the eigenvalue error; an m-fold root is a
  // simple root of the (m-1)-th derivative, so a few Newton steps on it pin
  // the centre down.
  auto refine = [&](Cluster c) {
    Complex x = c.centre;
    for (int it = 0; it < 4; ++it) {
      const std::vector<Complex> a = f.rest.taylor_shift(x);
      if (static_cast<int>(a.size()) <= c.size || a[c.size] == Complex{}) break;
      const Complex step = a[c.size - 1] / (static_cast<double>(c.size) * a[c.size]);
      if (!std::isfinite(std::abs(step))) break;
      x -= step;
    }
    if (std::abs(x - c.centre) <= c.spread) c.centre = x;
    return c;
  };
  auto isolated = [&](const std::vector<int>& idx, const Cluster& c) {
    for (int i = 0; i < n; ++i)
      if (!std::binary_search(idx.begin(), idx.end(), i) && c.spread >= 0.75 * std::abs(all[i] - c.centre)) return false;
    return true;
  };

  for (int left = n; left > 0;) {
    std::vector<int> found;
    for (int k = left; k >= 2 && found.empty(); --k) {
      std::set<std::vector<int>> tried;
      double tightest = std::numeric_limits<double>::infinity();
      for (int seed = 0; seed < n; ++seed) {
        if (taken[seed]) continue;
        std::vector<int> idx = nearest(all[seed], k);
        for (int it = 0; it < 10; ++it) {
          std::vector<int> next = nearest(describe(idx).centre, k);
          if (next == idx) break;
          idx = std::move(next);
        }
        if (!tried.insert(idx).second) continue;
        const Cluster c = describe(idx);
        if (c.spread < tightest && isolated(idx, c) && numeric_order(f, refine(c).centre, tol) >= k) {
          found = idx;
          tightest = c.spread;
        }
      }
    }
    if (found.empty()) {
      for (int i = 0; i < n; ++i)
        if (!taken[i]) out.push_back({all[i], 1, 0.0});
      break;
    }
    out.push_back(refine(describe(found)));
    for (int i : found) taken[i] = true;
    left -= static_cast<int>(found.size());
  }
  return out;
}

struct Candidate {
  Complex t;              // finite position (ignored at infinity)
  bool at_infinity = false;
  double spread = 0;      // in the t-chart
  int size = 0;
};

// Distance between two candidates below which they are taken to be one point.
double merge_radius(const Candidate& a, const Candidate& b, double tol) {
  const double scale = std::max({1.0, std::abs(a.t), std::abs(b.t)});
  return std::sqrt(tol) * scale * scale + 0.1 * (a.spread + b.spread);
}

bool same_point(const Candidate& a, const Candidate& b, double tol) {
  if (a.at_infinity || b.at_infinity) {
    if (a.at_infinity && b.at_infinity) return true;
    const Candidate& finite = a.at_infinity ? b : a;
    return std::abs(1.0 / finite.t) <= std::sqrt(tol);
  }
  return std::abs(a.t - b.t) <= merge_radius(a, b, tol);
}

// Points of one section on P^1. The t-chart owns |t| <= 1 (with slack for
// points on the unit circle); s-chart clusters
// are added unless the t-chart already reported them. Both charts look out to
// |coordinate| 2, so a cluster near the unit circle is seen whole from either.
std::vector<Candidate> section_points(const Deflated& t_chart, const Deflated& s_chart, double tol) {
  std::vector<Candidate> pts;
  for (const Cluster& c : cluster_roots(t_chart, tol, 2.0))
    if (std::abs(c.centre) <= 1.0 + 1e-3) pts.push_back({c.centre, false, c.spread, c.size});
  const std::size_t owned = pts.size();
  for (const Cluster& c : cluster_roots(s_chart, tol, 2.0)) {
    if (std::abs(c.centre) > 1.2) continue;
    Candidate cand;
    cand.size = c.size;
    if (std::abs(c.centre) <= tol) {
      cand.at_infinity = true;
    } else {
      cand.t = 1.0 / c.centre;
      cand.spread = c.spread / std::norm(c.centre);
    }
    // Inside the disc of an owned cluster: a fragment of it seen from the other chart.
    const bool seen = std::any_of(pts.begin(), pts.begin() + static_cast<long>(owned), [&](const Candidate& p) {
      return same_point(p, cand, tol) ||
             (!cand.at_infinity && std::abs(p.t - cand.t) <= p.spread / 0.75 + cand.spread);
    });
    if (!seen) pts.push_back(cand);
  }
  return pts;
}

OrderTable numeric_orders(const WeierstrassData& w, const NumericOptions& opt) {
  const ComplexPoly& h8 = w.h8_numeric();
  const ComplexPoly& h12 = w.h12_numeric();
  const Discriminant disc = discriminant(w, opt);
  OrderTable table;
  table.h8_zero = h8.is_zero();
  table.h12_zero = h12.is_zero();
  table.delta_zero = disc.identically_zero;

  // Error terms per chart; the s-chart uses the reversed forms. The last
  // discriminant term is a floor for second-order and rounding effects.
  const ComplexPoly one({Complex(1)}), m8 = magnitudes(h8), m12 = magnitudes(h12);
  const ComplexPoly h8sq = h8 * h8, m_all = m8 * m8 * m8 + Complex(27) * (m12 * m12);
  auto terms = [&](int k, bool s_chart) -> std::vector<ErrorTerm> {
    auto r = [&](const ComplexPoly& p, int cap) { return s_chart ? p.reversed(cap) : p; };
    if (k == 0) return {{1.0, one, r(m8, kCap8)}};
    if (k == 1) return {{1.0, one, r(m12, kCap12)}};
    return {{3.0, r(h8sq, 2 * kCap8), r(m8, kCap8)},
            {54.0, r(h12, kCap12), r(m12, kCap12)},
            {std::sqrt(opt.tol), one, r(m_all, kCapDelta)}};
  };
  struct Section {
    const char* name;
    ComplexPoly f;
    int cap;
  };
  const Section sections[] = {{"h8", h8, kCap8}, {"h12", h12, kCap12}, {"discriminant", disc.numeric, kCapDelta}};
  const auto zero = [&](int k) { return k == 2 ? disc.identically_zero : sections[k].f.is_zero(); };

  struct Merged {
    Candidate where;
    int orders[3] = {0, 0, 0};
  };
  std::vector<Merged> points;
  std::ostringstream diag;
  bool twice = false;
  int totals[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k) {
    if (zero(k)) continue;
    const Section& s = sections[k];
    const auto pts = section_points(deflate(s.f, terms(k, false)), deflate(s.f.reversed(s.cap), terms(k, true)), opt.tol);
    for (const Candidate& c : pts) {
      totals[k] += c.size;
      auto it = std::find_if(points.begin(), points.end(),
                             [&](const Merged& p) { return same_point(p.where, c, opt.tol); });
      if (it == points.end()) {
        points.push_back({c, {0, 0, 0}});
        it = std::prev(points.end());
      } else if (it->orders[k] > 0) {
        twice = true;
      } else if (c.spread < it->where.spread) {
        it->where.t = c.t;
        it->where.spread = c.spread;
      }
      it->orders[k] += c.size;
    }
    if (totals[k] != s.cap) diag << s.name << ": orders sum to " << totals[k] << ", expected " << s.cap << "; ";
  }

  for (const Merged& p : points) {
    PointOrders e;
    e.point.at_infinity = p.where.at_infinity;
    if (!p.where.at_infinity) e.point.locations = {p.where.t};
    int v[3];
    for (int k = 0; k < 3; ++k) v[k] = zero(k) ? kInfiniteOrder : p.orders[k];
    e.orders = {v[0], v[1], v[2]};
    table.entries.push_back(std::move(e));
  }

  // Condition estimate: cluster spread relative to the distance to the nearest other point.
  for (const Merged& p : points) {
    if (p.where.at_infinity || p.where.spread == 0.0) continue;
    double sep = std::numeric_limits<double>::infinity();
    for (const Merged& q : points)
      if (&q != &p && !q.where.at_infinity) sep = std::min(sep, std::abs(q.where.t - p.where.t));
    if (std::isfinite(sep)) table.condition_estimate = std::max(table.condition_estimate, p.where.spread / sep);
  }
  if (table.condition_estimate > 0.5)
    diag << "root clusters overlap (condition estimate " << table.condition_estimate << "); ";
  if (twice) diag << "two clusters of one section merged into a point; ";
  table.diagnostics = diag.str();
  table.ill_conditioned = !table.diagnostics.empty();
  return table;
}

bool at_least(int v, int bound) { return v >= bound; }

}  // namespace

OrderTable vanishing_orders(const WeierstrassData& w, const NumericOptions& opt) {
  return w.mode() == Mode::Exact ? exact_orders(w) : numeric_orders(w, opt);
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::Stable:
      return "stable";
    case Stability::SemistableNotStable:
      return "semistable-not-stable";
    case Stability::Unstable:
      return "unstable";
  }
  return "?";
}

std::string NormalForm::to_string() const {
  if (exact) return "[" + a.to_string() + " : " + b.to_string() + "]";
  return "[" + format_complex(a_numeric) + " : " + format_complex(b_numeric) + "]";
}

StabilityReport classify_stability(const WeierstrassData& w, const NumericOptions& opt) {
  StabilityReport rep;
  rep.orders = vanishing_orders(w, opt);
  rep.delta_identically_zero = rep.orders.delta_zero;

  std::vector<PointOrders> unstable, non_stable;
  std::size_t non_stable_points = 0;
  for (const PointOrders& e : rep.orders.entries) {
    if (at_least(e.orders.v8, 5) && at_least(e.orders.v12, 7)) unstable.push_back(e);
    if (at_least(e.orders.v8, 4) && at_least(e.orders.v12, 6)) {
      non_stable.push_back(e);
      non_stable_points += e.point.count();
    }
  }
  if (!unstable.empty()) {
    rep.cls = Stability::Unstable;
    rep.polystable = false;
    rep.witnesses = std::move(unstable);
    return rep;
  }
  if (non_stable.empty()) {
    rep.cls = Stability::Stable;
    rep.polystable = true;
    return rep;
  }
  rep.cls = Stability::SemistableNotStable;
  rep.witnesses = non_stable;
  rep.polystable = non_stable_points >= 2;
  if (!rep.polystable) return rep;

  // With v8 >= 4, v12 >= 6 at two points the degree caps force
  // h8 = A P^4 and h12 = C P^6 for the monic P vanishing at the finite ones.
  int finite = 0;
  for (const PointOrders& e : non_stable)
    if (!e.point.at_infinity) finite += static_cast<int>(e.point.count());
  NormalForm nf;
  if (w.mode() == Mode::Exact) {
    nf.exact = true;
    nf.a = w.h8().coeff(4 * finite);
    nf.b = w.h12().coeff(6 * finite);
    nf.a_numeric = nf.a.to_complex();
    nf.b_numeric = nf.b.to_complex();
    if (!nf.b.is_zero()) {
      nf.invariant = nf.a * nf.a * nf.a / (nf.b * nf.b);
      nf.invariant_numeric = nf.invariant->to_complex();
    }
  } else {
    nf.a_numeric = w.h8_numeric().coeff(4 * finite);
    nf.b_numeric = w.h12_numeric().coeff(6 * finite);
    if (std::abs(nf.b_numeric) > 0.0)
      nf.invariant_numeric = nf.a_numeric * nf.a_numeric * nf.a_numeric / (nf.b_numeric * nf.b_numeric);
  }
  rep.normal_form = nf;
  return rep;
}

bool is_jacobian_k3(const WeierstrassData& w, const NumericOptions& opt) {
  const StabilityReport r = classify_stability(w, opt);
  return !r.delta_identically_zero && r.cls == Stability::Stable;
}

WeierstrassData group_act(const WeierstrassData& w, const Matrix2& m, const Gaussian& lambda) {
  if (m.a * m.d - m.b * m.c != Gaussian(1)) throw PreconditionError("group_act: determinant is not 1");
  if (w.mode() == Mode::Numeric)
    return group_act(w, Matrix2c{m.a.to_complex(), m.b.to_complex(), m.c.to_complex(), m.d.to_complex()},
                     lambda.to_complex());
  const Gaussian l2 = lambda * lambda, l3 = l2 * lambda;
  return WeierstrassData::exact(l2 * poly::substitute_mobius(w.h8(), kCap8, m.a, m.b, m.c, m.d),
                                l3 * poly::substitute_mobius(w.h12(), kCap12, m.a, m.b, m.c, m.d));
}

WeierstrassData group_act(const WeierstrassData& w, const Matrix2c& m, Complex lambda) {
  if (std::abs(m.a * m.d - m.b * m.c - 1.0) > 1e-12) throw PreconditionError("group_act: determinant is not 1");
  const Complex l2 = lambda * lambda, l3 = l2 * lambda;
  return WeierstrassData::numeric(l2 * poly::substitute_mobius(w.h8_numeric(), kCap8, m.a, m.b, m.c, m.d),
                                  l3 * poly::substitute_mobius(w.h12_numeric(), kCap12, m.a, m.b, m.c, m.d));
}

KodairaAssignment kodaira_type(int v8, int v12, int vdelta) {
  if (v8 < 0 || v12 < 0) throw PreconditionError("kodaira_type: negative order");
  if (vdelta < 1) throw PreconditionError("kodaira_type: smooth fibre (discriminant does not vanish)");
  if (v8 >= 4 && v12 >= 6) throw PreconditionError("kodaira_type: non-minimal Weierstrass model");
  // vdelta = min(3 v8, 2 v12) unless the two are equal.
  const int a = std::min(v8, kInfiniteOrder / 4) * 3, b = std::min(v12, kInfiniteOrder / 4) * 2;
  if (a != b && vdelta != std::min(a, b)) throw PreconditionError("kodaira_type: inconsistent vanishing orders");
  if (a == b && vdelta < a) throw PreconditionError("kodaira_type: inconsistent vanishing orders");

  KodairaAssignment k;
  k.orders = {v8, v12, vdelta};
  if (v8 == 0 && v12 == 0) {
    k.symbol = "I_" + std::to_string(vdelta);
    k.n = vdelta;
  } else if (vdelta == 2) {
    k.symbol = "II";
  } else if (vdelta == 3) {
    k.symbol = "III";
  } else if (vdelta == 4) {
    k.symbol = "IV";
  } else if (v8 >= 2 && v12 >= 3 && vdelta >= 6 && (v8 == 2 || v12 == 3)) {
    k.n = vdelta - 6;
    k.symbol = "I_" + std::to_string(k.n) + "*";
  } else if (vdelta == 8) {
    k.symbol = "IV*";
  } else if (vdelta == 9) {
    k.symbol = "III*";
  } else if (vdelta == 10) {
    k.symbol = "II*";
  } else {
    throw PreconditionError("kodaira_type: orders outside the classification");
  }
  return k;
}

}  // namespace k3lab::weierstrass
