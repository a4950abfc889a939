#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <tuple>

#include "doctest.h"
#include "k3lab/error.hpp"
#include "k3lab/weierstrass.hpp"

using namespace k3lab;
using namespace k3lab::weierstrass;
using k3lab::poly::pow;

namespace {

Gaussian gi(long re, long im) { return Gaussian(Rational(re), Rational(im)); }
Gaussian gq(long re_num, long re_den, long im_num, long im_den) {
  return Gaussian(Rational(re_num, re_den), Rational(im_num, im_den));
}

const ExactPoly T = ExactPoly::t();

ExactPoly g4(long c) { return T * (T - ExactPoly(1)) * (T - ExactPoly(2)) * (T - ExactPoly(c)); }

WeierstrassData exact(const ExactPoly& a, const ExactPoly& b) { return WeierstrassData::exact(a, b); }

// Orders as a multiset of (v8, v12, vdelta), one entry per point of P^1.
using Triple = std::tuple<int, int, int>;
std::map<Triple, int> order_multiset(const OrderTable& t) {
  std::map<Triple, int> m;
  for (const auto& e : t.entries) m[{e.orders.v8, e.orders.v12, e.orders.vdelta}] += static_cast<int>(e.point.count());
  return m;
}

const PointOrders* find_point(const OrderTable& t, Complex where) {
  for (const auto& e : t.entries)
    for (Complex z : e.point.locations)
      if (std::abs(z - where) < 1e-9) return &e;
  return nullptr;
}

const PointOrders* find_infinity(const OrderTable& t) {
  for (const auto& e : t.entries)
    if (e.point.at_infinity) return &e;
  return nullptr;
}

Matrix2 random_sl2(std::mt19937& rng) {
  std::uniform_int_distribution<int> small(-3, 3), den(1, 3), kind(0, 2);
  auto rnd = [&] { return gq(small(rng), den(rng), small(rng), den(rng)); };
  Matrix2 m;
  for (int k = 0; k < 4; ++k) {
    Matrix2 e;
    switch (kind(rng)) {
      case 0:
        e.b = rnd();
        break;
      case 1:
        e.c = rnd();
        break;
      default: {
        Gaussian u = rnd();
        if (u.is_zero()) u = gi(1, 1);
        e.a = u;
        e.d = Gaussian(1) / u;
      }
    }
    m = {m.a * e.a + m.b * e.c, m.a * e.b + m.b * e.d, m.c * e.a + m.d * e.c, m.c * e.b + m.d * e.d};
  }
  return m;
}

}  // namespace

TEST_CASE("parse_weierstrass: accepted inputs") {
  auto w = parse_weierstrass("h8 = t^4; h12 = t^6");
  CHECK(w.mode() == Mode::Exact);
  CHECK(w.h8().degree() == 4);
  CHECK(w.h12().degree() == 6);

  w = parse_weierstrass("h8 = 3*(t*(t-1)*(t-2)*(t-5))^2; h12 = (t*(t-1)*(t-2)*(t-5))^3");
  CHECK(w.h8().degree() == 8);
  CHECK(w.h12().degree() == 12);
  CHECK(w.h8() == Gaussian(3) * pow(g4(5), 2));

  w = parse_weierstrass("  h12 = 2i t^2 - 1/3 ;\n h8 = (1+i)^2 * t + 2^-1;");
  CHECK(w.h12() == ExactPoly({gq(-1, 3, 0, 1), 0, gi(0, 2)}));
  CHECK(w.h8() == ExactPoly({gq(1, 2, 0, 1), gi(0, 2)}));

  w = parse_weierstrass("h8 = 0.5*t^4; h12 = t^6 - 1e-3");
  CHECK(w.mode() == Mode::Numeric);
  CHECK(w.h8_numeric().coeff(4) == Complex(0.5));
  CHECK(w.h12_numeric().coeff(0) == Complex(-1e-3));

  w = parse_weierstrass("h8 = t^8 - t^8 + 1; h12 = 0", ParseMode::Numeric);
  CHECK(w.mode() == Mode::Numeric);
  CHECK(w.h8_numeric().degree() == 0);
}

TEST_CASE("parse_weierstrass: diagnostics carry positions") {
  auto offset = [](const std::string& text, ParseMode mode = ParseMode::Auto) -> long {
    try {
      parse_weierstrass(text, mode);
    } catch (const ParseError& e) {
      return static_cast<long>(e.position());
    }
    return -1;
  };
  CHECK(offset("h8 = t^9; h12 = 0") == 5);
  CHECK(offset("h8 = t; h12 = t^13") == 14);
  CHECK(offset("h8 = t +; h12 = 1") == 8);
  CHECK(offset("h8 = x; h12 = 1") == 5);
  CHECK(offset("h8 = 1; h8 = 2") == 8);
  CHECK(offset("h8 = 1") == 6);
  CHECK(offset("h8 = 0; h12 = 0") == 0);
  CHECK(offset("h8 = 1/t; h12 = 1") == 6);
  CHECK(offset("h8 = t^-1; h12 = 1") == 6);
  CHECK(offset("h8 = 1/(t-t); h12 = 1") == 6);
  CHECK(offset("h8 = 1.5; h12 = 1", ParseMode::Exact) == 5);
  CHECK(offset("h8 = (t; h12 = 1") == 7);
  CHECK(offset("h8 = t^4 h12 = 1") == 9);
}

TEST_CASE("discriminant convention") {
  CHECK(discriminant(exact(Gaussian(3) * pow(g4(5), 2), pow(g4(5), 3))).identically_zero);
  CHECK(discriminant(exact(Gaussian(3) * pow(T, 4), pow(T, 6))).identically_zero);
  const auto d = discriminant(exact(pow(T, 4), pow(T, 6)));
  CHECK_FALSE(d.identically_zero);
  CHECK(d.exact == Gaussian(-26) * pow(T, 12));
  // Numeric mode recognises cancellation up to rounding.
  const auto dn = discriminant(exact(Gaussian(3) * pow(g4(5), 2), pow(g4(5), 3)).to_numeric());
  CHECK(dn.identically_zero);
}

TEST_CASE("vanishing orders") {
  auto t = vanishing_orders(exact(pow(T, 4), pow(T, 6)));
  const PointOrders* zero = find_point(t, 0.0);
  REQUIRE(zero != nullptr);
  CHECK(zero->orders.v8 == 4);
  CHECK(zero->orders.v12 == 6);
  CHECK(zero->orders.vdelta == 12);
  const PointOrders* inf = find_infinity(t);
  REQUIRE(inf != nullptr);
  CHECK(inf->orders.v8 == 4);
  CHECK(inf->orders.v12 == 6);
  CHECK(inf->orders.vdelta == 12);

  t = vanishing_orders(exact(Gaussian(3) * pow(g4(5), 2), pow(g4(5), 3)));
  CHECK(t.delta_zero);
  const PointOrders* one = find_point(t, 1.0);
  REQUIRE(one != nullptr);
  CHECK(one->orders.v8 == 2);
  CHECK(one->orders.v12 == 3);
  CHECK(one->orders.vdelta == kInfiniteOrder);
  CHECK(find_infinity(t) == nullptr);

  // An irreducible quadratic over Q(i) is reported as one entry with two points.
  t = vanishing_orders(exact(pow(T * T - ExactPoly(2), 2), ExactPoly(1)));
  REQUIRE(t.entries.size() >= 1);
  CHECK(order_multiset(t)[{2, 0, 0}] == 2);
}

double chordal(Complex a, Complex b) {
  return 2 * std::abs(a - b) / std::sqrt((1 + std::norm(a)) * (1 + std::norm(b)));
}

// Smallest chordal distance between distinct points of an exact order table.
double separation(const OrderTable& t) {
  std::vector<Complex> pts;
  bool infinity = false;
  for (const auto& e : t.entries) {
    infinity = infinity || e.point.at_infinity;
    for (Complex z : e.point.locations) pts.push_back(z);
  }
  double sep = 2.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) sep = std::min(sep, chordal(pts[i], pts[j]));
    if (infinity) sep = std::min(sep, 2 / std::sqrt(1 + std::norm(pts[i])));
  }
  return sep;
}

// Whether the exact points stay distinguishable under coefficient noise well
// above the clustering tolerance: the roots of noisy copies must fall into
// disjoint discs around the exact points, each disc holding exactly the exact
// multiplicity. Infinity is exact under relative noise and needs no disc.
bool resolvable(const OrderTable& exact_table, const WeierstrassData& w, double noise_level) {
  std::vector<Complex> where;
  std::vector<std::array<int, 3>> orders;
  for (const auto& e : exact_table.entries) {
    if (e.point.at_infinity) continue;
    for (Complex z : e.point.locations) {
      where.push_back(z);
      orders.push_back({e.orders.v8, e.orders.v12, e.orders.vdelta});
    }
  }
  std::mt19937 rng(17);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> radius(where.size(), 0.0);
  for (int sample = 0; sample < 3; ++sample) {
    auto perturb = [&](const ComplexPoly& p) {
      std::vector<Complex> c = p.coeffs();
      for (auto& z : c) z *= 1.0 + noise_level * Complex(noise(rng), noise(rng));
      return ComplexPoly(c);
    };
    const WeierstrassData wn = WeierstrassData::numeric(perturb(w.h8_numeric()), perturb(w.h12_numeric()));
    const ComplexPoly sections[3] = {wn.h8_numeric(), wn.h12_numeric(), discriminant(wn).numeric};
    for (int k = 0; k < 3; ++k) {
      std::vector<int> count(where.size(), 0);
      for (Complex r : poly::roots(sections[k])) {
        int best = -1;
        for (std::size_t j = 0; j < where.size(); ++j)
          if (orders[j][k] > 0 && (best < 0 || chordal(r, where[j]) < chordal(r, where[best]))) best = static_cast<int>(j);
        if (best < 0) return false;
        ++count[best];
        radius[best] = std::max(radius[best], chordal(r, where[best]));
      }
      for (std::size_t j = 0; j < where.size(); ++j)
        if (count[j] != orders[j][k]) return false;
    }
  }
  for (std::size_t i = 0; i < where.size(); ++i)
    for (std::size_t j = i + 1; j < where.size(); ++j)
      if (chordal(where[i], where[j]) <= 3 * (radius[i] + radius[j])) return false;
  return true;
}

// True when every numeric point carries the summed orders of the exact
// points nearest to it: nearby points may merge but nothing is lost or added.
bool coarsens(const OrderTable& numeric, const OrderTable& exact) {
  auto distance = [](const Point& a, const Point& b) {
    if (a.at_infinity || b.at_infinity) {
      if (a.at_infinity && b.at_infinity) return 0.0;
      return 2 / std::sqrt(1 + std::norm(a.at_infinity ? b.locations.at(0) : a.locations.at(0)));
    }
    return chordal(a.locations.at(0), b.locations.at(0));
  };
  if (numeric.entries.empty()) return exact.entries.empty();
  std::vector<Orders> summed(numeric.entries.size(), Orders{0, 0, 0});
  for (const auto& e : exact.entries) {
    // One exact entry may stand for several conjugate points; place each.
    for (std::size_t k = 0; k < std::max<std::size_t>(1, e.point.locations.size()); ++k) {
      Point single = e.point;
      if (!e.point.at_infinity) single.locations = {e.point.locations[k]};
      std::size_t best = 0;
      for (std::size_t j = 1; j < numeric.entries.size(); ++j)
        if (distance(numeric.entries[j].point, single) < distance(numeric.entries[best].point, single)) best = j;
      summed[best].v8 += e.orders.v8;
      summed[best].v12 += e.orders.v12;
      summed[best].vdelta += e.orders.vdelta;
    }
  }
  for (std::size_t j = 0; j < numeric.entries.size(); ++j) {
    const Orders& o = numeric.entries[j].orders;
    if (o.v8 != summed[j].v8 || o.v12 != summed[j].v12 || o.vdelta != summed[j].vdelta) return false;
  }
  return true;
}

TEST_CASE("numeric vanishing orders reproduce exact ones") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> coord(-2, 2), coin(0, 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::vector<Gaussian> sites = {gi(0, 0), gi(1, 0), gi(-1, 0), gi(0, 1), gi(1, 1), gq(1, 2, -1, 2), gi(2, -1),
                                       gi(-3, 1)};
  const NumericOptions opt;
  // Inputs count as well separated when noise ten times the tolerance still
  // resolves every point (the clustering works with worst-case error bounds
  // at the tolerance) and points are clearly farther apart than the merge
  // radius.
  int separated = 0, close = 0;
  for (int trial = 0; separated < 50 && trial < 400; ++trial) {
    // Random sections built from linear factors at a few sites; the leftover
    // degree is pushed to infinity.
    std::uniform_int_distribution<int> pick(0, static_cast<int>(sites.size()) - 1);
    std::uniform_int_distribution<int> m8(0, 3), m12(0, 5);
    ExactPoly h8 = Gaussian(gi(1 + coin(rng), coord(rng))), h12 = Gaussian(gi(coord(rng) == 0 ? 3 : 2, 1));
    for (int k = 0; k < 3; ++k) {
      const Gaussian s = sites[pick(rng)];
      const unsigned a = m8(rng), b = m12(rng);
      if (h8.degree() + static_cast<int>(a) <= kCap8) h8 *= pow(ExactPoly::linear(s), a);
      if (h12.degree() + static_cast<int>(b) <= kCap12) h12 *= pow(ExactPoly::linear(s), b);
    }
    const WeierstrassData w = exact(h8, h12);
    if (discriminant(w).identically_zero) continue;
    const auto exact_table = vanishing_orders(w);

    // Perturb the float coefficients well below the tolerance.
    auto perturb = [&](const ComplexPoly& p) {
      std::vector<Complex> c = p.coeffs();
      for (auto& z : c) z *= 1.0 + 1e-10 * noise(rng);
      return ComplexPoly(c);
    };
    const WeierstrassData wn = WeierstrassData::numeric(perturb(w.h8_numeric()), perturb(w.h12_numeric()));
    const auto numeric_table = vanishing_orders(wn, opt);
    const double sep = separation(exact_table);
    const bool well_separated = sep >= 0.01 && resolvable(exact_table, w, 10 * opt.tol);
    INFO("input: " << to_string(w));
    INFO("separation: " << sep);
    INFO("diagnostics: " << numeric_table.diagnostics);
    const bool same = order_multiset(numeric_table) == order_multiset(exact_table);
    if (well_separated) {
      CHECK(same);
      CHECK_FALSE(numeric_table.ill_conditioned);
      ++separated;
    } else {
      // Nearly coincident points may merge within the tolerance, or the
      // clustering reports itself ill-conditioned.
      CHECK((same || numeric_table.ill_conditioned || coarsens(numeric_table, exact_table)));
      ++close;
    }
  }
  CHECK(separated == 50);
  MESSAGE("inputs with nearly coincident points: " << close);
}

TEST_CASE("classify_stability examples") {
  auto r = classify_stability(exact(Gaussian(3) * pow(g4(5), 2), pow(g4(5), 3)));
  CHECK(r.cls == Stability::Stable);
  CHECK(r.polystable);
  CHECK(r.delta_identically_zero);
  CHECK(r.witnesses.empty());

  r = classify_stability(exact(pow(T, 4), pow(T, 6)));
  CHECK(r.cls == Stability::SemistableNotStable);
  CHECK(r.polystable);
  REQUIRE(r.normal_form.has_value());
  CHECK(r.normal_form->a == Gaussian(1));
  CHECK(r.normal_form->b == Gaussian(1));
  CHECK(r.normal_form->to_string() == "[1 : 1]");

  r = classify_stability(exact(Gaussian(3) * pow(T, 4), pow(T, 6)));
  REQUIRE(r.normal_form.has_value());
  CHECK(*r.normal_form->invariant == Gaussian(27));

  r = classify_stability(exact(pow(T, 5), pow(T, 7)));
  CHECK(r.cls == Stability::Unstable);
  CHECK_FALSE(r.polystable);
  REQUIRE(r.witnesses.size() == 1);
  CHECK(std::abs(r.witnesses[0].point.locations.at(0)) < 1e-15);
  CHECK(r.witnesses[0].orders.v8 == 5);
  CHECK(r.witnesses[0].orders.v12 == 7);

  // Semistable, not polystable: one bad point only.
  r = classify_stability(exact(pow(T, 4) * (T - ExactPoly(1)), pow(T, 6) * (T - ExactPoly(2))));
  CHECK(r.cls == Stability::SemistableNotStable);
  CHECK_FALSE(r.polystable);
  CHECK(r.witnesses.size() == 1);

  // Sections vanishing identically.
  r = classify_stability(exact(ExactPoly(), pow(T, 6)));
  CHECK(r.cls == Stability::SemistableNotStable);
  CHECK(r.polystable);
  CHECK(r.normal_form->a.is_zero());
  r = classify_stability(exact(pow(T, 4), ExactPoly()));
  CHECK(r.polystable);
  CHECK_FALSE(r.normal_form->invariant.has_value());
  r = classify_stability(exact(ExactPoly(), pow(T, 7)));
  CHECK(r.cls == Stability::Unstable);

  // Two bad points exchanged by a quadratic irrationality.
  r = classify_stability(exact(pow(T * T - ExactPoly(2), 4), Gaussian(5) * pow(T * T - ExactPoly(2), 6)));
  CHECK(r.cls == Stability::SemistableNotStable);
  CHECK(r.polystable);
  CHECK(*r.normal_form->invariant == Gaussian(1) / Gaussian(25));

  CHECK_THROWS_AS(exact(ExactPoly(), ExactPoly()), PreconditionError);
}

TEST_CASE("stability report invariants") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> coord(-2, 2), m8(0, 6), m12(0, 8);
  for (int trial = 0; trial < 60; ++trial) {
    ExactPoly h8(1), h12(1);
    for (long s : {0L, 1L}) {
      h8 *= pow(T - ExactPoly(s), m8(rng) / 2 + (s == 0 ? m8(rng) / 2 : 0));
      h12 *= pow(T - ExactPoly(s), m12(rng) / 2 + (s == 0 ? m12(rng) / 2 : 0));
    }
    if (h8.degree() > kCap8 || h12.degree() > kCap12) continue;
    const auto r = classify_stability(exact(h8, h12));
    if (r.cls == Stability::Stable) {
      CHECK(r.polystable);
      for (const auto& e : r.orders.entries) CHECK((e.orders.v8 < 4 || e.orders.v12 < 6));
    } else {
      CHECK_FALSE(r.witnesses.empty());
    }
    if (r.cls == Stability::Unstable) {
      CHECK_FALSE(r.polystable);
      for (const auto& e : r.witnesses) CHECK((e.orders.v8 >= 5 && e.orders.v12 >= 7));
    }
  }
}

TEST_CASE("is_jacobian_k3") {
  // Generic data: 24 simple roots of the discriminant.
  const ExactPoly h8({1, 2, -1, 3, 0, 1, gi(0, 1), -2, 1});
  const ExactPoly h12({2, -1, 0, 1, 1, gi(1, 1), 0, 3, -1, 0, 2, 1, 1});
  const WeierstrassData w = exact(h8, h12);
  const auto d = discriminant(w);
  REQUIRE(d.exact.degree() == 24);
  CHECK(poly::gcd(d.exact, d.exact.derivative()).degree() == 0);
  CHECK(is_jacobian_k3(w));
  CHECK_FALSE(is_jacobian_k3(exact(Gaussian(3) * pow(g4(5), 2), pow(g4(5), 3))));
  CHECK_FALSE(is_jacobian_k3(exact(pow(T, 4), pow(T, 6))));
}

TEST_CASE("group action") {
  const WeierstrassData w = exact(pow(T, 4), pow(T, 6));
  const WeierstrassData same = group_act(w, Matrix2{}, Gaussian(1));
  CHECK(same.h8() == w.h8());
  CHECK(same.h12() == w.h12());

  const WeierstrassData moved = group_act(w, Matrix2{1, 1, 0, 1}, Gaussian(1));
  CHECK(moved.h8() == pow(T + ExactPoly(1), 4));
  CHECK(classify_stability(moved).cls == Stability::SemistableNotStable);
  CHECK_THROWS_AS(group_act(w, Matrix2{2, 0, 0, 1}, Gaussian(1)), PreconditionError);

  const std::vector<WeierstrassData> samples = {
      exact(Gaussian(3) * pow(g4(5), 2), pow(g4(5), 3)),
      exact(pow(T, 4), pow(T, 6)),
      exact(Gaussian(3) * pow(T, 4), Gaussian(2) * pow(T, 6)),
      exact(pow(T, 5), pow(T, 7)),
      exact(pow(T, 4) * (T - ExactPoly(1)), pow(T, 6) * (T - ExactPoly(2))),
      exact(ExactPoly({1, 2, -1, 3, 0, 1, gi(0, 1), -2, 1}), ExactPoly({2, -1, 0, 1, 1, gi(1, 1), 0, 3})),
      exact(ExactPoly(), pow(T, 6) * pow(T - ExactPoly(1), 6)),
  };
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> small(-3, 3);
  for (int k = 0; k < 20; ++k) {
    const Matrix2 m = random_sl2(rng);
    REQUIRE(m.a * m.d - m.b * m.c == Gaussian(1));
    Gaussian lambda = gi(small(rng), small(rng));
    if (lambda.is_zero()) lambda = gi(2, -1);
    for (const auto& w0 : samples) {
      const auto before = classify_stability(w0);
      const WeierstrassData w1 = group_act(w0, m, lambda);
      const auto after = classify_stability(w1);
      CHECK(after.cls == before.cls);
      CHECK(after.polystable == before.polystable);
      CHECK(after.delta_identically_zero == before.delta_identically_zero);
      CHECK(order_multiset(after.orders) == order_multiset(before.orders));
      if (before.normal_form && before.normal_form->invariant)
        CHECK(*after.normal_form->invariant == *before.normal_form->invariant);

      // Discriminant transforms as a weight-6 section of O(24).
      const ExactPoly expected = pow(lambda, 6) * poly::substitute_mobius(discriminant(w0.h8(), w0.h12()), kCapDelta,
                                                                           m.a, m.b, m.c, m.d);
      CHECK(discriminant(w1.h8(), w1.h12()) == expected);
    }
  }
}

TEST_CASE("kodaira types") {
  CHECK(kodaira_type(0, 0, 3).symbol == "I_3");
  CHECK(kodaira_type(1, 1, 2).symbol == "II");
  CHECK(kodaira_type(3, 1, 2).symbol == "II");
  CHECK(kodaira_type(1, 2, 3).symbol == "III");
  CHECK(kodaira_type(2, 2, 4).symbol == "IV");
  CHECK(kodaira_type(2, 3, 6).symbol == "I_0*");
  CHECK(kodaira_type(2, 3, 9).symbol == "I_3*");
  CHECK(kodaira_type(3, 4, 8).symbol == "IV*");
  CHECK(kodaira_type(3, 5, 9).symbol == "III*");
  CHECK(kodaira_type(4, 5, 10).symbol == "II*");
  CHECK_THROWS_AS(kodaira_type(0, 0, 0), PreconditionError);
  CHECK_THROWS_AS(kodaira_type(4, 6, 12), PreconditionError);
  CHECK_THROWS_AS(kodaira_type(1, 1, 5), PreconditionError);

  // I_n: the pole order of j = 1728 h8^3 / discriminant is n.
  for (unsigned n = 1; n <= 6; ++n) {
    // Nodal family: discriminant = -27 (2 t^n + t^2n).
    const ExactPoly h8(3), h12 = ExactPoly(1) + pow(T, n);
    const ExactPoly d = discriminant(h8, h12);
    const int vd = d.order_at_zero();
    const int pole = vd - 3 * h8.order_at_zero();
    const auto k = kodaira_type(0, 0, vd);
    CHECK(k.symbol == "I_" + std::to_string(n));
    CHECK(pole == static_cast<int>(n));
  }
}
