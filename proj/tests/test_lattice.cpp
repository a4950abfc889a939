#include <algorithm>
#include <array>
#include <functional>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "k3lab/error.hpp"
#include "k3lab/lattice.hpp"

using namespace k3lab;
using namespace k3lab::lattice;

namespace {

// Sylvester's criterion: all leading principal minors positive.
bool leading_minors_positive(const GramMatrix& g) {
  for (std::size_t k = 1; k <= g.rank(); ++k)
    if (g.block(0, k).determinant() <= 0) return false;
  return true;
}

// Roots of norm 2 written in orthonormal coordinates, enumerated over a box.
// D_n^+ membership: integer coords with even sum, or all coords in Z + 1/2 with
// (sum of coords) even. Coordinates are stored doubled.
std::vector<std::vector<int>> dn_plus_roots_bruteforce(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> v(n, 0);
  // integer part: entries in {-1,0,1} (norm 2 forbids anything larger)
  std::function<void(int, int)> rec = [&](int i, int norm) {
    if (norm > 2) return;
    if (i == n) {
      int sum = std::accumulate(v.begin(), v.end(), 0);
      if (norm == 2 && sum % 2 == 0) {
        std::vector<int> d(n);
        for (int k = 0; k < n; ++k) d[k] = 2 * v[k];
        out.push_back(d);
      }
      return;
    }
    for (int x = -1; x <= 1; ++x) {
      v[i] = x;
      rec(i + 1, norm + x * x);
    }
    v[i] = 0;
  };
  rec(0, 0);
  if (n * 1 <= 8) {  // half-integer vectors have norm n/4; only n = 8 gives 2
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::vector<int> d(n);
      int sum2 = 0;
      for (int k = 0; k < n; ++k) {
        d[k] = (mask >> k) & 1 ? -1 : 1;
        sum2 += d[k];
      }
      if (n == 8 && (sum2 / 2) % 2 == 0) out.push_back(d);
    }
  }
  return out;
}

std::vector<int> components_bruteforce(const std::vector<std::vector<int>>& roots) {
  const std::size_t m = roots.size();
  std::vector<int> comp(m, -1);
  int next = 0;
  for (std::size_t s = 0; s < m; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      auto a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < m; ++b) {
        if (comp[b] >= 0) continue;
        int dot = 0;
        for (std::size_t k = 0; k < roots[a].size(); ++k) dot += roots[a][k] * roots[b][k];
        if (dot != 0) {
          comp[b] = next;
          stack.push_back(b);
        }
      }
    }
    ++next;
  }
  std::vector<int> sizes(next, 0);
  for (int c : comp) ++sizes[c];
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

}  // namespace

TEST_CASE("k3 lattice is even unimodular of signature (3,19)") {
  const GramMatrix g = k3_gram();
  CHECK(g.rank() == 22);
  CHECK(g.is_even());
  CHECK(abs(g.determinant()) == 1);
  CHECK(signature(g) == Signature{3, 19, 0});
}

TEST_CASE("standard bases") {
  for (auto kind : {StandardKind::E8Type, StandardKind::Gamma16Type}) {
    const auto spec = standard_gram(kind);
    const auto& g = spec.gram;
    CHECK(g.is_even());
    CHECK(abs(g.determinant()) == 1);
    CHECK(signature(g) == Signature{3, 19, 0});
    const std::array<std::size_t, 6> special{0, 1, 2, 19, 20, 21};
    for (std::size_t a : special)
      for (std::size_t b : special) CHECK(g(a, b) == (a + b == 21 ? 1 : 0));
    const GramMatrix middle = g.block(3, 16);
    CHECK(middle.is_even());
    CHECK(abs(middle.determinant()) == 1);
    CHECK(leading_minors_positive(middle.negated()));
  }
  const auto e8 = standard_gram(StandardKind::E8Type).gram;
  const auto x1 = LatticeVector::unit(22, 0);
  const auto x22 = LatticeVector::unit(22, 21);
  CHECK(pairing(x1, x22, e8) == 1);
  CHECK(pairing(x1, x1, e8) == 0);
}

TEST_CASE("pairing examples and errors") {
  const auto u = hyperbolic_plane();
  const auto v = LatticeVector::from_ints({1, -1});
  CHECK(pairing(v, v, u) == -2);
  CHECK_THROWS_AS(pairing(LatticeVector::from_ints({1, 2, 3}), v, u), PreconditionError);
}

TEST_CASE("pairing is bilinear and symmetric on random rational vectors") {
  const auto g = standard_gram(StandardKind::Gamma16Type).gram;
  std::mt19937 rng(7);
  std::uniform_int_distribution<long> num(-9, 9), den(1, 5);
  auto rand_vec = [&] {
    std::vector<Rational> c(22);
    for (auto& x : c) {
      x = Rational(num(rng), den(rng));
      x.canonicalize();
    }
    return LatticeVector(c);
  };
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = rand_vec(), b = rand_vec(), c = rand_vec();
    Rational s(num(rng), den(rng));
    s.canonicalize();
    CHECK(pairing(a, b, g) == pairing(b, a, g));
    CHECK(pairing(a + s * b, c, g) == pairing(a, c, g) + s * pairing(b, c, g));
  }
}

TEST_CASE("vector_props") {
  const auto g = standard_gram(StandardKind::E8Type).gram;
  const auto x1 = LatticeVector::unit(22, 0);
  auto p = vector_props(x1, g);
  CHECK(p.primitive);
  CHECK(p.isotropic);
  CHECK(p.norm == 0);
  p = vector_props(Rational(2) * x1, g);
  CHECK_FALSE(p.primitive);
  CHECK(p.isotropic);
  p = vector_props(x1 + LatticeVector::unit(22, 21), g);
  CHECK(p.primitive);
  CHECK_FALSE(p.isotropic);
  CHECK(p.norm == 2);
  CHECK_THROWS_AS(vector_props(Rational(0) * x1, g), PreconditionError);
  CHECK_THROWS_AS(vector_props(Rational(1, 2) * x1, g), PreconditionError);
}

TEST_CASE("signature") {
  CHECK(signature(hyperbolic_plane()) == Signature{1, 1, 0});
  // Independent check: -E8 negative definite by Sylvester on E8.
  CHECK(leading_minors_positive(e8()));
  CHECK(signature(e8().negated()) == Signature{0, 8, 0});
  CHECK(signature(GramMatrix({{0, 0}, {0, 0}})) == Signature{0, 0, 2});
  CHECK(signature(GramMatrix({{1, 1}, {1, 1}})) == Signature{1, 0, 1});
}

TEST_CASE("short vectors") {
  const auto oracle_e8 = dn_plus_roots_bruteforce(8);
  REQUIRE(oracle_e8.size() == 240);
  const auto roots = short_vectors(e8().negated(), -2);
  CHECK(roots.size() == oracle_e8.size());
  CHECK(short_vectors(e8().negated(), -1).empty());

  const auto oracle_d16 = dn_plus_roots_bruteforce(16);
  REQUIRE(oracle_d16.size() == 480);
  const GramMatrix nd16 = d16_plus().negated();
  const auto roots16 = short_vectors(nd16, -2);
  CHECK(roots16.size() == oracle_d16.size());

  std::set<std::vector<long>> seen(roots16.begin(), roots16.end());
  CHECK(seen.size() == roots16.size());
  for (const auto& r : roots16) {
    std::vector<long> neg(r);
    for (auto& x : neg) x = -x;
    CHECK(seen.count(neg) == 1);
    CHECK(pairing(LatticeVector::from_ints(r), LatticeVector::from_ints(r), nd16) == -2);
  }
  CHECK_THROWS_AS(short_vectors(k3_gram(), -2), PreconditionError);
}

TEST_CASE("rank-16 dichotomy") {
  const auto e8e8 = direct_sum({e8().negated(), e8().negated()});
  const auto v1 = classify_rank16(e8e8);
  CHECK(v1.kind == RootKind::E8E8);
  CHECK(v1.root_count == 480);
  CHECK(v1.component_sizes == std::vector<long>{240, 240});
  CHECK(v1.component_sizes_mod_sign == std::vector<long>{120, 120});

  const auto v2 = classify_rank16(d16_plus().negated());
  CHECK(v2.kind == RootKind::D16);
  CHECK(v2.root_count == 480);
  CHECK(v2.component_sizes == std::vector<long>{480});

  // Oracle: the same structure from orthonormal-coordinate roots.
  CHECK(components_bruteforce(dn_plus_roots_bruteforce(16)) == std::vector<int>{480});
  auto e8roots = dn_plus_roots_bruteforce(8);
  CHECK(components_bruteforce(e8roots) == std::vector<int>{240});

  // (-E8) + (-D8) has determinant 4.
  GramMatrix d8(8);
  for (std::size_t i = 0; i < 8; ++i) d8.set(i, i, 2);
  for (std::size_t i = 0; i + 2 < 8; ++i) d8.set(i, i + 1, -1);
  d8.set(5, 7, -1);
  CHECK(abs(d8.determinant()) == 4);
  CHECK_THROWS_AS(classify_rank16(direct_sum({e8().negated(), d8.negated()})), PreconditionError);
}

TEST_CASE("gram text round trip") {
  const auto g = standard_gram(StandardKind::Gamma16Type).gram;
  CHECK(read_gram(write_gram(g)) == g);
  CHECK_THROWS_AS(read_gram("1 2 3"), PreconditionError);
  CHECK_THROWS_AS(read_gram("1 x 3 4"), ParseError);
}
