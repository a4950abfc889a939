#include "k3lab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "k3lab/error.hpp"

namespace k3lab::lattice {

GramMatrix::GramMatrix(std::size_t rank) : rank_(rank), entries_(rank * rank) {}

GramMatrix::GramMatrix(const std::vector<std::vector<long>>& rows) : GramMatrix(rows.size()) {
  for (std::size_t i = 0; i < rank_; ++i) {
    if (rows[i].size() != rank_) throw PreconditionError("Gram matrix is not square");
    for (std::size_t j = 0; j < rank_; ++j) entries_[i * rank_ + j] = rows[i][j];
  }
  for (std::size_t i = 0; i < rank_; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if ((*this)(i, j) != (*this)(j, i)) throw PreconditionError("Gram matrix is not symmetric");
}

void GramMatrix::set(std::size_t i, std::size_t j, const Integer& v) {
  entries_[i * rank_ + j] = v;
  entries_[j * rank_ + i] = v;
}

bool GramMatrix::is_even() const {
  for (std::size_t i = 0; i < rank_; ++i)
    if (mpz_even_p((*this)(i, i).get_mpz_t()) == 0) return false;
  return true;
}

Integer GramMatrix::determinant() const {
  // Bareiss fraction-free elimination keeps everything in Z.
  std::vector<Integer> a = entries_;
  const std::size_t n = rank_;
  auto at = [&](std::size_t i, std::size_t j) -> Integer& { return a[i * n + j]; };
  Integer prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (at(k, k) == 0) {
      std::size_t p = k + 1;
      while (p < n && at(p, k) == 0) ++p;
      if (p == n) return 0;
      for (std::size_t j = 0; j < n; ++j) std::swap(at(k, j), at(p, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
      }
    }
    prev = at(k, k);
  }
  return sign * prev;
}

GramMatrix GramMatrix::negated() const {
  GramMatrix out = *this;
  for (auto& e : out.entries_) e = -e;
  return out;
}

GramMatrix GramMatrix::block(std::size_t first, std::size_t size) const {
  if (first + size > rank_) throw PreconditionError("block out of range");
  GramMatrix out(size);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) out.entries_[i * size + j] = (*this)(first + i, first + j);
  return out;
}

GramMatrix direct_sum(const std::vector<GramMatrix>& blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.rank();
  GramMatrix out(n);
  std::size_t off = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rank(); ++i)
      for (std::size_t j = 0; j < b.rank(); ++j) out.set(off + i, off + j, b(i, j));
    off += b.rank();
  }
  return out;
}

GramMatrix hyperbolic_plane() { return GramMatrix({{0, 1}, {1, 0}}); }

GramMatrix e8() {
  // Bourbaki labelling: chain 1-3-4-5-6-7-8 with node 2 attached to 4.
  GramMatrix g(8);
  for (std::size_t i = 0; i < 8; ++i) g.set(i, i, 2);
  const std::pair<int, int> edges[] = {{1, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8}, {2, 4}};
  for (auto [a, b] : edges) g.set(a - 1, b - 1, -1);
  return g;
}

GramMatrix d16_plus() {
  constexpr std::size_t n = 16;
  // Coordinates doubled so the glue vector is integral; Gram entries are divided by 4.
  std::vector<std::vector<long>> basis;
  std::vector<long> v(n, 0);
  v[0] = 2;
  v[1] = 2;
  basis.push_back(v);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    std::fill(v.begin(), v.end(), 0);
    v[k] = 2;
    v[k - 1] = -2;
    basis.push_back(v);
  }
  std::fill(v.begin(), v.end(), -1);
  v[0] = 1;
  v[n - 1] = 1;
  basis.push_back(v);

  GramMatrix g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      long dot = 0;
      for (std::size_t k = 0; k < n; ++k) dot += basis[i][k] * basis[j][k];
      g.set(i, j, dot / 4);
    }
  }
  return g;
}

GramMatrix k3_gram() {
  const GramMatrix u = hyperbolic_plane();
  const GramMatrix ne8 = e8().negated();
  return direct_sum({u, u, u, ne8, ne8});
}

StandardBasisSpec standard_gram(StandardKind kind) {
  GramMatrix g(22);
  for (std::size_t k = 0; k < 3; ++k) g.set(k, 21 - k, 1);
  const GramMatrix middle = kind == StandardKind::E8Type ? direct_sum({e8().negated(), e8().negated()})
                                                         : d16_plus().negated();
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) g.set(3 + i, 3 + j, middle(i, j));
  return {kind, g};
}

std::string to_string(StandardKind kind) { return kind == StandardKind::E8Type ? "e8" : "gamma16"; }

std::string to_string(RootKind kind) {
  switch (kind) {
    case RootKind::E8E8: return "E8E8";
    case RootKind::D16: return "D16";
    default: return "Other";
  }
}

LatticeVector LatticeVector::from_ints(const std::vector<long>& c) {
  LatticeVector v;
  v.coords.reserve(c.size());
  for (long x : c) v.coords.emplace_back(x);
  return v;
}

LatticeVector LatticeVector::unit(std::size_t rank, std::size_t index) {
  LatticeVector v;
  v.coords.assign(rank, Rational(0));
  v.coords.at(index) = 1;
  return v;
}

LatticeVector operator+(const LatticeVector& a, const LatticeVector& b) {
  if (a.size() != b.size()) throw PreconditionError("vector length mismatch");
  LatticeVector out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out.coords[i] += b.coords[i];
  return out;
}

LatticeVector operator*(const Rational& s, const LatticeVector& v) {
  LatticeVector out = v;
  for (auto& c : out.coords) c *= s;
  return out;
}

Rational pairing(const LatticeVector& u, const LatticeVector& v, const GramMatrix& g) {
  if (u.size() != g.rank() || v.size() != g.rank())
    throw PreconditionError("pairing: vector length " + std::to_string(u.size()) + "/" +
                            std::to_string(v.size()) + " does not match Gram rank " +
                            std::to_string(g.rank()));
  Rational sum = 0;
  for (std::size_t i = 0; i < g.rank(); ++i) {
    if (sgn(u.coords[i]) == 0) continue;
    Rational row = 0;
    for (std::size_t j = 0; j < g.rank(); ++j)
      if (sgn(v.coords[j]) != 0 && g(i, j) != 0) row += g(i, j) * v.coords[j];
    sum += u.coords[i] * row;
  }
  return sum;
}

VectorProps vector_props(const LatticeVector& v, const GramMatrix& g) {
  Integer content = 0;
  for (const auto& c : v.coords) {
    if (c.get_den() != 1) throw PreconditionError("vector_props: coordinates must be integral");
    mpz_gcd(content.get_mpz_t(), content.get_mpz_t(), c.get_num_mpz_t());
  }
  if (content == 0) throw PreconditionError("vector_props: zero vector");
  const Rational n = pairing(v, v, g);
  return {content == 1, sgn(n) == 0, n.get_num()};
}

Signature signature(const GramMatrix& g) {
  const std::size_t n = g.rank();
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = g(i, j);

  Signature s;
  std::vector<std::size_t> live(n);
  std::iota(live.begin(), live.end(), 0);
  while (!live.empty()) {
    std::size_t pivot = n;
    for (std::size_t i : live)
      if (sgn(a[i][i]) != 0) {
        pivot = i;
        break;
      }
    if (pivot == n) {
      // Zero diagonal: replace e_i by e_i + e_j for some a_ij != 0, giving diagonal 2 a_ij.
      for (std::size_t i : live) {
        for (std::size_t j : live) {
          if (i != j && sgn(a[i][j]) != 0) {
            for (std::size_t k : live) a[i][k] += a[j][k];
            for (std::size_t k : live) a[k][i] += a[k][j];
            pivot = i;
            break;
          }
        }
        if (pivot != n) break;
      }
    }
    if (pivot == n) {
      s.null += static_cast<int>(live.size());
      break;
    }
    const Rational d = a[pivot][pivot];
    (sgn(d) > 0 ? s.pos : s.neg) += 1;
    std::erase(live, pivot);
    for (std::size_t i : live) {
      if (sgn(a[i][pivot]) == 0) continue;
      const Rational f = a[i][pivot] / d;
      for (std::size_t j : live) a[i][j] -= f * a[pivot][j];
    }
  }
  return s;
}

std::vector<std::vector<long>> short_vectors(const GramMatrix& g, long norm_target) {
  const Signature sig = signature(g);
  const int n = static_cast<int>(g.rank());
  const bool negative = sig.neg == n;
  if (!(negative || sig.pos == n)) throw PreconditionError("short_vectors: form is not definite");
  // Enumerate on the positive definite form m.
  const GramMatrix m = negative ? g.negated() : g;
  const long bound = negative ? -norm_target : norm_target;
  std::vector<std::vector<long>> out;
  if (bound <= 0) return out;

  // Quadratic-form decomposition Q(x) = sum_i q_ii (x_i + sum_{j>i} q_ij x_j)^2.
  std::vector<std::vector<Rational>> q(n, std::vector<Rational>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q[i][j] = m(i, j);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      q[j][i] = q[i][j];
      q[i][j] /= q[i][i];
    }
    for (int k = i + 1; k < n; ++k)
      for (int l = k; l < n; ++l) q[k][l] -= q[k][i] * q[i][l];
  }

  std::vector<long> x(n, 0);
  std::vector<Rational> remaining(n + 1);
  remaining[n] = bound;

  auto exact_norm = [&] {
    Integer s = 0;
    for (int i = 0; i < n; ++i) {
      if (x[i] == 0) continue;
      Integer row = 0;
      for (int j = 0; j < n; ++j)
        if (x[j] != 0) row += m(i, j) * x[j];
      s += row * x[i];
    }
    return s;
  };

  std::function<void(int)> descend = [&](int i) {
    Rational center = 0;
    for (int j = i + 1; j < n; ++j)
      if (x[j] != 0) center -= q[i][j] * x[j];
    // Floating radius only proposes the integer window; each candidate is checked exactly.
    const double radius = std::sqrt(Rational(remaining[i + 1] / q[i][i]).get_d());
    const double c = center.get_d();
    const long lo = static_cast<long>(std::floor(c - radius)) - 1;
    const long hi = static_cast<long>(std::ceil(c + radius)) + 1;
    for (long xi = lo; xi <= hi; ++xi) {
      const Rational diff = Rational(xi) - center;
      const Rational used = q[i][i] * diff * diff;
      if (used > remaining[i + 1]) continue;
      x[i] = xi;
      remaining[i] = remaining[i + 1] - used;
      if (i == 0) {
        if (sgn(remaining[0]) == 0 && std::any_of(x.begin(), x.end(), [](long v) { return v != 0; }) &&
            exact_norm() == bound)
          out.push_back(x);
      } else {
        descend(i - 1);
      }
    }
    x[i] = 0;
  };
  descend(n - 1);
  return out;
}

RootSystemVerdict classify_rank16(const GramMatrix& g) {
  if (g.rank() != 16) throw PreconditionError("classify_rank16: rank must be 16");
  if (!g.is_even()) throw PreconditionError("classify_rank16: form is not even");
  const Integer det = g.determinant();
  if (abs(det) != 1) throw PreconditionError("classify_rank16: form is not unimodular (det " + det.get_str() + ")");
  if (signature(g).neg != 16) throw PreconditionError("classify_rank16: form is not negative definite");

  const auto roots = short_vectors(g, -2);
  std::vector<std::vector<long>> half;
  for (const auto& r : roots) {
    auto first = std::find_if(r.begin(), r.end(), [](long v) { return v != 0; });
    if (*first > 0) half.push_back(r);
  }

  std::vector<std::vector<long>> gram(16, std::vector<long>(16));
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) gram[i][j] = g(i, j).get_si();
  std::vector<std::vector<long>> image(half.size(), std::vector<long>(16, 0));
  for (std::size_t r = 0; r < half.size(); ++r)
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 16; ++j) image[r][i] += gram[i][j] * half[r][j];

  std::vector<std::size_t> parent(half.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t a = 0; a < half.size(); ++a) {
    for (std::size_t b = a + 1; b < half.size(); ++b) {
      long dot = 0;
      for (std::size_t i = 0; i < 16; ++i) dot += half[a][i] * image[b][i];
      if (dot != 0) parent[find(a)] = find(b);
    }
  }
  std::vector<long> sizes(half.size(), 0);
  for (std::size_t a = 0; a < half.size(); ++a) ++sizes[find(a)];
  std::erase(sizes, 0);
  std::sort(sizes.rbegin(), sizes.rend());

  RootSystemVerdict v;
  v.root_count = static_cast<long>(roots.size());
  v.component_sizes_mod_sign = sizes;
  for (long s : sizes) v.component_sizes.push_back(2 * s);
  if (sizes == std::vector<long>{120, 120})
    v.kind = RootKind::E8E8;
  else if (sizes == std::vector<long>{240})
    v.kind = RootKind::D16;
  return v;
}

GramMatrix read_gram(const std::string& text) {
  std::istringstream in(text);
  std::vector<long> values;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stol(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ParseError("read_gram: not an integer: '" + token + "'", static_cast<std::size_t>(in.tellg()));
    }
  }
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(values.size()))));
  if (n * n != values.size() || n == 0)
    throw PreconditionError("read_gram: " + std::to_string(values.size()) + " entries is not a square matrix");
  std::vector<std::vector<long>> rows(n, std::vector<long>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) rows[i][j] = values[i * n + j];
  return GramMatrix(rows);
}

std::string write_gram(const GramMatrix& g) {
  std::ostringstream out;
  for (std::size_t i = 0; i < g.rank(); ++i) {
    for (std::size_t j = 0; j < g.rank(); ++j) out << (j ? " " : "") << g(i, j).get_str();
    out << '\n';
  }
  return out.str();
}

}  // namespace k3lab::lattice
