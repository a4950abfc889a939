#pragma once

// Exact integral lattices: the K3 lattice, standard bases of E8 and Gamma16
// type, signatures, root enumeration and the rank-16 root-system dichotomy.

#include <cstddef>
#include <string>
#include <vector>

#include "k3lab/exact.hpp"

namespace k3lab::lattice {

/// Symmetric integral bilinear form on Z^n, stored row-major.
class GramMatrix {
 public:
  GramMatrix() = default;
  explicit GramMatrix(std::size_t rank);
  /// Throws PreconditionError if `rows` is not square and symmetric.
  explicit GramMatrix(const std::vector<std::vector<long>>& rows);

  std::size_t rank() const noexcept { return rank_; }
  const Integer& operator()(std::size_t i, std::size_t j) const { return entries_[i * rank_ + j]; }
  /// Sets both (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, const Integer& v);

  bool is_even() const;
  Integer determinant() const;
  GramMatrix negated() const;
  /// Principal submatrix on the index range [first, first + size).
  GramMatrix block(std::size_t first, std::size_t size) const;

  friend bool operator==(const GramMatrix&, const GramMatrix&) = default;

 private:
  std::size_t rank_ = 0;
  std::vector<Integer> entries_;
};

/// Orthogonal direct sum.
GramMatrix direct_sum(const std::vector<GramMatrix>& blocks);

GramMatrix hyperbolic_plane();
/// Positive definite E8 (Cartan matrix); the K3 lattice uses its negative.
GramMatrix e8();
/// Positive definite D16+ (Gamma16): the D15 simple roots e1+e2, e_k - e_{k-1}
/// plus the glue vector (1, -1, ..., -1, 1)/2.
GramMatrix d16_plus();

/// U^3 + (-E8)^2, rank 22.
GramMatrix k3_gram();

enum class StandardKind { E8Type, Gamma16Type };

struct StandardBasisSpec {
  StandardKind kind;
  GramMatrix gram;  // 22 x 22
};

/// Intersection matrix of a standard basis x_1..x_22: x_k . x_{23-k} = 1 for
/// k in {1,2,3}, and the middle 16 x 16 block (-E8)^2 or -Gamma16.
StandardBasisSpec standard_gram(StandardKind kind);

std::string to_string(StandardKind kind);

struct LatticeVector {
  std::vector<Rational> coords;

  LatticeVector() = default;
  explicit LatticeVector(std::vector<Rational> c) : coords(std::move(c)) {}
  static LatticeVector from_ints(const std::vector<long>& c);
  static LatticeVector unit(std::size_t rank, std::size_t index);
  std::size_t size() const noexcept { return coords.size(); }

  friend LatticeVector operator+(const LatticeVector& a, const LatticeVector& b);
  friend LatticeVector operator*(const Rational& s, const LatticeVector& v);
  friend bool operator==(const LatticeVector&, const LatticeVector&) = default;
};

/// u^T g v. Throws PreconditionError on dimension mismatch.
Rational pairing(const LatticeVector& u, const LatticeVector& v, const GramMatrix& g);

struct VectorProps {
  bool primitive;
  bool isotropic;
  Integer norm;
};

/// Throws PreconditionError for the zero vector or non-integral coordinates.
VectorProps vector_props(const LatticeVector& v, const GramMatrix& g);

struct Signature {
  int pos = 0;
  int neg = 0;
  int null = 0;
  friend bool operator==(const Signature&, const Signature&) = default;
};

/// Inertia by exact symmetric elimination over Q with pivoting.
Signature signature(const GramMatrix& g);

/// All nonzero v with v^T g v == norm_target, both signs included.
/// `g` must be definite; throws PreconditionError for indefinite input.
std::vector<std::vector<long>> short_vectors(const GramMatrix& g, long norm_target);

enum class RootKind { E8E8, D16, Other };

struct RootSystemVerdict {
  long root_count = 0;                         // counting +v and -v separately
  std::vector<long> component_sizes;           // counting +/-, descending
  std::vector<long> component_sizes_mod_sign;  // what the graph search actually visits
  RootKind kind = RootKind::Other;
};

std::string to_string(RootKind kind);

/// Distinguishes (-E8)^2 from -Gamma16 by the connectivity of the norm -2 root
/// graph. Requires rank 16, even, unimodular, negative definite.
RootSystemVerdict classify_rank16(const GramMatrix& g);

/// Whitespace-separated square integer matrix.
GramMatrix read_gram(const std::string& text);
std::string write_gram(const GramMatrix& g);

}  // namespace k3lab::lattice
