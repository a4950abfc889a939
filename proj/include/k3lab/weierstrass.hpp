#pragma once

// Weierstrass data (h8, h12) on P^1, discriminants, vanishing orders,
// GIT stability of the pencil, Kodaira fibre types and the SL2 x C* action.
//
// Conventions: the curve is y^2 = 4x^3 - h8 x - h12, the discriminant is
// h8^3 - 27 h12^2 and j = 1728 h8^3 / discriminant.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "k3lab/exact.hpp"
#include "k3lab/polynomial.hpp"

namespace k3lab::weierstrass {

using Complex = std::complex<double>;
using poly::ComplexPoly;
using poly::ExactPoly;

constexpr int kCap8 = 8;
constexpr int kCap12 = 12;
constexpr int kCapDelta = 24;
/// Order of vanishing of an identically zero section.
constexpr int kInfiniteOrder = 1 << 20;

enum class Mode { Exact, Numeric };

class WeierstrassData {
 public:
  /// Throws PreconditionError on degree overflow or when both sections vanish.
  static WeierstrassData exact(ExactPoly h8, ExactPoly h12);
  static WeierstrassData numeric(ComplexPoly h8, ComplexPoly h12);

  Mode mode() const { return mode_; }
  /// Exact sections; only meaningful in exact mode.
  const ExactPoly& h8() const { return h8_; }
  const ExactPoly& h12() const { return h12_; }
  /// Floating sections, available in both modes.
  const ComplexPoly& h8_numeric() const { return n8_; }
  const ComplexPoly& h12_numeric() const { return n12_; }
  WeierstrassData to_numeric() const { return numeric(n8_, n12_); }

 private:
  Mode mode_ = Mode::Exact;
  ExactPoly h8_, h12_;
  ComplexPoly n8_, n12_;
};

enum class ParseMode { Auto, Exact, Numeric };

/// Parses `h8 = <poly>; h12 = <poly>` (grammar in docs/weierstrass-grammar.md).
/// Throws ParseError with the byte offset of the offending input.
WeierstrassData parse_weierstrass(const std::string& text, ParseMode mode = ParseMode::Auto);
std::string to_string(const WeierstrassData& w);

struct Discriminant {
  Mode mode = Mode::Exact;
  ExactPoly exact;
  ComplexPoly numeric;
  bool identically_zero = false;
};

struct NumericOptions {
  /// Relative coefficient error the data is assumed to carry. A Taylor
  /// coefficient counts as zero when a perturbation of this relative size
  /// could cancel it; cluster centres closer than about sqrt(tol) merge.
  double tol = 1e-8;
};

Discriminant discriminant(const WeierstrassData& w, const NumericOptions& opt = {});
ExactPoly discriminant(const ExactPoly& h8, const ExactPoly& h12);

/// A point of P^1, or (exact mode) the set of roots of an irreducible-or-not
/// squarefree factor whose roots all carry the same vanishing orders.
struct Point {
  bool at_infinity = false;
  ExactPoly factor;                 // exact mode, finite points
  std::vector<Complex> locations;   // approximate positions (one per point)
  std::size_t count() const { return at_infinity ? 1 : locations.size(); }
  std::string label() const;
};

struct Orders {
  int v8 = 0;
  int v12 = 0;
  int vdelta = 0;
};

struct PointOrders {
  Point point;
  Orders orders;
};

struct OrderTable {
  std::vector<PointOrders> entries;  // only points where some section vanishes
  bool h8_zero = false;
  bool h12_zero = false;
  bool delta_zero = false;
  // Numeric mode: ratio of cluster spread to cluster separation (0 in exact
  // mode) and whether the orders fail to add up to the degree caps.
  double condition_estimate = 0;
  bool ill_conditioned = false;
  std::string diagnostics;
};

OrderTable vanishing_orders(const WeierstrassData& w, const NumericOptions& opt = {});

enum class Stability { Stable, SemistableNotStable, Unstable };
std::string to_string(Stability s);

/// [a : b] in the weighted projective line P(2, 3); invariant = a^3 / b^2.
struct NormalForm {
  bool exact = false;
  Gaussian a, b;
  Complex a_numeric, b_numeric;
  /// nullopt when b = 0.
  std::optional<Gaussian> invariant;
  std::optional<Complex> invariant_numeric;
  std::string to_string() const;
};

struct StabilityReport {
  Stability cls = Stability::Stable;
  bool polystable = true;
  std::vector<PointOrders> witnesses;
  bool delta_identically_zero = false;
  std::optional<NormalForm> normal_form;
  OrderTable orders;
};

StabilityReport classify_stability(const WeierstrassData& w, const NumericOptions& opt = {});
bool is_jacobian_k3(const WeierstrassData& w, const NumericOptions& opt = {});

struct Matrix2 {
  Gaussian a{1}, b{0}, c{0}, d{1};
};
struct Matrix2c {
  Complex a{1}, b{0}, c{0}, d{1};
};

/// h8 -> lambda^2 (ct+d)^8 h8((at+b)/(ct+d)), h12 likewise with lambda^3 and
/// (ct+d)^12. Throws PreconditionError unless det m = 1 exactly.
WeierstrassData group_act(const WeierstrassData& w, const Matrix2& m, const Gaussian& lambda);
/// Numeric version; det m must be 1 within 1e-12.
WeierstrassData group_act(const WeierstrassData& w, const Matrix2c& m, Complex lambda);

struct KodairaAssignment {
  std::string symbol;  // I_n, II, III, IV, I_n*, II*, III*, IV*
  int n = 0;           // for I_n and I_n*
  Orders orders;
};

/// Kodaira symbol from the orders of (h8, h12, discriminant) at a point.
/// Throws PreconditionError when vdelta < 1, when the orders are inconsistent,
/// or when the model is not minimal there (v8 >= 4 and v12 >= 6).
KodairaAssignment kodaira_type(int v8, int v12, int vdelta);

}  // namespace k3lab::weierstrass
