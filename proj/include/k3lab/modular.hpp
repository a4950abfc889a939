#pragma once

// Elliptic-curve period numerics for lattices in C: Eisenstein invariants,
// the j-invariant, reduction to the standard fundamental domain, inversion of
// j, and the torus area attached to a Weierstrass cubic y^2 = 4x^3 - a x - b.

#include <complex>
#include <string>

namespace k3lab::modular {

using Complex = std::complex<double>;

/// Numerical tolerances shared by the routines below.
struct Tolerances {
  double series_tail = 1e-14;     // bound on the dropped q-series tail
  double invert_residual = 1e-10;  // |j(tau) - j| <= this * max(1, |j|)
  int invert_max_iterations = 80;
  int invert_restarts = 3;
  double min_im_tau = 0.05;       // eisenstein() refuses smaller Im(tau)
};

const Tolerances& default_tolerances();

struct Reduction {
  Complex tau;
  /// Moves applied left to right: 'T' = z+1, 't' = z-1, 'S' = -1/z.
  std::string word;
};

/// Moves tau into |z| >= 1, -1/2 <= Re z <= 1/2. On the boundary ties go to
/// Re z >= 0. Throws PreconditionError when Im(tau) <= 0.
Reduction reduce_fundamental(Complex tau);

struct Invariants {
  Complex g2;
  Complex g3;
};

/// g2, g3 of the lattice <1, tau> from E4, E6 truncated after `terms` terms.
Invariants eisenstein(Complex tau, int terms);
/// Same, with the number of terms chosen from the tail bound.
Invariants eisenstein(Complex tau);
/// Smallest N with sum_{n>N} zeta(5) n^5 |q|^n below `tail`.
int terms_for_tail(double im_tau, double tail);

struct LatticeSums {
  Complex a;            // 60 * sum gamma^-4
  Complex b;            // 140 * sum gamma^-6
  Complex a_raw;        // plain partial sum over the box |m|,|n| <= cutoff
  Complex b_raw;
  double a_tail_estimate;  // |a - a_raw|, decays like cutoff^-2
  double b_tail_estimate;  // decays like cutoff^-4
};

/// Partial sums over m*w1 + n*w2 with |m|,|n| <= cutoff. The box tail of the
/// a-sum is c/cutoff^2 to leading order, so `a` is the Richardson combination
/// of the cutoff and cutoff/2 sums (likewise `b` with exponent 4).
LatticeSums eisenstein_bruteforce(Complex w1, Complex w2, int cutoff);

/// A possibly infinite j value.
struct JValue {
  Complex value;
  bool infinite = false;
};

/// 1728 a^3 / (a^3 - 27 b^2). Throws PreconditionError on (0, 0).
JValue j_from_ab(Complex a, Complex b);
/// Same, given the discriminant a^3 - 27 b^2 computed elsewhere.
JValue j_from_ab(Complex a, Complex b, Complex discriminant);
Complex j_from_tau(Complex tau);

/// tau in the fundamental domain with j(tau) = j. Throws ConvergenceError.
Complex invert_j(Complex j);

struct AreaResult {
  double area = 0;
  Complex tau_used;
  double omega_abs_sq = 0;
  bool singular = false;     // a^3 = 27 b^2: infinite area
  bool used_g2_route = true;
  double cross_check = 0;    // relative disagreement of the other route, 0 if unusable
};

/// Area of C / L for the lattice L whose invariants are (a, b).
AreaResult torus_area(Complex a, Complex b);
AreaResult torus_area(Complex a, Complex b, Complex discriminant);

/// max(1, log x), with log_plus(0) = 1.
double log_plus(double x);

/// area * (|3a|^{1/2} + |b|^{1/3}) / log+|j| for the representative (a, b).
double lambda_of_ab(Complex a, Complex b);
/// Uses the representative (g2(tau), g3(tau)) with tau = invert_j(j).
double lambda_of_j(Complex j);

}  // namespace k3lab::modular
