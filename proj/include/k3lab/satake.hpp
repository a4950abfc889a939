#pragma once

// Period frames of positive 3-planes in the K3 lattice, their triangular
// normal form n exp(H) L0, boundary behaviour of sequences, and realization
// of boundary data as metric spaces.

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "k3lab/lattice.hpp"
#include "k3lab/metric.hpp"
#include "k3lab/weierstrass.hpp"

namespace k3lab::satake {

using lattice::StandardKind;

constexpr int kRank = 22;

/// Intersection form of the standard basis as a real matrix.
Eigen::MatrixXd standard_form(StandardKind kind);

/// The frame L0: columns x3 + x20, x2 + x21, x1 + x22.
Eigen::MatrixXd base_frame();

/// A 3-plane given by 22 x 3 coordinates in a standard basis.
struct PeriodFrame {
  Eigen::MatrixXd coords;
  StandardKind kind = StandardKind::E8Type;
};

/// Columns rescaled by Gram-Schmidt so that P^T Q P = 2 I. Throws
/// PreconditionError (with the inertia found) unless P^T Q P is positive.
PeriodFrame q_orthonormalize(const PeriodFrame& p);

struct IwasawaCoordinates {
  double a = 0, b = 0, c = 0;
  Eigen::MatrixXd frame;  // P k: rows 20-22 upper triangular, the alpha entries elsewhere
  Eigen::Matrix3d gauge;  // k in SO(3)
  bool orientation_flipped = false;  // the first input column was negated to land in SO(3)
  double frame_norm = 2;
  StandardKind kind = StandardKind::E8Type;

  /// Largest violation of the normal form: nonzero entries below the
  /// diagonal of rows 20-22, diagonal mismatch, Q-orthonormality, k^T k = I.
  double residual(const Eigen::MatrixXd& q) const;
};

/// Normalizes, then right-multiplies by k in SO(3) so that rows 20-22 become
/// upper triangular with diagonal (e^-c, e^-b-c, e^-a-b-c). Throws
/// PreconditionError ("non-Siegel position") when that block is singular.
IwasawaCoordinates triangularize(const PeriodFrame& p);

enum class BoundaryType { Interior, TypeA, TypeB, TypeC, TypeD, Indeterminate };
std::string to_string(BoundaryType t);

struct Thresholds {
  double divergence = 20;         // last value above this and the last three increasing
  double bounded_variation = 0.1; // total variation of the second half below this
  double siegel_c = 5;            // every term needs a, b, c >= -C
};

struct Trend {
  double last = 0;
  double variation = 0;  // total variation over the second half
  bool divergent = false;
  bool bounded = false;
};

struct BoundaryVerdict {
  BoundaryType btype = BoundaryType::Indeterminate;
  StandardKind kind = StandardKind::E8Type;
  /// Boundary component label: a, b1, b2, c1, c2, d (Gamma16 -> 1, E8 -> 2),
  /// or empty.
  std::string component;
  /// TypeA: rows 2-21 x columns 1-2 of the last frame; TypeB: the scaled
  /// 3 x 3 bottom block; TypeC: the scaled 2 x 2 corner.
  std::optional<Eigen::MatrixXd> payload;
  Trend a, b, c, ab, bc, abc;
  std::string diagnostics;
};

/// Throws PreconditionError for fewer than 3 terms or a term outside the
/// Siegel bound.
BoundaryVerdict classify_sequence(const std::vector<IwasawaCoordinates>& coords, const Thresholds& t = {});

struct Realization {
  enum class Kind { FlatOrbifold, Segment, WeierstrassFamily } kind = Kind::Segment;
  std::optional<metric::FlatOrbifold> orbifold;  // det 1
  double unit_scale = 1;                          // multiply distances by this for unit diameter
  metric::FlatDiameter diameter;                  // of the det 1 orbifold
  metric::SegmentSpace segment;
  std::optional<weierstrass::WeierstrassData> family;
  std::string description;
};

/// TypeB/TypeC over Gamma16 -> flat orbifold T^3 or T^2 / {+-1} from the
/// payload rows; TypeB/TypeC over E8 and TypeD -> unit segment; TypeA needs
/// the accompanying Weierstrass data. Throws PreconditionError otherwise.
Realization phi_realize(const BoundaryVerdict& v, const std::optional<weierstrass::WeierstrassData>& family = {},
                        int grid = 0);

struct PolarizationReport {
  bool passed = false;
  BoundaryVerdict verdict;
  int norm = 0;                  // lambda . lambda = 2d
  double max_plane_residual = 0;  // max of -r.r / lambda.lambda, r the part of lambda off the plane
  std::string diagnostics;
};

/// Checks that lambda (integral, primitive, positive even norm) lies in every
/// plane, then classifies the sequence: passes iff TypeA, TypeD or Interior.
PolarizationReport polarized_filter(const std::vector<PeriodFrame>& frames, const std::vector<double>& lambda,
                                    const Thresholds& t = {}, double plane_tol = 1e-10);

enum class BasisDirection { XToW, WToX };

/// v_k, v_{23-k} -> (v_k + v_{23-k}) / sqrt 2, (v_k - v_{23-k}) / sqrt 2 for
/// k = 1, 2, 3; the identity elsewhere. Self-inverse, so both directions agree.
Eigen::VectorXd basis_convert(const Eigen::VectorXd& v, BasisDirection direction);

// Synthetic data.

/// exp(Y - Q^-1 Y^T Q) for Y with random entries of size `scale` on the
/// blocks above the diagonal (top = x1..x3, middle, bottom = x20..x22).
Eigen::MatrixXd random_unipotent(StandardKind kind, std::mt19937_64& gen, double scale);
Eigen::Matrix3d random_rotation(std::mt19937_64& gen);
/// n exp(H(a+b+c, b+c, c)) L0.
Eigen::MatrixXd standard_frame(double a, double b, double c, const Eigen::MatrixXd& n);

/// Reads frames from CSV: 22 rows of 3 numbers per frame, blank lines and
/// lines starting with '#' ignored. Throws ParseError with the line number.
std::vector<Eigen::MatrixXd> read_frames_csv(const std::string& text);

}  // namespace k3lab::satake
