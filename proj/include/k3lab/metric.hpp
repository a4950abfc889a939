#pragma once

// The conformal metric g = rho |dt|^2 on P^1 attached to Weierstrass data,
// where rho is the area of the fibre torus, together with meshes, graph
// distances, volumes, curvature and comparison tools for metric spaces.

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "k3lab/weierstrass.hpp"

namespace k3lab::metric {

using Complex = std::complex<double>;
using weierstrass::WeierstrassData;

/// The affine chart t, or s = 1/t around infinity.
enum class Chart { T, S };

struct ChartPoint {
  Chart chart = Chart::T;
  Complex z;

  /// Coordinate in the other chart; throws PreconditionError for 0 <-> infinity.
  Complex in(Chart c) const;
  bool is_infinity() const { return chart == Chart::S && z == 0.0; }
  /// The same point written in the chart where |z| <= 1.
  ChartPoint canonical() const;
  std::string to_string() const;
};

/// Spherical (chordal) distance on the Riemann sphere of diameter 2.
double chordal_distance(const ChartPoint& a, const ChartPoint& b);

/// How (h8, h12) is fed to the torus area.
enum class Convention {
  Literal,  // mu(h8, h12) for the curve y^2 = 4x^3 - h8 x - h12
  G2G3,     // (g2, g3) = (-4 h8, -4 h12) for y^2 = x^3 + h8 x + h12
};

struct SingularPoint {
  ChartPoint where;
  weierstrass::Orders orders;
};

struct FactorValue {
  double rho = 0;
  bool singular = false;  // the fibre degenerates: infinite area
};

class ConformalFactorField {
 public:
  using Evaluator = std::function<FactorValue(Chart, Complex)>;

  /// Throws PreconditionError when both sections vanish identically.
  explicit ConformalFactorField(const WeierstrassData& w, Convention convention = Convention::Literal,
                                const weierstrass::NumericOptions& opt = {});
  /// A field given directly by its chart expressions, for model geometries.
  static ConformalFactorField custom(Evaluator rho, std::vector<SingularPoint> singular, std::string name);

  /// rho in the given chart; rho_S(s) = |s|^-4 rho_T(1/s).
  FactorValue at(Chart chart, Complex z) const;
  FactorValue at(const ChartPoint& p) const { return at(p.chart, p.z); }

  const std::vector<SingularPoint>& singular_points() const { return singular_; }
  /// The discriminant vanishes identically, so rho is infinite everywhere.
  bool degenerate() const { return degenerate_; }
  Convention convention() const { return convention_; }
  const std::optional<WeierstrassData>& source() const { return source_; }
  const std::string& name() const { return name_; }

 private:
  ConformalFactorField() = default;

  std::optional<WeierstrassData> source_;
  Convention convention_ = Convention::Literal;
  Evaluator eval_;
  std::vector<SingularPoint> singular_;
  bool degenerate_ = false;
  std::string name_;
};

/// rho(t) in the t chart. Inversion failures are rethrown with the location.
FactorValue conformal_factor(const ConformalFactorField& f, Complex t);

struct MeshOptions {
  int resolution = 64;             // base cells per chart side
  double exclusion_radius = 1e-4;  // chart-coordinate radius of removed disks
  double refine_ratio = 1.5;       // split cells whose metric size exceeds this times the median
  double stencil = 4.2;            // edges reach this many cell sides
  /// Excluded disks are shrunk until each carries at most this fraction of
  /// the total volume.
  double excluded_volume_fraction = 1e-3;
  std::size_t max_nodes = 400000;
};

struct MeshNode {
  ChartPoint where;
  double side = 0;  // cell side in chart coordinates
  double rho = 0;
  double cell_volume = 0;
  bool active = true;
};

struct MeshEdge {
  int a = 0, b = 0;
  Chart chart = Chart::T;  // chart in which the straight segment is taken
  double length = 0;
  /// Quadrature nodes on [0, 1] with weights; empty means the trapezoid rule
  /// on the endpoint values.
  std::vector<std::pair<double, double>> plan;
};

struct SphereMesh {
  std::vector<MeshNode> nodes;
  std::vector<MeshEdge> edges;
  std::vector<int> offsets;                   // CSR adjacency: offsets[n] .. offsets[n+1]
  std::vector<std::pair<int, int>> incident;  // (neighbour, edge index)
  std::vector<SingularPoint> singular_points;
  std::vector<double> exclusion_radius;       // per singular point
  MeshOptions options;
  double median_cell_length = 0;

  std::size_t active_count() const;
  /// Index of the active node closest (chordally) to p.
  int nearest_node(const ChartPoint& p) const;
};

/// Two-chart quadtree mesh refined toward singular points. Throws
/// PreconditionError for incompatible options or a degenerate field.
SphereMesh build_mesh(const ConformalFactorField& f, const MeshOptions& opt = {});
/// Same nodes, edges and quadrature plans, with rho taken from another field.
SphereMesh reweight(const SphereMesh& layout, const ConformalFactorField& f);
/// Copy of the mesh with the nodes for which `drop` holds deactivated.
SphereMesh without_nodes(const SphereMesh& mesh, const std::function<bool(const MeshNode&)>& drop);

/// Dijkstra rows, one per source node (unreachable nodes get +inf).
std::vector<std::vector<double>> shortest_distances(const SphereMesh& mesh, const std::vector<int>& sources);
/// Distance from each node to the nearest of the sources.
std::vector<double> distance_to_set(const SphereMesh& mesh, const std::vector<int>& sources);

struct DiameterResult {
  double diameter = 0;
  std::vector<int> landmarks;
  std::vector<std::vector<double>> rows;  // one Dijkstra row per landmark
  double last_change = 0;                 // relative change at the last doubling
};

/// Farthest-point landmarks, doubled from `start` until the diameter changes
/// by less than `stable` (relative) or `cap` landmarks are used.
DiameterResult diameter(const SphereMesh& mesh, int start = 64, double stable = 5e-3, int cap = 512);

struct VolumeResult {
  double value = 0;
  double error_estimate = 0;
};

/// Integral of rho over P^1 by adaptive polar cubature in both charts.
VolumeResult total_volume(const ConformalFactorField& f, double tol = 1e-4);
/// Integral of rho over the disk of radius r around p (in p's chart).
VolumeResult disk_volume(const ConformalFactorField& f, const ChartPoint& p, double r, double tol = 1e-6);
/// Sum of the cell volumes of nodes with d(p, node) <= r.
double ball_volume(const SphereMesh& mesh, int p, double r);
double ball_volume(const SphereMesh& mesh, const std::vector<double>& distances_from_p, double r);
double cell_volume_sum(const SphereMesh& mesh);

/// vol B(p, r1) / vol B(p, r2). Throws PreconditionError for r1 > r2 or an
/// inner ball holding only p.
double bishop_gromov_ratio(const SphereMesh& mesh, int p, double r1, double r2);

/// Gaussian curvature -Laplacian(log rho) / (2 rho) by the five-point
/// stencil of step h. Throws PreconditionError within 10 h of a singular point.
double curvature_fd(const ConformalFactorField& f, const ChartPoint& p, double h);

struct MetricSummary {
  double diameter = 0;
  double diameter_change = 0;
  double total_volume = 0;
  double volume_error = 0;
  std::vector<ChartPoint> landmarks;
  std::vector<std::vector<double>> distances;  // landmark distance matrix
  double unit_diameter_scale = 0;              // 1 / diameter
  std::size_t nodes = 0;

  /// Volume after rescaling the metric to unit diameter.
  double unit_volume() const { return total_volume * unit_diameter_scale * unit_diameter_scale; }
};

MetricSummary summarize(const SphereMesh& mesh, const ConformalFactorField& f, double volume_tol = 1e-4);

/// n points spread evenly over the sphere, in their canonical charts.
std::vector<ChartPoint> sphere_points(int n);
/// Distances between the mesh nodes nearest to the given points.
Eigen::MatrixXd landmark_distances(const SphereMesh& mesh, const std::vector<ChartPoint>& points);

// Flat orbifolds T^n / {+-1}, n = 2 or 3, and the unit segment.

struct FlatOrbifold {
  int dim = 3;
  Eigen::MatrixXd basis;  // rows span the lattice; det = 1

  /// Throws PreconditionError unless dim is 2 or 3 and |det - 1| <= 1e-12.
  FlatOrbifold(int n, Eigen::MatrixXd rows);
};

double flat_orbifold_distance(const FlatOrbifold& o, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct FlatDiameter {
  double value = 0;
  double error_bound = 0;  // true diameter lies in [value, value + error_bound]
};

/// Maximum of d(x, 0) over a grid on the fundamental parallelepiped; for
/// T^n / {+-1} this is the diameter.
FlatDiameter flat_orbifold_diameter(const FlatOrbifold& o, int grid);

struct SegmentSpace {
  double length = 1;
};

/// Half the sup-distortion of the identity correspondence; an upper bound on
/// the Gromov-Hausdorff distance. Throws PreconditionError on shape mismatch.
double gh_upper_bound(const Eigen::MatrixXd& d1, const Eigen::MatrixXd& d2);

struct SegmentFit {
  double length = 0;
  double deviation = 0;  // upper bound on the GH distance to [0, length]
};

SegmentFit segment_fit(const MetricSummary& summary);
SegmentFit segment_fit(const Eigen::MatrixXd& distances);

}  // namespace k3lab::metric
