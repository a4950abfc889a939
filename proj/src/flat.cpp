#include <algorithm>
#include <cmath>
#include <limits>

#include "k3lab/error.hpp"
#include "k3lab/metric.hpp"

namespace k3lab::metric {

namespace {

// LLL reduction of the rows of b (delta = 0.99).
Eigen::MatrixXd lll(Eigen::MatrixXd b) {
  const int n = static_cast<int>(b.rows());
  auto gram_schmidt = [&](Eigen::MatrixXd& bs, Eigen::MatrixXd& mu) {
    bs = b;
    mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        mu(i, j) = b.row(i).dot(bs.row(j)) / bs.row(j).squaredNorm();
        bs.row(i) -= mu(i, j) * bs.row(j);
      }
  };
  Eigen::MatrixXd bs, mu;
  gram_schmidt(bs, mu);
  for (int k = 1, guard = 0; k < n && guard < 10000; ++guard) {
    for (int j = k - 1; j >= 0; --j) {
      const double q = std::round(mu(k, j));
      if (q != 0) {
        b.row(k) -= q * b.row(j);
        gram_schmidt(bs, mu);
      }
    }
    if (bs.row(k).squaredNorm() >= (0.99 - mu(k, k - 1) * mu(k, k - 1)) * bs.row(k - 1).squaredNorm()) {
      ++k;
    } else {
      b.row(k).swap(b.row(k - 1));
      gram_schmidt(bs, mu);
      k = std::max(k - 1, 1);
    }
  }
  return b;
}

// Distance from v to the lattice spanned by the rows of b (reduced).
double lattice_distance(const Eigen::MatrixXd& b, const Eigen::MatrixXd& inv, Eigen::RowVectorXd v) {
  const int n = static_cast<int>(b.rows());
  Eigen::RowVectorXd c = v * inv;
  for (int i = 0; i < n; ++i) c(i) -= std::round(c(i));
  const Eigen::RowVectorXd v0 = c * b;
  // Any closer lattice point w satisfies |w| <= 2|v0| <= sum |b_i|.
  double reach = 0;
  for (int i = 0; i < n; ++i) reach += b.row(i).norm();
  std::vector<int> bound(n);
  for (int i = 0; i < n; ++i) {
    bound[i] = static_cast<int>(std::floor(reach * inv.col(i).norm()));
    if (bound[i] > 8) throw PreconditionError("flat orbifold basis is too skew for the distance search");
  }
  double best = v0.norm();
  std::vector<int> k(n);
  for (int i = 0; i < n; ++i) k[i] = -bound[i];
  for (;;) {
    Eigen::RowVectorXd w = v0;
    for (int i = 0; i < n; ++i) w += k[i] * b.row(i);
    best = std::min(best, w.norm());
    int i = 0;
    while (i < n && ++k[i] > bound[i]) {
      k[i] = -bound[i];
      ++i;
    }
    if (i == n) break;
  }
  return best;
}

}  // namespace

FlatOrbifold::FlatOrbifold(int n, Eigen::MatrixXd rows) : dim(n), basis(std::move(rows)) {
  if (n != 2 && n != 3) throw PreconditionError("flat orbifold dimension must be 2 or 3");
  if (basis.rows() != n || basis.cols() != n) throw PreconditionError("flat orbifold basis must be square of size n");
  if (std::abs(basis.determinant() - 1.0) > 1e-12) throw PreconditionError("flat orbifold basis must have det 1");
}

double flat_orbifold_distance(const FlatOrbifold& o, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != o.dim || y.size() != o.dim) throw PreconditionError("flat orbifold point has wrong dimension");
  const Eigen::MatrixXd b = lll(o.basis);
  const Eigen::MatrixXd inv = b.inverse();
  return std::min(lattice_distance(b, inv, (x - y).transpose()), lattice_distance(b, inv, (x + y).transpose()));
}

FlatDiameter flat_orbifold_diameter(const FlatOrbifold& o, int grid) {
  if (grid < 1) throw PreconditionError("flat_orbifold_diameter: grid must be positive");
  const Eigen::MatrixXd b = lll(o.basis);
  const Eigen::MatrixXd inv = b.inverse();
  const int n = o.dim;
  FlatDiameter out;
  std::vector<int> k(n, 0);
  for (;;) {
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(n);
    for (int i = 0; i < n; ++i) x += (static_cast<double>(k[i]) / grid) * b.row(i);
    out.value = std::max(out.value, lattice_distance(b, inv, x));
    int i = 0;
    while (i < n && ++k[i] == grid) {
      k[i] = 0;
      ++i;
    }
    if (i == n) break;
  }
  // d(., 0) is 1-Lipschitz and every point lies this close to the grid.
  for (int i = 0; i < n; ++i) out.error_bound += b.row(i).norm();
  out.error_bound *= 0.5 / grid;
  return out;
}

double gh_upper_bound(const Eigen::MatrixXd& d1, const Eigen::MatrixXd& d2) {
  if (d1.rows() != d1.cols() || d1.rows() != d2.rows() || d1.cols() != d2.cols())
    throw PreconditionError("gh_upper_bound: distance matrices must be square and of equal size");
  return 0.5 * (d1 - d2).cwiseAbs().maxCoeff();
}

SegmentFit segment_fit(const Eigen::MatrixXd& d) {
  if (d.rows() != d.cols() || d.rows() == 0) throw PreconditionError("segment_fit: need a square distance matrix");
  Eigen::Index end = 0;
  d.rowwise().maxCoeff().maxCoeff(&end);
  const Eigen::VectorXd f = d.row(end).transpose();
  SegmentFit out;
  out.length = f.maxCoeff();
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      out.deviation = std::max(out.deviation, std::abs(d(i, j) - std::abs(f(i) - f(j))));
  out.deviation *= 0.5;
  return out;
}

SegmentFit segment_fit(const MetricSummary& s) {
  const auto n = static_cast<Eigen::Index>(s.distances.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = s.distances[i][j];
  return segment_fit(d);
}

}  // namespace k3lab::metric
