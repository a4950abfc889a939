#include "k3lab/satake.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "k3lab/error.hpp"

namespace k3lab::satake {

namespace {

constexpr int kTop = 0, kMid = 3, kBottom = 19;  // first index of each block

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x + 0.0;  // no -0
  return os.str();
}

Trend trend(const std::vector<double>& x, const Thresholds& t) {
  Trend out;
  const std::size_t n = x.size();
  out.last = x.back();
  for (std::size_t k = n / 2 + 1; k < n; ++k) out.variation += std::abs(x[k] - x[k - 1]);
  out.divergent = x[n - 1] > t.divergence && x[n - 1] > x[n - 2] && x[n - 2] > x[n - 3];
  out.bounded = out.variation < t.bounded_variation;
  return out;
}

std::string describe(const char* name, const Trend& tr) {
  return std::string(name) + "=" + fmt(tr.last) + (tr.divergent ? " (divergent)" : tr.bounded ? " (bounded)" : "") +
         " var " + fmt(tr.variation);
}

}  // namespace

Eigen::MatrixXd standard_form(StandardKind kind) {
  const lattice::GramMatrix g = lattice::standard_gram(kind).gram;
  Eigen::MatrixXd q(kRank, kRank);
  for (int i = 0; i < kRank; ++i)
    for (int j = 0; j < kRank; ++j) q(i, j) = g(i, j).get_d();
  return q;
}

Eigen::MatrixXd base_frame() {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(kRank, 3);
  for (int j = 0; j < 3; ++j) {
    l(2 - j, j) = 1;
    l(kBottom + j, j) = 1;
  }
  return l;
}

PeriodFrame q_orthonormalize(const PeriodFrame& p) {
  if (p.coords.rows() != kRank || p.coords.cols() != 3)
    throw PreconditionError("period frame must be 22 x 3");
  const Eigen::MatrixXd q = standard_form(p.kind);
  const Eigen::Matrix3d g = p.coords.transpose() * q * p.coords;
  // Already normalized up to the rounding error of forming g: leave as is,
  // since re-normalizing would smear that error into small entries.
  const Eigen::Matrix3d bound = 4 * kRank * std::numeric_limits<double>::epsilon() *
                                (p.coords.cwiseAbs().transpose() * q.cwiseAbs() * p.coords.cwiseAbs());
  if (((g - 2 * Eigen::Matrix3d::Identity()).cwiseAbs().array() <= bound.array() + 1e-15).all()) return p;
  Eigen::LLT<Eigen::Matrix3d> llt(g);
  const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(g).eigenvalues();
  const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (llt.info() != Eigen::Success || ev.minCoeff() <= tol) {
    int pos = 0, neg = 0, null = 0;
    for (int k = 0; k < 3; ++k) (ev(k) > tol ? pos : ev(k) < -tol ? neg : null)++;
    throw PreconditionError("frame does not span a positive plane: inertia (" + std::to_string(pos) + ", " +
                            std::to_string(neg) + ", " + std::to_string(null) + ")");
  }
  // g = U^T U; P U^-1 sqrt 2 is Gram-Schmidt on the columns.
  const Eigen::Matrix3d u = llt.matrixU();
  PeriodFrame out = p;
  out.coords = std::sqrt(2.0) * u.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(p.coords);
  return out;
}

double IwasawaCoordinates::residual(const Eigen::MatrixXd& q) const {
  double r = 0;
  const Eigen::Vector3d diag{std::exp(-c), std::exp(-b - c), std::exp(-a - b - c)};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < i; ++j) r = std::max(r, std::abs(frame(kBottom + i, j)));
    r = std::max(r, std::abs(frame(kBottom + i, i) - diag(i)));
  }
  r = std::max(r, (frame.transpose() * q * frame - 2 * Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
  r = std::max(r, (gauge.transpose() * gauge - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
  return r;
}

IwasawaCoordinates triangularize(const PeriodFrame& input) {
  PeriodFrame p = q_orthonormalize(input);
  IwasawaCoordinates out;
  out.kind = p.kind;
  auto rq = [](const Eigen::Matrix3d& bottom, Eigen::Matrix3d& r, Eigen::Matrix3d& k) {
    // RQ through QR of (J B)^T, J the reversal.
    const Eigen::Matrix3d j = Eigen::Matrix3d::Identity().rowwise().reverse();
    Eigen::HouseholderQR<Eigen::Matrix3d> qr((j * bottom).transpose());
    const Eigen::Matrix3d rt = qr.matrixQR().triangularView<Eigen::Upper>();
    const Eigen::Matrix3d qt = qr.householderQ();
    r = j * rt.transpose() * j;
    k = j * qt.transpose();
    for (int i = 0; i < 3; ++i)
      if (r(i, i) < 0) {
        r.col(i) *= -1;
        k.row(i) *= -1;
      }
  };
  Eigen::Matrix3d bottom = p.coords.block(kBottom, 0, 3, 3), r, k;
  const double scale = bottom.cwiseAbs().maxCoeff();
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(bottom).singularValues();
  if (scale == 0 || sv(2) <= 1e-14 * sv(0))
    throw PreconditionError("non-Siegel position: rows 20-22 of the frame are singular (the plane meets the flag)");
  rq(bottom, r, k);
  if (k.determinant() < 0) {
    p.coords.col(0) *= -1;
    bottom.col(0) *= -1;
    rq(bottom, r, k);
    out.orientation_flipped = true;
  }
  // B = R K, so B K^T = R.
  out.gauge = k.transpose();
  out.frame = p.coords * out.gauge;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) out.frame(kBottom + i, j) = 0;
  const double d1 = r(0, 0), d2 = r(1, 1), d3 = r(2, 2);
  out.c = -std::log(d1);
  out.b = std::log(d1) - std::log(d2);
  out.a = std::log(d2) - std::log(d3);
  return out;
}

std::string to_string(BoundaryType t) {
  switch (t) {
    case BoundaryType::Interior: return "Interior";
    case BoundaryType::TypeA: return "TypeA";
    case BoundaryType::TypeB: return "TypeB";
    case BoundaryType::TypeC: return "TypeC";
    case BoundaryType::TypeD: return "TypeD";
    case BoundaryType::Indeterminate: return "Indeterminate";
  }
  return "?";
}

BoundaryVerdict classify_sequence(const std::vector<IwasawaCoordinates>& coords, const Thresholds& t) {
  if (coords.size() < 3) throw PreconditionError("classify_sequence: need at least 3 terms");
  std::vector<double> a, b, c, ab, bc, abc;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const auto& x = coords[k];
    if (x.a < -t.siegel_c || x.b < -t.siegel_c || x.c < -t.siegel_c)
      throw PreconditionError("classify_sequence: term " + std::to_string(k) + " has (a, b, c) = (" + fmt(x.a) +
                              ", " + fmt(x.b) + ", " + fmt(x.c) + ") below -" + fmt(t.siegel_c) +
                              " (outside the Siegel set)");
    if (x.kind != coords.front().kind) throw PreconditionError("classify_sequence: mixed standard basis kinds");
    a.push_back(x.a);
    b.push_back(x.b);
    c.push_back(x.c);
    ab.push_back(x.a + x.b);
    bc.push_back(x.b + x.c);
    abc.push_back(x.a + x.b + x.c);
  }
  BoundaryVerdict v;
  v.kind = coords.front().kind;
  v.a = trend(a, t);
  v.b = trend(b, t);
  v.c = trend(c, t);
  v.ab = trend(ab, t);
  v.bc = trend(bc, t);
  v.abc = trend(abc, t);
  const char* tag = v.kind == StandardKind::Gamma16Type ? "1" : "2";
  const IwasawaCoordinates& last = coords.back();
  const Eigen::MatrixXd& l = last.frame;

  if (v.b.divergent) {
    v.btype = BoundaryType::TypeD;
    v.component = "d";
  } else if (v.c.divergent && v.ab.bounded) {
    v.btype = BoundaryType::TypeB;
    v.component = std::string("b") + tag;
    v.payload = std::exp(last.c + 2.0 / 3 * last.b + 1.0 / 3 * last.a) * l.block(kBottom, 0, 3, 3);
  } else if (v.b.bounded && v.a.divergent && v.c.divergent) {
    v.btype = BoundaryType::TypeC;
    v.component = std::string("c") + tag;
    v.payload = std::exp(last.c + 0.5 * last.b) * l.block(kBottom, 0, 2, 2);
  } else if (v.bc.bounded && v.a.divergent) {
    v.btype = BoundaryType::TypeA;
    v.component = "a";
    v.payload = l.block(1, 0, 20, 2);
  } else if (v.abc.bounded) {
    v.btype = BoundaryType::Interior;
  } else {
    v.btype = BoundaryType::Indeterminate;
  }
  v.diagnostics = describe("a", v.a) + "; " + describe("b", v.b) + "; " + describe("c", v.c) + "; " +
                  describe("a+b", v.ab) + "; " + describe("b+c", v.bc) + "; " + describe("a+b+c", v.abc);
  return v;
}

Realization phi_realize(const BoundaryVerdict& v, const std::optional<weierstrass::WeierstrassData>& family,
                        int grid) {
  Realization out;
  switch (v.btype) {
    case BoundaryType::Interior:
    case BoundaryType::Indeterminate:
      throw PreconditionError("phi_realize: verdict " + to_string(v.btype) + " has no boundary realization");
    case BoundaryType::TypeA:
      if (!family) throw PreconditionError("phi_realize: a type (a) limit requires accompanying Weierstrass data");
      out.kind = Realization::Kind::WeierstrassFamily;
      out.family = family;
      out.description = "generalized KE metric of the Weierstrass family";
      return out;
    case BoundaryType::TypeD:
      out.kind = Realization::Kind::Segment;
      out.description = "unit segment";
      return out;
    case BoundaryType::TypeB:
    case BoundaryType::TypeC:
      break;
  }
  if (v.kind == StandardKind::E8Type) {
    out.kind = Realization::Kind::Segment;
    out.description = "unit segment";
    return out;
  }
  if (!v.payload) throw PreconditionError("phi_realize: missing payload");
  const int n = v.btype == BoundaryType::TypeB ? 3 : 2;
  Eigen::MatrixXd a = *v.payload;
  const double det = a.determinant();
  if (!(det > 0)) throw PreconditionError("phi_realize: payload is not a positive lattice basis");
  a /= std::pow(det, 1.0 / n);
  // The payload is upper triangular; force det 1 exactly on the diagonal.
  if (a.isUpperTriangular(1e-300)) a(n - 1, n - 1) /= a.determinant();
  out.kind = Realization::Kind::FlatOrbifold;
  out.orbifold = metric::FlatOrbifold(n, a);
  out.diameter = metric::flat_orbifold_diameter(*out.orbifold, grid > 0 ? grid : (n == 3 ? 24 : 96));
  out.unit_scale = 1.0 / out.diameter.value;
  out.description = n == 3 ? "flat orbifold T^3/{+-1}" : "flat orbifold T^2/{+-1}";
  return out;
}

PolarizationReport polarized_filter(const std::vector<PeriodFrame>& frames, const std::vector<double>& lambda,
                                    const Thresholds& t, double plane_tol) {
  if (frames.empty()) throw PreconditionError("polarized_filter: no frames");
  if (lambda.size() != kRank) throw PreconditionError("polarized_filter: lambda needs 22 coordinates");
  std::vector<long> ints;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    const double r = std::round(lambda[k]);
    if (std::abs(lambda[k] - r) > 1e-9)
      throw PreconditionError("polarized_filter: lambda coordinate " + std::to_string(k + 1) + " = " +
                              fmt(lambda[k]) + " is not integral");
    ints.push_back(static_cast<long>(r));
  }
  const StandardKind kind = frames.front().kind;
  const lattice::GramMatrix gram = lattice::standard_gram(kind).gram;
  const lattice::VectorProps props = lattice::vector_props(lattice::LatticeVector::from_ints(ints), gram);
  if (!props.primitive) throw PreconditionError("polarized_filter: lambda is not primitive");
  if (sgn(props.norm) <= 0) throw PreconditionError("polarized_filter: lambda . lambda must be positive");
  PolarizationReport rep;
  rep.norm = static_cast<int>(props.norm.get_si());

  const Eigen::MatrixXd q = standard_form(kind);
  Eigen::VectorXd l(kRank);
  for (int k = 0; k < kRank; ++k) l(k) = static_cast<double>(ints[k]);
  std::vector<IwasawaCoordinates> coords;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const PeriodFrame p = q_orthonormalize(frames[k]);
    // With y = P^T Q lambda / 2 the residual r = lambda - P y is Q-orthogonal
    // to the plane, hence in a negative definite space, and
    // lambda.lambda = 2 |y|^2 + r.r. The defect -r.r / lambda.lambda avoids
    // forming P y, whose entries can be huge.
    const Eigen::Vector3d y = 0.5 * (p.coords.transpose() * (q * l));
    const double res = std::max(0.0, (2 * y.squaredNorm() - rep.norm) / rep.norm);
    rep.max_plane_residual = std::max(rep.max_plane_residual, res);
    if (res > plane_tol)
      throw PreconditionError("polarized_filter: lambda is not in the plane of frame " + std::to_string(k) +
                              " (relative defect " + fmt(res) + ")");
    coords.push_back(triangularize(p));
  }
  rep.verdict = classify_sequence(coords, t);
  const BoundaryType bt = rep.verdict.btype;
  rep.passed = bt == BoundaryType::TypeA || bt == BoundaryType::TypeD || bt == BoundaryType::Interior;
  if (bt == BoundaryType::TypeB || bt == BoundaryType::TypeC)
    rep.diagnostics = "polarized sequence reached " + to_string(bt) + ", where c must stay bounded; " +
                      rep.verdict.diagnostics;
  else if (bt == BoundaryType::Indeterminate)
    rep.diagnostics = "trend indeterminate; " + rep.verdict.diagnostics;
  else
    rep.diagnostics = rep.verdict.diagnostics;
  return rep;
}

Eigen::VectorXd basis_convert(const Eigen::VectorXd& v, BasisDirection) {
  if (v.size() != kRank) throw PreconditionError("basis_convert: vector needs 22 coordinates");
  Eigen::VectorXd w = v;
  const double s = std::sqrt(0.5);
  for (int k = 0; k < 3; ++k) {
    const double x = v(k), y = v(kRank - 1 - k);
    w(k) = s * (x + y);
    w(kRank - 1 - k) = s * (x - y);
  }
  return w;
}

Eigen::MatrixXd random_unipotent(StandardKind kind, std::mt19937_64& gen, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(kRank, kRank);
  for (int i = kTop; i < kMid; ++i) {
    for (int j = i + 1; j < kMid; ++j) y(i, j) = u(gen);
    for (int j = kMid; j < kRank; ++j) y(i, j) = u(gen);
  }
  for (int i = kMid; i < kBottom; ++i)
    for (int j = kBottom; j < kRank; ++j) y(i, j) = u(gen);
  const Eigen::MatrixXd q = standard_form(kind);
  const Eigen::MatrixXd x = y - q.inverse() * y.transpose() * q;
  // x is nilpotent, so the series terminates.
  Eigen::MatrixXd n = Eigen::MatrixXd::Identity(kRank, kRank), term = n;
  for (int k = 1; k < kRank; ++k) {
    term = term * x / k;
    if (term.cwiseAbs().maxCoeff() == 0) break;
    n += term;
  }
  return n;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = g(gen);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(m);
  Eigen::Matrix3d q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1;
  return q;
}

Eigen::MatrixXd standard_frame(double a, double b, double c, const Eigen::MatrixXd& n) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(kRank);
  const double e[3] = {a + b + c, b + c, c};
  for (int k = 0; k < 3; ++k) {
    h(k) = e[k];
    h(kRank - 1 - k) = -e[k];
  }
  return n * (h.array().exp().matrix().asDiagonal() * base_frame());
}

std::vector<Eigen::MatrixXd> read_frames_csv(const std::string& text) {
  std::vector<Eigen::MatrixXd> frames;
  std::vector<std::array<double, 3>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0, line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t start = offset;
    offset += line.size() + 1;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::array<double, 3> row{};
    std::istringstream cells(line);
    std::string cell;
    int count = 0;
    while (std::getline(cells, cell, ',')) {
      if (count == 3) throw ParseError("line " + std::to_string(line_no) + ": more than 3 columns", start);
      std::size_t used = 0;
      try {
        row[count] = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number", start);
      }
      if (cell.find_first_not_of(" \t\r", used) != std::string::npos)
        throw ParseError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number", start);
      ++count;
    }
    if (count != 3) throw ParseError("line " + std::to_string(line_no) + ": expected 3 columns", start);
    rows.push_back(row);
    if (rows.size() == kRank) {
      Eigen::MatrixXd m(kRank, 3);
      for (int i = 0; i < kRank; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = rows[i][j];
      frames.push_back(m);
      rows.clear();
    }
  }
  if (!rows.empty())
    throw ParseError("trailing frame has " + std::to_string(rows.size()) + " rows, expected 22", text.size());
  return frames;
}

}  // namespace k3lab::satake
