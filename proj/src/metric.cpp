#include "k3lab/metric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "k3lab/error.hpp"
#include "k3lab/modular.hpp"

namespace k3lab::metric {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

using poly::ComplexPoly;

// Gauss-Legendre rules on [-1, 1].
struct Rule {
  std::vector<double> x, w;
};

const Rule& gauss(int n) {
  static const Rule g2{{-0.5773502691896257, 0.5773502691896257}, {1.0, 1.0}};
  static const Rule g4{{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526},
                       {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538}};
  return n == 2 ? g2 : g4;
}

bool owned(Chart chart, Complex z) { return chart == Chart::T ? std::abs(z) <= 1.0 : std::abs(z) < 1.0; }

// Distance from p to the segment [a, b].
double segment_distance(Complex p, Complex a, Complex b) {
  const Complex d = b - a;
  const double len2 = std::norm(d);
  if (len2 == 0.0) return std::abs(p - a);
  const double u = std::clamp(((p - a) * std::conj(d)).real() / len2, 0.0, 1.0);
  return std::abs(p - (a + u * d));
}

// Singular points expressed in one chart (points not representable there
// are skipped; they are far from that chart's disk anyway).
struct LocalPoint {
  Complex z;
  double exclusion;
};

std::vector<LocalPoint> local_points(const std::vector<SingularPoint>& pts, const std::vector<double>& radii,
                                     Chart chart) {
  std::vector<LocalPoint> out;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const ChartPoint& p = pts[k].where;
    if (p.chart != chart && p.z == 0.0) continue;
    const Complex z = p.in(chart);
    if (std::abs(z) <= 3.0) out.push_back({z, radii[k]});
  }
  return out;
}

}  // namespace

Complex ChartPoint::in(Chart c) const {
  if (c == chart) return z;
  if (z == 0.0) throw PreconditionError("point " + to_string() + " is not in the other chart");
  return 1.0 / z;
}

ChartPoint ChartPoint::canonical() const {
  if (std::abs(z) > 1.0) return {chart == Chart::T ? Chart::S : Chart::T, 1.0 / z};
  return *this;
}

std::string ChartPoint::to_string() const {
  std::ostringstream os;
  os.precision(12);
  os << (chart == Chart::T ? "t=" : "s=") << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  return os.str();
}

double chordal_distance(const ChartPoint& a, const ChartPoint& b) {
  auto embed = [](const ChartPoint& p) {
    const double n = std::norm(p.z);
    const Complex w = p.chart == Chart::T ? 2.0 * p.z / (1.0 + n) : 2.0 * std::conj(p.z) / (1.0 + n);
    const double h = p.chart == Chart::T ? (n - 1.0) / (n + 1.0) : (1.0 - n) / (1.0 + n);
    return std::array<double, 3>{w.real(), w.imag(), h};
  };
  const auto u = embed(a), v = embed(b);
  return std::sqrt((u[0] - v[0]) * (u[0] - v[0]) + (u[1] - v[1]) * (u[1] - v[1]) + (u[2] - v[2]) * (u[2] - v[2]));
}

ConformalFactorField::ConformalFactorField(const WeierstrassData& w, Convention convention,
                                           const weierstrass::NumericOptions& opt)
    : source_(w), convention_(convention), name_(weierstrass::to_string(w)) {
  const weierstrass::Discriminant disc = weierstrass::discriminant(w, opt);
  degenerate_ = disc.identically_zero;
  const ComplexPoly d = disc.mode == weierstrass::Mode::Exact ? ComplexPoly(disc.exact.to_complex()) : disc.numeric;
  const ComplexPoly h8 = w.h8_numeric(), h12 = w.h12_numeric();
  const std::array<ComplexPoly, 3> t_chart{h8, h12, d};
  const std::array<ComplexPoly, 3> s_chart{h8.reversed(weierstrass::kCap8), h12.reversed(weierstrass::kCap12),
                                           d.reversed(weierstrass::kCapDelta)};
  eval_ = [t_chart, s_chart, convention](Chart chart, Complex z) -> FactorValue {
    const auto& p = chart == Chart::T ? t_chart : s_chart;
    Complex a = p[0](z), b = p[1](z), delta = p[2](z);
    if (convention == Convention::G2G3) {
      a *= -4.0;
      b *= -4.0;
      delta = a * a * a - 27.0 * b * b;
    }
    if ((a == 0.0 && b == 0.0) || delta == 0.0) return {kInf, true};
    const modular::AreaResult r = modular::torus_area(a, b, delta);
    if (r.singular) return {kInf, true};
    return {r.area, false};
  };
  if (degenerate_) return;
  const weierstrass::OrderTable table = weierstrass::vanishing_orders(w, opt);
  for (const auto& e : table.entries) {
    if (e.orders.vdelta < 1) continue;
    if (e.point.at_infinity) {
      singular_.push_back({{Chart::S, 0.0}, e.orders});
      continue;
    }
    for (Complex z : e.point.locations) singular_.push_back({ChartPoint{Chart::T, z}.canonical(), e.orders});
  }
}

ConformalFactorField ConformalFactorField::custom(Evaluator rho, std::vector<SingularPoint> singular,
                                                  std::string name) {
  ConformalFactorField f;
  f.eval_ = std::move(rho);
  f.singular_ = std::move(singular);
  f.name_ = std::move(name);
  return f;
}

FactorValue ConformalFactorField::at(Chart chart, Complex z) const {
  try {
    return eval_(chart, z);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("conformal factor at " + ChartPoint{chart, z}.to_string() + ": " + e.what(),
                           e.residual());
  }
}

FactorValue conformal_factor(const ConformalFactorField& f, Complex t) { return f.at(Chart::T, t); }

// ---------------------------------------------------------------------------
// Adaptive cubature on rectangles.

namespace {

struct Rect {
  double x0, x1, y0, y1;
  double value, error;
  bool operator<(const Rect& o) const { return error < o.error; }
};

class Cubature {
 public:
  Cubature(std::function<double(double, double)> f, std::size_t max_evals) : f_(std::move(f)), max_(max_evals) {}

  VolumeResult run(double x0, double x1, double y0, double y1, int nx, int ny, double tol) {
    std::priority_queue<Rect> queue;
    double total = 0, error = 0;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        Rect r = make(x0 + (x1 - x0) * i / nx, x0 + (x1 - x0) * (i + 1) / nx, y0 + (y1 - y0) * j / ny,
                      y0 + (y1 - y0) * (j + 1) / ny);
        total += r.value;
        error += r.error;
        queue.push(r);
      }
    while (error > tol * std::abs(total) && evals_ < max_ && !queue.empty()) {
      const Rect r = queue.top();
      queue.pop();
      total -= r.value;
      error -= r.error;
      const double xm = 0.5 * (r.x0 + r.x1), ym = 0.5 * (r.y0 + r.y1);
      for (const auto& c : {make(r.x0, xm, r.y0, ym), make(xm, r.x1, r.y0, ym), make(r.x0, xm, ym, r.y1),
                            make(xm, r.x1, ym, r.y1)}) {
        total += c.value;
        error += c.error;
        queue.push(c);
      }
    }
    // Recompute the error from the live rectangles; the running sum drifts.
    error = 0;
    while (!queue.empty()) {
      error += queue.top().error;
      queue.pop();
    }
    return {total, error};
  }

 private:
  double apply(const Rule& g, double x0, double x1, double y0, double y1, bool& bad) {
    const double hx = 0.5 * (x1 - x0), hy = 0.5 * (y1 - y0);
    double s = 0;
    for (std::size_t i = 0; i < g.x.size(); ++i)
      for (std::size_t j = 0; j < g.x.size(); ++j) {
        const double v = f_(x0 + hx * (1 + g.x[i]), y0 + hy * (1 + g.x[j]));
        ++evals_;
        if (!std::isfinite(v)) {
          bad = true;
          continue;
        }
        s += g.w[i] * g.w[j] * v;
      }
    return s * hx * hy;
  }

  Rect make(double x0, double x1, double y0, double y1) {
    bool bad = false;
    const double fine = apply(gauss(4), x0, x1, y0, y1, bad);
    const double coarse = apply(gauss(2), x0, x1, y0, y1, bad);
    double err = std::abs(fine - coarse);
    // A sample landed on a singular point: force refinement there.
    if (bad) err = std::max(err, std::abs(fine) + (x1 - x0) * (y1 - y0));
    return {x0, x1, y0, y1, fine, err};
  }

  std::function<double(double, double)> f_;
  std::size_t max_;
  std::size_t evals_ = 0;
};

}  // namespace

VolumeResult total_volume(const ConformalFactorField& f, double tol) {
  if (f.degenerate()) return {kInf, kInf};
  VolumeResult out;
  for (Chart chart : {Chart::T, Chart::S}) {
    Cubature c(
        [&](double r, double theta) {
          const FactorValue v = f.at(chart, std::polar(r, theta));
          return v.singular ? kInf : v.rho * r;
        },
        400000);
    const VolumeResult part = c.run(0.0, 1.0, 0.0, 2 * kPi, 8, 16, tol);
    out.value += part.value;
    out.error_estimate += part.error_estimate;
  }
  return out;
}

VolumeResult disk_volume(const ConformalFactorField& f, const ChartPoint& p, double r, double tol) {
  if (f.degenerate()) return {kInf, kInf};
  // r' = r u^3 flattens the integrable blow-up at the centre.
  Cubature c(
      [&](double u, double theta) {
        const FactorValue v = f.at(p.chart, p.z + std::polar(r * u * u * u, theta));
        return v.singular ? kInf : 3.0 * r * r * v.rho * std::pow(u, 5);
      },
      200000);
  return c.run(0.0, 1.0, 0.0, 2 * kPi, 4, 8, tol);
}

double curvature_fd(const ConformalFactorField& f, const ChartPoint& p, double h) {
  if (!(h > 0)) throw PreconditionError("curvature_fd: step must be positive");
  for (const SingularPoint& s : f.singular_points()) {
    if (s.where.chart != p.chart && s.where.z == 0.0) continue;
    if (std::abs(s.where.in(p.chart) - p.z) < 10 * h)
      throw PreconditionError("curvature_fd: step too close to singular point " + s.where.to_string());
  }
  auto log_rho = [&](Complex z) {
    const FactorValue v = f.at(p.chart, z);
    if (v.singular || !(v.rho > 0)) throw PreconditionError("curvature_fd: singular value near " + p.to_string());
    return std::log(v.rho);
  };
  const double centre = log_rho(p.z);
  const double lap = (log_rho(p.z + h) + log_rho(p.z - h) + log_rho(p.z + Complex(0, h)) +
                      log_rho(p.z - Complex(0, h)) - 4 * centre) /
                     (h * h);
  return -lap / (2 * std::exp(centre));
}

// ---------------------------------------------------------------------------
// Mesh construction.

namespace {

struct CellKey {
  int chart;
  int level;
  std::int64_t i, j;
  bool operator==(const CellKey& o) const { return chart == o.chart && level == o.level && i == o.i && j == o.j; }
  CellKey parent() const { return {chart, level - 1, i >> 1, j >> 1}; }
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = std::hash<std::int64_t>()(k.i * 0x9E3779B97F4A7C15LL ^ k.j);
    return h ^ (static_cast<std::size_t>(k.level) << 1) ^ (static_cast<std::size_t>(k.chart) << 7);
  }
};

struct CellInfo {
  FactorValue centre;
  bool leaf = true;
};

constexpr int kMaxLevel = 50;

class MeshBuilder {
 public:
  MeshBuilder(const ConformalFactorField& f, const MeshOptions& opt) : f_(f), opt_(opt) {
    if (opt.resolution < 8) throw PreconditionError("build_mesh: resolution must be at least 8");
    if (!(opt.exclusion_radius > 0)) throw PreconditionError("build_mesh: exclusion radius must be positive");
    side0_ = 2.0 / opt.resolution;
    if (opt.exclusion_radius >= 0.5 * side0_)
      throw PreconditionError("build_mesh: exclusion radius must be below half the base cell side");
    if (f.degenerate()) throw PreconditionError("build_mesh: the discriminant vanishes identically");
  }

  SphereMesh run() {
    mesh_.options = opt_;
    mesh_.singular_points = f_.singular_points();
    seed();
    choose_exclusions();
    for (int c = 0; c < 2; ++c) local_[c] = local_points(mesh_.singular_points, mesh_.exclusion_radius, chart(c));
    refine();
    balance();
    make_nodes();
    make_edges();
    finish_adjacency(mesh_);
    return std::move(mesh_);
  }

 private:
  static Chart chart(int c) { return c == 0 ? Chart::T : Chart::S; }
  double side(int level) const { return std::ldexp(side0_, -level); }
  Complex centre(const CellKey& k) const {
    const double s = side(k.level);
    return {-1.0 + (static_cast<double>(k.i) + 0.5) * s, -1.0 + (static_cast<double>(k.j) + 0.5) * s};
  }

  CellInfo& add(const CellKey& k) {
    if (cells_.size() > 8 * opt_.max_nodes)
      throw PreconditionError("build_mesh: refinement exceeds the node budget; raise exclusion_radius");
    CellInfo info{f_.at(chart(k.chart), centre(k)), true};
    return cells_[k] = info;
  }

  void seed() {
    std::vector<double> sizes;
    double rough_volume = 0;
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < opt_.resolution; ++i)
        for (int j = 0; j < opt_.resolution; ++j) {
          const CellKey k{c, 0, i, j};
          const Complex z = centre(k);
          if (std::abs(z) > 1.0 + 0.75 * side0_) continue;
          const CellInfo& info = add(k);
          if (!info.centre.singular && owned(chart(c), z)) {
            sizes.push_back(std::sqrt(info.centre.rho) * side0_);
            rough_volume += info.centre.rho * side0_ * side0_;
          }
        }
    if (sizes.empty()) throw PreconditionError("build_mesh: no regular cells");
    std::nth_element(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(sizes.size() / 2), sizes.end());
    target_ = sizes[sizes.size() / 2];
    mesh_.median_cell_length = target_;
    rough_volume_ = rough_volume;
  }

  // Additive fibres (both sections vanish) make rho blow up like a power, so
  // their disks are shrunk until the removed volume is negligible.
  void choose_exclusions() {
    const auto& pts = mesh_.singular_points;
    mesh_.exclusion_radius.assign(pts.size(), opt_.exclusion_radius);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (pts[k].orders.v8 < 1 || pts[k].orders.v12 < 1) continue;
      const double budget = opt_.excluded_volume_fraction * rough_volume_ / static_cast<double>(pts.size());
      double& r = mesh_.exclusion_radius[k];
      for (int step = 0; step < 12 && r > 1e-13; ++step) {
        if (disk_volume(f_, pts[k].where, r, 1e-3).value <= budget) break;
        r *= 0.1;
      }
    }
  }

  bool should_split(const CellKey& k, const CellInfo& info) const {
    if (k.level >= kMaxLevel) return false;
    const double s = side(k.level);
    const Complex z = centre(k);
    for (const LocalPoint& p : local_[k.chart])
      if (std::abs(z - p.z) < 1.5 * s && s > p.exclusion) return true;
    if (s <= opt_.exclusion_radius) return false;
    if (info.centre.singular || !std::isfinite(info.centre.rho)) return true;
    return std::sqrt(info.centre.rho) * s > opt_.refine_ratio * target_;
  }

  void split(const CellKey& k) {
    cells_[k].leaf = false;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) add({k.chart, k.level + 1, 2 * k.i + a, 2 * k.j + b});
  }

  void refine() {
    std::vector<CellKey> work;
    for (const auto& [k, info] : cells_) work.push_back(k);
    while (!work.empty()) {
      const CellKey k = work.back();
      work.pop_back();
      if (!should_split(k, cells_.at(k))) continue;
      split(k);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) work.push_back({k.chart, k.level + 1, 2 * k.i + a, 2 * k.j + b});
    }
  }

  // Level of the leaf covering cell k, -1 if none, or k.level + 1 if k is
  // subdivided.
  int covering_level(CellKey k) const {
    const int start = k.level;
    while (k.level >= 0) {
      if (k.i < 0 || k.j < 0) return -1;
      auto it = cells_.find(k);
      if (it != cells_.end()) return it->second.leaf ? k.level : start + 1;
      k = k.parent();
    }
    return -1;
  }

  CellKey covering_leaf(CellKey k) const {
    while (cells_.find(k) == cells_.end()) k = k.parent();
    return k;
  }

  // Adjacent leaves differ by at most one level.
  void balance() {
    for (bool changed = true; changed;) {
      changed = false;
      std::vector<CellKey> leaves;
      for (const auto& [k, info] : cells_)
        if (info.leaf && k.level >= 2) leaves.push_back(k);
      std::vector<CellKey> to_split;
      for (const CellKey& k : leaves)
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const CellKey n{k.chart, k.level, k.i + di, k.j + dj};
            const int lvl = covering_level(n);
            if (lvl >= 0 && lvl <= k.level - 2) to_split.push_back(covering_leaf(n));
          }
      for (const CellKey& k : to_split) {
        if (!cells_.at(k).leaf) continue;
        split(k);
        changed = true;
      }
    }
  }

  bool excluded(int c, Complex z) const {
    for (const LocalPoint& p : local_[c])
      if (std::abs(z - p.z) <= p.exclusion) return true;
    return false;
  }

  void make_nodes() {
    std::vector<CellKey> leaves;
    for (const auto& [k, info] : cells_)
      if (info.leaf) leaves.push_back(k);
    // Deterministic node order.
    std::sort(leaves.begin(), leaves.end(), [](const CellKey& a, const CellKey& b) {
      return std::tie(a.chart, a.level, a.i, a.j) < std::tie(b.chart, b.level, b.i, b.j);
    });
    for (const CellKey& k : leaves) {
      const CellInfo& info = cells_.at(k);
      const Complex z = centre(k);
      if (info.centre.singular || !std::isfinite(info.centre.rho) || excluded(k.chart, z)) continue;
      MeshNode node{{chart(k.chart), z}, side(k.level), info.centre.rho, 0.0, true};
      bool any = false;
      node.cell_volume = cell_integral(f_, node, any);
      if (!any) continue;
      index_[k] = static_cast<int>(mesh_.nodes.size());
      keys_.push_back(k);
      mesh_.nodes.push_back(node);
      if (mesh_.nodes.size() > opt_.max_nodes)
        throw PreconditionError("build_mesh: node budget exceeded; lower the resolution");
    }
  }

 public:
  // Integral of rho over the owned part of the node's cell; `any` reports
  // whether some sample point is owned by the node's chart.
  static double cell_integral(const ConformalFactorField& f, const MeshNode& node, bool& any) {
    const Complex z = node.where.z;
    const double s = node.side;
    const double r = std::abs(z);
    const Rule& g = gauss(r > 1.0 - s && r < 1.0 + s ? 4 : 2);
    const double h = 0.5 * s;
    double sum = 0;
    any = false;
    for (std::size_t a = 0; a < g.x.size(); ++a)
      for (std::size_t b = 0; b < g.x.size(); ++b) {
        const Complex p = z + Complex(h * g.x[a], h * g.x[b]);
        if (!owned(node.where.chart, p)) continue;
        any = true;
        const FactorValue v = f.at(node.where.chart, p);
        if (!v.singular && std::isfinite(v.rho)) sum += g.w[a] * g.w[b] * v.rho;
      }
    return sum * h * h;
  }

  // Value of rho at node n expressed in chart c.
  static double rho_in(const MeshNode& n, Chart c) {
    if (n.where.chart == c) return n.rho;
    const double m = std::norm(n.where.z);
    return m * m * n.rho;
  }

  static double length(const ConformalFactorField& f, const SphereMesh& mesh, MeshEdge& e, bool plan_fresh,
                       const std::vector<LocalPoint>* near) {
    const MeshNode &na = mesh.nodes[e.a], &nb = mesh.nodes[e.b];
    const Complex za = na.where.in(e.chart), zb = nb.where.in(e.chart);
    const double ra = rho_in(na, e.chart), rb = rho_in(nb, e.chart);
    const double span = std::abs(zb - za);
    auto g = [&](double u) {
      if (u == 0.0) return std::sqrt(ra);
      if (u == 1.0) return std::sqrt(rb);
      const FactorValue v = f.at(e.chart, za + u * (zb - za));
      return v.singular ? kInf : std::sqrt(v.rho);
    };
    if (plan_fresh) {
      bool smooth = std::max(ra, rb) < 1.25 * std::min(ra, rb);
      for (const LocalPoint& p : *near)
        if (smooth && segment_distance(p.z, za, zb) < 0.5 * span) smooth = false;
      e.plan.clear();
      if (!smooth) build_plan(g, e.plan);
    }
    if (e.plan.empty()) return span * 0.5 * (g(0.0) + g(1.0));
    double s = 0;
    for (const auto& [u, w] : e.plan) s += w * g(u);
    return span * s;
  }

 private:
  // Adaptive Simpson panels on [0, 1]; the plan is the merged node list.
  template <class G>
  static void build_plan(G& g, std::vector<std::pair<double, double>>& plan) {
    std::vector<std::pair<double, double>> weights;
    std::function<void(double, double, double, double, double, int)> rec = [&](double a, double b, double fa,
                                                                                 double fm, double fb, int depth) {
      const double m = 0.5 * (a + b);
      const double fl = g(0.5 * (a + m)), fr = g(0.5 * (m + b));
      const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
      const double halves = (b - a) / 12 * (fa + 4 * fl + 2 * fm + 4 * fr + fb);
      if (depth >= 10 || (std::isfinite(halves) && std::abs(halves - whole) <= 1e-3 * std::abs(halves))) {
        const double h = (b - a) / 12;
        weights.push_back({a, h});
        weights.push_back({0.5 * (a + m), 4 * h});
        weights.push_back({m, 2 * h});
        weights.push_back({0.5 * (m + b), 4 * h});
        weights.push_back({b, h});
        return;
      }
      rec(a, m, fa, fl, fm, depth + 1);
      rec(m, b, fm, fr, fb, depth + 1);
    };
    const double g0 = g(0.0), gm = g(0.5), g1 = g(1.0);
    const double simpson = (g0 + 4 * gm + g1) / 6;
    if (std::isfinite(simpson) && std::abs(simpson - 0.5 * (g0 + g1)) <= 1e-3 * simpson) {
      plan = {{0.0, 1.0 / 6}, {0.5, 4.0 / 6}, {1.0, 1.0 / 6}};
      return;
    }
    rec(0.0, 1.0, g0, gm, g1, 0);
    std::sort(weights.begin(), weights.end());
    for (const auto& [u, w] : weights) {
      if (!plan.empty() && plan.back().first == u)
        plan.back().second += w;
      else
        plan.push_back({u, w});
    }
  }

  bool crosses_exclusion(Chart c, Complex za, Complex zb) const {
    for (const LocalPoint& p : local_[c == Chart::T ? 0 : 1])
      if (segment_distance(p.z, za, zb) <= p.exclusion) return true;
    return false;
  }

  void add_edge(int a, int b, Chart c) {
    const Complex za = mesh_.nodes[a].where.in(c), zb = mesh_.nodes[b].where.in(c);
    if (crosses_exclusion(c, za, zb)) return;
    MeshEdge e{a, b, c, 0.0, {}};
    e.length = length(f_, mesh_, e, true, &local_[c == Chart::T ? 0 : 1]);
    if (!std::isfinite(e.length)) return;
    mesh_.edges.push_back(std::move(e));
  }

  void make_edges() {
    const double kappa = opt_.stencil;
    for (std::size_t n = 0; n < keys_.size(); ++n) {
      const CellKey& k = keys_[n];
      const Complex z = centre(k);
      const double reach = kappa * side(k.level);
      for (int lvl = k.level; lvl >= std::max(0, k.level - 4); --lvl) {
        const double s = side(lvl);
        const auto lo = [&](double x) { return static_cast<std::int64_t>(std::ceil((x - reach + 1.0) / s - 0.5)); };
        const auto hi = [&](double x) { return static_cast<std::int64_t>(std::floor((x + reach + 1.0) / s - 0.5)); };
        for (std::int64_t i = lo(z.real()); i <= hi(z.real()); ++i)
          for (std::int64_t j = lo(z.imag()); j <= hi(z.imag()); ++j) {
            const CellKey o{k.chart, lvl, i, j};
            if (lvl == k.level && std::tie(o.i, o.j) <= std::tie(k.i, k.j)) continue;
            auto it = index_.find(o);
            if (it == index_.end()) continue;
            if (std::abs(centre(o) - z) <= reach) add_edge(static_cast<int>(n), it->second, chart(k.chart));
          }
      }
    }
    // Stitch the charts across |t| = 1, measuring in the t chart.
    std::vector<int> seam_t, seam_s;
    for (std::size_t n = 0; n < mesh_.nodes.size(); ++n) {
      const MeshNode& node = mesh_.nodes[n];
      if (std::abs(node.where.z) < 1.0 - kappa * node.side) continue;
      (node.where.chart == Chart::T ? seam_t : seam_s).push_back(static_cast<int>(n));
    }
    for (int a : seam_t)
      for (int b : seam_s) {
        const MeshNode &na = mesh_.nodes[a], &nb = mesh_.nodes[b];
        const Complex tb = 1.0 / nb.where.z;
        const double side_b = nb.side / std::norm(nb.where.z);
        if (std::abs(na.where.z - tb) <= kappa * std::min(na.side, side_b)) add_edge(a, b, Chart::T);
      }
  }

  const ConformalFactorField& f_;
  MeshOptions opt_;
  double side0_ = 0;
  double target_ = 0;
  double rough_volume_ = 0;
  std::unordered_map<CellKey, CellInfo, CellKeyHash> cells_;
  std::unordered_map<CellKey, int, CellKeyHash> index_;
  std::vector<CellKey> keys_;
  std::array<std::vector<LocalPoint>, 2> local_;
  SphereMesh mesh_;

  friend SphereMesh metric::reweight(const SphereMesh&, const ConformalFactorField&);
  static void finish_adjacency(SphereMesh& mesh) {
    const std::size_t n = mesh.nodes.size();
    std::vector<int> degree(n, 0);
    for (const MeshEdge& e : mesh.edges) {
      ++degree[e.a];
      ++degree[e.b];
    }
    mesh.offsets.assign(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) mesh.offsets[k + 1] = mesh.offsets[k] + degree[k];
    mesh.incident.assign(static_cast<std::size_t>(mesh.offsets[n]), {0, 0});
    std::vector<int> fill(mesh.offsets.begin(), mesh.offsets.end() - 1);
    for (std::size_t k = 0; k < mesh.edges.size(); ++k) {
      const MeshEdge& e = mesh.edges[k];
      mesh.incident[fill[e.a]++] = {e.b, static_cast<int>(k)};
      mesh.incident[fill[e.b]++] = {e.a, static_cast<int>(k)};
    }
  }

 public:
  static void adjacency(SphereMesh& mesh) { finish_adjacency(mesh); }
};

}  // namespace

SphereMesh build_mesh(const ConformalFactorField& f, const MeshOptions& opt) { return MeshBuilder(f, opt).run(); }

SphereMesh reweight(const SphereMesh& layout, const ConformalFactorField& f) {
  SphereMesh mesh = layout;
  for (MeshNode& node : mesh.nodes) {
    const FactorValue v = f.at(node.where);
    node.active = node.active && !v.singular && std::isfinite(v.rho);
    node.rho = node.active ? v.rho : kInf;
    bool any = false;
    node.cell_volume = node.active ? MeshBuilder::cell_integral(f, node, any) : 0.0;
  }
  for (MeshEdge& e : mesh.edges) {
    if (!mesh.nodes[e.a].active || !mesh.nodes[e.b].active) {
      e.length = kInf;
      continue;
    }
    e.length = MeshBuilder::length(f, mesh, e, false, nullptr);
    if (!std::isfinite(e.length)) e.length = kInf;
  }
  return mesh;
}

SphereMesh without_nodes(const SphereMesh& mesh, const std::function<bool(const MeshNode&)>& drop) {
  SphereMesh out = mesh;
  for (MeshNode& n : out.nodes)
    if (n.active && drop(n)) n.active = false;
  return out;
}

std::size_t SphereMesh::active_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const MeshNode& n) { return n.active; }));
}

int SphereMesh::nearest_node(const ChartPoint& p) const {
  int best = -1;
  double best_d = kInf;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!nodes[k].active) continue;
    const double d = chordal_distance(nodes[k].where, p);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  if (best < 0) throw PreconditionError("nearest_node: mesh has no active nodes");
  return best;
}

// ---------------------------------------------------------------------------
// Distances.

namespace {

std::vector<double> dijkstra(const SphereMesh& mesh, const std::vector<int>& sources) {
  const std::size_t n = mesh.nodes.size();
  std::vector<double> dist(n, kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (int s : sources) {
    if (s < 0 || static_cast<std::size_t>(s) >= n || !mesh.nodes[s].active)
      throw PreconditionError("shortest_distances: source is not an active node");
    dist[s] = 0;
    heap.push({0.0, s});
  }
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (int k = mesh.offsets[u]; k < mesh.offsets[u + 1]; ++k) {
      const auto [v, e] = mesh.incident[k];
      if (!mesh.nodes[v].active) continue;
      const double nd = d + mesh.edges[e].length;
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.push({nd, v});
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<std::vector<double>> shortest_distances(const SphereMesh& mesh, const std::vector<int>& sources) {
  std::vector<std::vector<double>> rows;
  rows.reserve(sources.size());
  for (int s : sources) rows.push_back(dijkstra(mesh, {s}));
  return rows;
}

std::vector<double> distance_to_set(const SphereMesh& mesh, const std::vector<int>& sources) {
  return dijkstra(mesh, sources);
}

DiameterResult diameter(const SphereMesh& mesh, int start, double stable, int cap) {
  DiameterResult out;
  int first = -1;
  for (std::size_t k = 0; k < mesh.nodes.size() && first < 0; ++k)
    if (mesh.nodes[k].active) first = static_cast<int>(k);
  if (first < 0) throw PreconditionError("diameter: mesh has no active nodes");
  const std::vector<double> probe = dijkstra(mesh, {first});
  std::vector<double> nearest(mesh.nodes.size(), kInf);
  auto farthest = [&](const std::vector<double>& d) {
    int best = -1;
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (!mesh.nodes[k].active) continue;
      if (!std::isfinite(d[k])) throw Error("diameter: mesh is disconnected (internal error)");
      if (best < 0 || d[k] > d[best]) best = static_cast<int>(k);
    }
    return best;
  };
  auto add = [&](int node) {
    out.landmarks.push_back(node);
    out.rows.push_back(dijkstra(mesh, {node}));
    const auto& row = out.rows.back();
    for (std::size_t k = 0; k < row.size(); ++k) {
      nearest[k] = std::min(nearest[k], row[k]);
      if (mesh.nodes[k].active) out.diameter = std::max(out.diameter, row[k]);
    }
  };
  const int available = static_cast<int>(mesh.active_count());
  add(farthest(probe));
  int target = std::min(start, available);
  double previous = -1;
  for (;;) {
    while (static_cast<int>(out.landmarks.size()) < target) {
      const int next = farthest(nearest);
      if (nearest[next] == 0.0) break;
      add(next);
    }
    if (previous >= 0) {
      out.last_change = (out.diameter - previous) / out.diameter;
      if (out.last_change < stable) break;
    }
    if (target >= std::min(cap, available) || static_cast<int>(out.landmarks.size()) < target) break;
    previous = out.diameter;
    target = std::min({2 * target, cap, available});
  }
  // Make both ends of the longest row landmarks, so the landmark matrix
  // attains the diameter.
  for (int guard = 0; guard < 16; ++guard) {
    int end = -1;
    for (const auto& row : out.rows)
      for (std::size_t k = 0; k < row.size(); ++k)
        if (mesh.nodes[k].active && row[k] == out.diameter) end = static_cast<int>(k);
    if (end < 0 || std::find(out.landmarks.begin(), out.landmarks.end(), end) != out.landmarks.end()) break;
    add(end);
  }
  return out;
}

double ball_volume(const SphereMesh& mesh, const std::vector<double>& d, double r) {
  double v = 0;
  for (std::size_t k = 0; k < mesh.nodes.size(); ++k)
    if (mesh.nodes[k].active && d[k] <= r) v += mesh.nodes[k].cell_volume;
  return v;
}

double ball_volume(const SphereMesh& mesh, int p, double r) { return ball_volume(mesh, dijkstra(mesh, {p}), r); }

double cell_volume_sum(const SphereMesh& mesh) {
  double v = 0;
  for (const MeshNode& n : mesh.nodes)
    if (n.active) v += n.cell_volume;
  return v;
}

double bishop_gromov_ratio(const SphereMesh& mesh, int p, double r1, double r2) {
  if (!(r1 > 0) || r1 > r2) throw PreconditionError("bishop_gromov_ratio: need 0 < r1 <= r2");
  const std::vector<double> d = dijkstra(mesh, {p});
  const auto inner = std::count_if(d.begin(), d.end(), [&](double x) { return x <= r1; });
  if (inner <= 1) throw PreconditionError("bishop_gromov_ratio: inner ball holds only its centre (radius below mesh scale)");
  const double v1 = ball_volume(mesh, d, r1);
  return v1 / ball_volume(mesh, d, r2);
}

MetricSummary summarize(const SphereMesh& mesh, const ConformalFactorField& f, double volume_tol) {
  const DiameterResult d = diameter(mesh);
  MetricSummary s;
  s.diameter = d.diameter;
  s.diameter_change = d.last_change;
  const VolumeResult v = total_volume(f, volume_tol);
  s.total_volume = v.value;
  s.volume_error = v.error_estimate;
  s.unit_diameter_scale = 1.0 / d.diameter;
  s.nodes = mesh.active_count();
  for (int l : d.landmarks) s.landmarks.push_back(mesh.nodes[l].where);
  s.distances.assign(d.landmarks.size(), std::vector<double>(d.landmarks.size(), 0.0));
  for (std::size_t a = 0; a < d.landmarks.size(); ++a)
    for (std::size_t b = 0; b < d.landmarks.size(); ++b) s.distances[a][b] = d.rows[a][d.landmarks[b]];
  return s;
}

std::vector<ChartPoint> sphere_points(int n) {
  std::vector<ChartPoint> out;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double h = 1.0 - 2.0 * (k + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - h * h));
    const Complex w = std::polar(r, golden * k);
    if (h <= 0)
      out.push_back({Chart::T, w / (1.0 - h)});
    else
      out.push_back({Chart::S, std::conj(w) / (1.0 + h)});
  }
  return out;
}

Eigen::MatrixXd landmark_distances(const SphereMesh& mesh, const std::vector<ChartPoint>& points) {
  std::vector<int> nodes;
  for (const ChartPoint& p : points) nodes.push_back(mesh.nearest_node(p));
  const auto rows = shortest_distances(mesh, nodes);
  Eigen::MatrixXd m(nodes.size(), nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = 0; b < nodes.size(); ++b) m(a, b) = rows[a][nodes[b]];
  return m;
}

}  // namespace k3lab::metric
