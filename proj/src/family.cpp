#include "k3lab/family.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "k3lab/error.hpp"
#include "k3lab/modular.hpp"

namespace k3lab::family {

namespace {

using weierstrass::WeierstrassData;
using Json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Shortest text that reads back to the same double.
std::string num(double x) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x || std::isnan(x)) break;
  }
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || !std::isfinite(x)) throw PreconditionError(key + ": '" + v + "' is not a number");
  return x;
}

long parse_long(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const long x = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0') throw PreconditionError(key + ": '" + v + "' is not an integer");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw PreconditionError(key + ": '" + v + "' is not a boolean");
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw PreconditionError(key + ": " + what);
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"metric.resolution", [](const ExperimentConfig& c) { return std::to_string(c.metric.resolution); },
       [](ExperimentConfig& c, const std::string& v) {
         const long x = parse_long("metric.resolution", v);
         require(x >= 8 && x <= 1024, "metric.resolution", "must be between 8 and 1024");
         c.metric.resolution = static_cast<int>(x);
       }},
      {"metric.exclusion_radius", [](const ExperimentConfig& c) { return num(c.metric.exclusion_radius); },
       [](ExperimentConfig& c, const std::string& v) {
         const double x = parse_double("metric.exclusion_radius", v);
         require(x > 0 && x < 0.5, "metric.exclusion_radius", "must lie in (0, 0.5)");
         c.metric.exclusion_radius = x;
       }},
      {"metric.landmarks", [](const ExperimentConfig& c) { return std::to_string(c.metric.landmarks); },
       [](ExperimentConfig& c, const std::string& v) {
         const long x = parse_long("metric.landmarks", v);
         require(x >= 4 && x <= 4096, "metric.landmarks", "must be between 4 and 4096");
         c.metric.landmarks = static_cast<int>(x);
       }},
      {"metric.volume_tol", [](const ExperimentConfig& c) { return num(c.metric.volume_tol); },
       [](ExperimentConfig& c, const std::string& v) {
         const double x = parse_double("metric.volume_tol", v);
         require(x > 0, "metric.volume_tol", "must be positive");
         c.metric.volume_tol = x;
       }},
      {"metric.convention",
       [](const ExperimentConfig& c) {
         return std::string(c.metric.convention == metric::Convention::Literal ? "literal" : "g2g3");
       },
       [](ExperimentConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "literal")
           c.metric.convention = metric::Convention::Literal;
         else if (t == "g2g3")
           c.metric.convention = metric::Convention::G2G3;
         else
           throw PreconditionError("metric.convention: '" + v + "' is not one of literal, g2g3");
       }},
      {"numeric.tol", [](const ExperimentConfig& c) { return num(c.numeric.tol); },
       [](ExperimentConfig& c, const std::string& v) {
         const double x = parse_double("numeric.tol", v);
         require(x > 0 && x < 1, "numeric.tol", "must lie in (0, 1)");
         c.numeric.tol = x;
       }},
      {"satake.divergence", [](const ExperimentConfig& c) { return num(c.satake.divergence); },
       [](ExperimentConfig& c, const std::string& v) {
         const double x = parse_double("satake.divergence", v);
         require(x > 0, "satake.divergence", "must be positive");
         c.satake.divergence = x;
       }},
      {"satake.bounded_variation", [](const ExperimentConfig& c) { return num(c.satake.bounded_variation); },
       [](ExperimentConfig& c, const std::string& v) {
         const double x = parse_double("satake.bounded_variation", v);
         require(x > 0, "satake.bounded_variation", "must be positive");
         c.satake.bounded_variation = x;
       }},
      {"satake.siegel_c", [](const ExperimentConfig& c) { return num(c.satake.siegel_c); },
       [](ExperimentConfig& c, const std::string& v) {
         const double x = parse_double("satake.siegel_c", v);
         require(x >= 0, "satake.siegel_c", "must be non-negative");
         c.satake.siegel_c = x;
       }},
      {"acceptance.tolerance_scale", [](const ExperimentConfig& c) { return num(c.acceptance.tolerance_scale); },
       [](ExperimentConfig& c, const std::string& v) {
         const double x = parse_double("acceptance.tolerance_scale", v);
         require(x >= 0, "acceptance.tolerance_scale", "must be non-negative");
         c.acceptance.tolerance_scale = x;
       }},
      {"run.seed", [](const ExperimentConfig& c) { return std::to_string(c.run.seed); },
       [](ExperimentConfig& c, const std::string& v) {
         const long x = parse_long("run.seed", v);
         require(x >= 0, "run.seed", "must be non-negative");
         c.run.seed = static_cast<unsigned long>(x);
       }},
      {"run.strict", [](const ExperimentConfig& c) { return std::string(c.run.strict ? "true" : "false"); },
       [](ExperimentConfig& c, const std::string& v) { c.run.strict = parse_bool("run.strict", v); }},
      {"run.out", [](const ExperimentConfig& c) { return c.run.out; },
       [](ExperimentConfig& c, const std::string& v) {
         std::string t = trim(v);
         if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
         require(!t.empty(), "run.out", "must not be empty");
         c.run.out = t;
       }},
  };
  return f;
}

void apply(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "schema_version") {
    if (parse_long(key, value) != kSchemaVersion)
      throw PreconditionError("schema_version: expected " + std::to_string(kSchemaVersion));
    return;
  }
  for (const Field& f : fields())
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  throw PreconditionError(key + ": unknown key");
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const Json& v = it.value();
    if (v.is_object())
      flatten(v, key, out);
    else if (v.is_string())
      out.emplace_back(key, v.get<std::string>());
    else if (v.is_boolean())
      out.emplace_back(key, v.get<bool>() ? "true" : "false");
    else if (v.is_number_integer() || v.is_number_unsigned())
      out.emplace_back(key, v.dump());
    else if (v.is_number_float())
      out.emplace_back(key, num(v.get<double>()));
    else
      throw PreconditionError(key + ": expected a number, string or boolean");
  }
}

std::string fmt(double x, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

}  // namespace

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(cfg));
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  const std::string body = trim(text);
  std::vector<std::pair<std::string, std::string>> entries;
  if (!body.empty() && body.front() == '{') {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("config JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
    flatten(j, "", entries);
  } else {
    std::istringstream in(text);
    std::string line;
    std::size_t offset = 0, line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t start = offset;
      offset += line.size() + 1;
      const std::string t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'", start);
      const std::string key = trim(t.substr(0, eq));
      if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": missing key", start);
      if (!seen.insert(key).second) throw PreconditionError(key + ": given twice");
      entries.emplace_back(key, trim(t.substr(eq + 1)));
    }
  }
  for (const auto& [k, v] : entries) apply(cfg, k, v);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string save_config(const ExperimentConfig& cfg) {
  std::string out = "# k3lab experiment configuration\nschema_version = " + std::to_string(kSchemaVersion) + "\n";
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << save_config(cfg);
  if (!out) throw Error("write failed: " + path.string());
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::None: return "none";
    case Experiment::Continuity: return "continuity";
    case Experiment::ConformalRatio: return "conformal-ratio";
    case Experiment::Collapse: return "collapse";
    case Experiment::CylinderRatio: return "cylinder-ratio";
    case Experiment::GroupAction: return "group-action";
    case Experiment::Boundary: return "boundary";
  }
  return "?";
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Indeterminate: return "indeterminate";
  }
  return "?";
}

std::string instantiate(const FamilySpec& spec, const GridValue& v) {
  std::string out = spec.templ;
  const std::string key = "{e}";
  if (out.find(key) == std::string::npos) throw PreconditionError(spec.name + ": template has no {e} placeholder");
  for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + v.text.size()))
    out.replace(pos, key.size(), v.text);
  return out;
}

void validate(const FamilySpec& spec) {
  if (spec.grid.empty()) throw PreconditionError(spec.name + ": empty parameter grid");
  if (spec.kind == FamilyKind::Frames) {
    if (!spec.frame) throw PreconditionError(spec.name + ": frame family without a generator");
    return;
  }
  for (const GridValue& v : spec.grid) weierstrass::parse_weierstrass(instantiate(spec, v));
  if (!spec.limit.empty()) weierstrass::parse_weierstrass(spec.limit);
  if (spec.experiment == Experiment::GroupAction && !spec.translate)
    throw PreconditionError(spec.name + ": group-action family without SL2 elements");
}

namespace {

GridValue power_of_ten(int k) { return {std::pow(10.0, -k), "10^(-" + std::to_string(k) + ")"}; }

const char* kG4 = "(t(t-1)(t-2)(t-5))";

}  // namespace

std::vector<FamilySpec> builtin_cases() {
  std::vector<FamilySpec> out;

  FamilySpec c1;
  c1.name = "case1";
  c1.templ = "h8 = t^8 + 3t^5 + {e} t^4 - 2t + 1; h12 = t^12 - t^7 + 5t^3 + 2";
  c1.limit = "h8 = t^8 + 3t^5 - 2t + 1; h12 = t^12 - t^7 + 5t^3 + 2";
  for (int k = 1; k <= 4; ++k) c1.grid.push_back(power_of_ten(k));
  c1.expected = "stable smooth limit; GH bounds between consecutive steps decrease";
  c1.experiment = Experiment::Continuity;
  out.push_back(c1);

  FamilySpec c2;
  c2.name = "case2";
  c2.templ = std::string("h8 = 3 ") + kG4 + "^2 + {e}; h12 = " + kG4 + "^3";
  c2.limit = std::string("h8 = 3 ") + kG4 + "^2; h12 = " + kG4 + "^3";
  for (int k = 2; k <= 10; k += 2) c2.grid.push_back(power_of_ten(k));
  c2.expected = "limit stable with identically zero discriminant; rho 3|G4| / (2 pi^2 log+|j|) -> 1";
  c2.experiment = Experiment::ConformalRatio;
  out.push_back(c2);

  FamilySpec c3;
  c3.name = "case3";
  c3.templ = "h8 = t^4 + {e} + {e} t^8; h12 = t^6";
  c3.limit = "h8 = t^4; h12 = t^6";
  for (int k = 4; k <= 8; k += 2) c3.grid.push_back(power_of_ten(k));
  c3.expected = "limit [1 : 1] polystable not stable; collapse to a segment, unit-diameter volume -> 0";
  c3.experiment = Experiment::Collapse;
  out.push_back(c3);

  FamilySpec c4;
  c4.name = "case4";
  c4.templ = "h8 = 3t^4 + {e}; h12 = t^6";
  c4.limit = "h8 = 3t^4; h12 = t^6";
  for (int k = 4; k <= 8; k += 2) c4.grid.push_back(power_of_ten(k));
  c4.expected = "limit [3 : 1] polystable not stable; rho |t|^2 / log+|j| constant on the neck";
  c4.experiment = Experiment::CylinderRatio;
  out.push_back(c4);

  FamilySpec c5;
  c5.name = "case5";
  c5.templ = "h8 = t^8 + t^4 + ({e})^12; h12 = t^12 + t^6";
  c5.limit = "h8 = t^8 + t^4; h12 = t^12 + t^6";
  // x_k has features at |t| ~ s^3, which must stay above the mesh exclusion radius.
  c5.grid = {{0.5, "1/2"}, {0.2, "1/5"}, {0.1, "1/10"}};
  c5.expected = "raw limit semistable not polystable; g_k x_k -> [1 : 1] with g_k = diag(s, 1/s); same diameters";
  c5.experiment = Experiment::GroupAction;
  c5.translate = [](const GridValue& v) {
    Rational s(v.text);
    s.canonicalize();
    weierstrass::Matrix2 m;
    m.a = Gaussian(s);
    m.d = Gaussian(Rational(1) / s);
    return m;
  };
  out.push_back(c5);
  return out;
}

FamilySpec builtin_case(const std::string& name) {
  for (FamilySpec& s : builtin_cases())
    if (s.name == name) return s;
  throw PreconditionError("unknown family '" + name + "' (expected case1 .. case5)");
}

namespace {

StabilityDigest digest(const weierstrass::StabilityReport& r) {
  StabilityDigest d;
  d.cls = weierstrass::to_string(r.cls);
  d.polystable = r.polystable;
  d.delta_zero = r.delta_identically_zero;
  if (r.normal_form) d.normal_form = r.normal_form->to_string();
  for (const auto& e : r.orders.entries)
    if (e.orders.vdelta >= 1) d.singular_points += static_cast<int>(e.point.count());
  return d;
}

Check make_check(std::string name, bool ok, double value, double bound, std::string detail = {}) {
  return {std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, value, bound, std::move(detail)};
}

// log+|j| at t from the numeric sections and the exact discriminant.
struct JEvaluator {
  poly::ComplexPoly h8, h12, delta;
  explicit JEvaluator(const WeierstrassData& w) : h8(w.h8_numeric()), h12(w.h12_numeric()) {
    const auto d = weierstrass::discriminant(w);
    delta = d.mode == weierstrass::Mode::Exact ? poly::ComplexPoly(d.exact.to_complex()) : d.numeric;
  }
  double log_plus_j(metric::Complex t) const {
    const auto j = modular::j_from_ab(h8(t), h12(t), delta(t));
    if (j.infinite) return std::numeric_limits<double>::infinity();
    return modular::log_plus(std::abs(j.value));
  }
};

// Sample points for the conformal ratio, away from 0, 1, 2, 5.
const std::vector<metric::Complex>& ratio_points() {
  static const std::vector<metric::Complex> p = {{0.5, 0.5}, {1.5, -0.5}, {3, 1},   {3.5, 0},   {-1, 0},
                                                 {0, -0.6}, {4, 2},      {6.2, 0}, {2.5, 1.5}, {-2, 1}};
  return p;
}

struct Step {
  WeierstrassData data;
  std::optional<metric::ConformalFactorField> field;
  std::optional<metric::SphereMesh> mesh;
};

}  // namespace

std::vector<RunRecord> run_family(const FamilySpec& spec, const ExperimentConfig& cfg) {
  validate(spec);
  const weierstrass::NumericOptions nopt{cfg.numeric.tol};
  metric::MeshOptions mopt;
  mopt.resolution = spec.resolution > 0 ? spec.resolution : cfg.metric.resolution;
  mopt.exclusion_radius = cfg.metric.exclusion_radius;
  const int shared = spec.landmarks > 0 ? spec.landmarks : cfg.metric.landmarks;
  const std::vector<metric::ChartPoint> shared_points = metric::sphere_points(shared);

  std::vector<RunRecord> records;
  std::optional<metric::SphereMesh> layout;  // Continuity: the limit mesh
  std::optional<Eigen::MatrixXd> previous;   // shared-landmark distances of the previous step
  std::vector<satake::IwasawaCoordinates> frames;

  for (std::size_t k = 0; k < spec.grid.size(); ++k) {
    const GridValue& v = spec.grid[k];
    const bool last = k + 1 == spec.grid.size();
    RunRecord rec;
    rec.family = spec.name;
    rec.parameter = v.value;
    rec.parameter_text = v.text;
    const auto started = std::chrono::steady_clock::now();
    try {
      if (spec.kind == FamilyKind::Frames) {
        const auto x = satake::triangularize({spec.frame(v), spec.frame_kind});
        rec.values["a"] = x.a;
        rec.values["b"] = x.b;
        rec.values["c"] = x.c;
        rec.values["residual"] = x.residual(satake::standard_form(spec.frame_kind));
        frames.push_back(x);
        if (last && spec.experiment == Experiment::Boundary) {
          const auto verdict = satake::classify_sequence(frames, cfg.satake);
          rec.checks.push_back(make_check("boundary_type", verdict.btype == spec.expected_boundary, 0, 0,
                                          satake::to_string(verdict.btype) + " (expected " +
                                              satake::to_string(spec.expected_boundary) + "); " +
                                              verdict.diagnostics));
        }
      } else {
        const WeierstrassData w = weierstrass::parse_weierstrass(instantiate(spec, v));
        rec.stability = digest(weierstrass::classify_stability(w, nopt));
        if (spec.with_metric && !rec.stability->delta_zero) {
          const metric::ConformalFactorField field(w, cfg.metric.convention, nopt);
          metric::SphereMesh mesh;
          if (spec.experiment == Experiment::Continuity) {
            if (!layout) {
              const metric::ConformalFactorField limit(weierstrass::parse_weierstrass(spec.limit),
                                                       cfg.metric.convention, nopt);
              layout = metric::build_mesh(limit, mopt);
            }
            mesh = metric::reweight(*layout, field);
          } else {
            mesh = metric::build_mesh(field, mopt);
          }
          const metric::MetricSummary s = metric::summarize(mesh, field, cfg.metric.volume_tol);
          const metric::SegmentFit fit = metric::segment_fit(s);
          rec.metric = MetricDigest{s.diameter, s.total_volume,       s.unit_volume(),
                                    static_cast<long>(s.nodes), fit.length, fit.deviation};
          rec.values["unit_segment_deviation"] = fit.deviation / s.diameter;

          const Eigen::MatrixXd d = metric::landmark_distances(mesh, shared_points);
          if (previous && previous->rows() == d.rows()) rec.values["gh_previous"] = metric::gh_upper_bound(d, *previous);
          previous = d;

          if (spec.experiment == Experiment::GroupAction) {
            const WeierstrassData moved = weierstrass::group_act(w, spec.translate(v), Gaussian(1));
            const metric::ConformalFactorField f2(moved, cfg.metric.convention, nopt);
            const metric::SphereMesh m2 = metric::build_mesh(f2, mopt);
            const double d2 = metric::diameter(m2).diameter;
            rec.values["diameter_moved"] = d2;
            const auto moved_stab = digest(weierstrass::classify_stability(moved, nopt));
            const double rel = std::abs(d2 / s.diameter - 1);
            rec.checks.push_back(make_check("diameter_invariance", rel <= 0.02, rel, 0.02,
                                            "g_k x_k: " + moved_stab.cls +
                                                (moved_stab.polystable ? ", polystable" : ", not polystable")));
          }
        }
        const JEvaluator jev(w);
        if (spec.experiment == Experiment::ConformalRatio) {
          const metric::ConformalFactorField field(w, cfg.metric.convention, nopt);
          double lo = std::numeric_limits<double>::infinity(), hi = 0;
          for (metric::Complex t : ratio_points()) {
            const metric::Complex g4 = t * (t - 1.0) * (t - 2.0) * (t - 5.0);
            const double r = metric::conformal_factor(field, t).rho * 3 * std::abs(g4) /
                             (2 * std::numbers::pi * std::numbers::pi * jev.log_plus_j(t));
            lo = std::min(lo, r);
            hi = std::max(hi, r);
          }
          rec.values["ratio_min"] = lo;
          rec.values["ratio_max"] = hi;
          if (last)
            rec.checks.push_back(make_check("conformal_ratio", lo >= 0.98 && hi <= 1.02, std::max(1 - lo, hi - 1),
                                            0.02, "ratio in [" + fmt(lo) + ", " + fmt(hi) + "]"));
        }
        if (spec.experiment == Experiment::CylinderRatio) {
          const metric::ConformalFactorField field(w, cfg.metric.convention, nopt);
          double lo = std::numeric_limits<double>::infinity(), hi = 0;
          for (double r : {0.1, 0.15, 0.2, 0.3, 0.4, 0.5})
            for (int a = 0; a < 8; ++a) {
              const metric::Complex t = std::polar(r, (a + 0.5) * std::numbers::pi / 4);
              const double q = metric::conformal_factor(field, t).rho * r * r / jev.log_plus_j(t);
              lo = std::min(lo, q);
              hi = std::max(hi, q);
            }
          rec.values["cylinder_min"] = lo;
          rec.values["cylinder_max"] = hi;
          rec.values["cylinder_spread"] = hi / lo - 1;
          if (last)
            rec.checks.push_back(make_check("cylinder_constancy", hi / lo - 1 <= 0.05, hi / lo - 1, 0.05,
                                            "rho |t|^2 / log+|j| in [" + fmt(lo) + ", " + fmt(hi) + "]"));
        }
      }
    } catch (const Error& e) {
      if (cfg.run.strict) throw;
      rec.error = e.what();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    records.push_back(std::move(rec));
  }

  // Cross-step checks.
  for (std::size_t k = 1; k < records.size(); ++k) {
    RunRecord& cur = records[k];
    const RunRecord& prev = records[k - 1];
    if (spec.experiment == Experiment::Continuity && k >= 2) {
      const auto a = prev.values.find("gh_previous");
      const auto b = cur.values.find("gh_previous");
      if (a == prev.values.cend() || b == cur.values.end())
        cur.checks.push_back({"gh_decreasing", CheckStatus::Indeterminate, 0, 0, "missing GH bound"});
      else
        cur.checks.push_back(make_check("gh_decreasing", b->second < a->second, b->second, a->second));
    }
    if (spec.experiment == Experiment::Collapse) {
      if (!cur.metric || !prev.metric) {
        cur.checks.push_back({"unit_volume_decreasing", CheckStatus::Indeterminate, 0, 0, "missing metric"});
      } else {
        cur.checks.push_back(make_check("unit_volume_decreasing", cur.metric->unit_volume < prev.metric->unit_volume,
                                        cur.metric->unit_volume, prev.metric->unit_volume));
      }
    }
  }
  if (spec.experiment == Experiment::Collapse && !records.empty()) {
    RunRecord& fin = records.back();
    if (fin.metric) {
      fin.checks.push_back(make_check("unit_volume_small", fin.metric->unit_volume < 0.05, fin.metric->unit_volume, 0.05));
      const double dev = fin.values["unit_segment_deviation"];
      fin.checks.push_back(make_check("segment_deviation", dev <= 0.1, dev, 0.1));
    } else {
      fin.checks.push_back({"unit_volume_small", CheckStatus::Indeterminate, 0, 0.05, "missing metric"});
      fin.checks.push_back({"segment_deviation", CheckStatus::Indeterminate, 0, 0.1, "missing metric"});
    }
  }
  return records;
}

// Emission.

namespace {

const std::vector<std::string> kCsvColumns = {
    "family",         "parameter", "parameter_text", "stability_class",   "polystable", "delta_zero",
    "normal_form",    "singular_points", "diameter", "volume",            "unit_volume", "nodes",
    "segment_length", "segment_deviation", "values", "checks",            "error",      "wall_seconds"};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Backslash-escapes the separators used inside the values and checks columns.
std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '\\' || ch == '|' || ch == ';' || ch == '=') out += '\\';
    out += ch;
  }
  return out;
}

std::vector<std::string> split_escaped(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  bool any = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    any = true;
    if (s[i] == '\\' && i + 1 < s.size()) {
      cur += s[++i];
    } else if (s[i] == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += s[i];
    }
  }
  if (any) out.push_back(cur);
  return out;
}

// Splits at an unescaped separator into at most `parts` pieces, keeping the
// escapes so the pieces can be split again.
std::vector<std::string> split_raw(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  if (s.empty()) return out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      cur += s[i];
      cur += s[++i];
    } else if (s[i] == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += s[i];
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> parse_csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      row.push_back(cell);
      cell.clear();
      any = true;
    } else if (ch == '\n') {
      if (any || !cell.empty()) {
        row.push_back(cell);
        rows.push_back(row);
      }
      row.clear();
      cell.clear();
      any = false;
    } else if (ch != '\r') {
      cell += ch;
      any = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted CSV field", text.size());
  if (any || !cell.empty()) {
    row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

double csv_double(const std::string& s, std::size_t row) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ParseError("CSV row " + std::to_string(row) + ": bad number '" + s + "'", 0);
  return x;
}

CheckStatus parse_status(const std::string& s) {
  if (s == "pass") return CheckStatus::Pass;
  if (s == "fail") return CheckStatus::Fail;
  if (s == "indeterminate") return CheckStatus::Indeterminate;
  throw ParseError("unknown check status '" + s + "'", 0);
}

Json json_double(double x) { return std::isfinite(x) ? Json(x) : Json(num(x)); }

}  // namespace

std::string to_csv(const std::vector<RunRecord>& records) {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out += (i ? "," : "") + kCsvColumns[i];
  out += "\n";
  for (const RunRecord& r : records) {
    std::vector<std::string> f;
    f.push_back(r.family);
    f.push_back(num(r.parameter));
    f.push_back(r.parameter_text);
    if (r.stability) {
      f.push_back(r.stability->cls);
      f.push_back(r.stability->polystable ? "true" : "false");
      f.push_back(r.stability->delta_zero ? "true" : "false");
      f.push_back(r.stability->normal_form);
      f.push_back(std::to_string(r.stability->singular_points));
    } else {
      f.insert(f.end(), 5, "");
    }
    if (r.metric) {
      f.push_back(num(r.metric->diameter));
      f.push_back(num(r.metric->volume));
      f.push_back(num(r.metric->unit_volume));
      f.push_back(std::to_string(r.metric->nodes));
      f.push_back(num(r.metric->segment_length));
      f.push_back(num(r.metric->segment_deviation));
    } else {
      f.insert(f.end(), 6, "");
    }
    std::string values;
    for (const auto& [k, x] : r.values) values += (values.empty() ? "" : ";") + escape(k) + "=" + num(x);
    f.push_back(values);
    std::string checks;
    for (const Check& c : r.checks)
      checks += (checks.empty() ? "" : ";") + escape(c.name) + "|" + to_string(c.status) + "|" + num(c.value) + "|" +
                num(c.bound) + "|" + escape(c.detail);
    f.push_back(checks);
    f.push_back(r.error);
    f.push_back(num(r.wall_seconds));
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + csv_field(f[i]);
    out += "\n";
  }
  return out;
}

std::vector<RunRecord> parse_csv(const std::string& text) {
  const auto rows = parse_csv_rows(text);
  if (rows.empty() || rows.front() != kCsvColumns) throw ParseError("CSV header does not match the record schema", 0);
  std::vector<RunRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != kCsvColumns.size())
      throw ParseError("CSV row " + std::to_string(i) + ": expected " + std::to_string(kCsvColumns.size()) +
                           " fields, got " + std::to_string(f.size()),
                       0);
    RunRecord r;
    r.family = f[0];
    r.parameter = csv_double(f[1], i);
    r.parameter_text = f[2];
    if (!f[3].empty()) {
      r.stability = StabilityDigest{f[3], f[4] == "true", f[5] == "true", f[6],
                                    static_cast<int>(csv_double(f[7], i))};
    }
    if (!f[8].empty()) {
      r.metric = MetricDigest{csv_double(f[8], i),  csv_double(f[9], i),
                              csv_double(f[10], i), static_cast<long>(csv_double(f[11], i)),
                              csv_double(f[12], i), csv_double(f[13], i)};
    }
    for (const std::string& kv : split_raw(f[14], ';')) {
      const auto parts = split_escaped(kv, '=');
      if (parts.size() != 2) throw ParseError("CSV row " + std::to_string(i) + ": bad value entry '" + kv + "'", 0);
      r.values[parts[0]] = csv_double(parts[1], i);
    }
    for (const std::string& c : split_raw(f[15], ';')) {
      const auto parts = split_escaped(c, '|');
      if (parts.size() != 5) throw ParseError("CSV row " + std::to_string(i) + ": bad check entry '" + c + "'", 0);
      r.checks.push_back({parts[0], parse_status(parts[1]), csv_double(parts[2], i), csv_double(parts[3], i), parts[4]});
    }
    r.error = f[16];
    r.wall_seconds = csv_double(f[17], i);
    out.push_back(std::move(r));
  }
  return out;
}

std::string to_json(const std::vector<RunRecord>& records) {
  Json root;
  root["schema_version"] = kSchemaVersion;
  Json list = Json::array();
  for (const RunRecord& r : records) {
    Json j;
    j["family"] = r.family;
    j["parameter"] = json_double(r.parameter);
    j["parameter_text"] = r.parameter_text;
    if (r.stability) {
      j["stability"] = {{"class", r.stability->cls},
                        {"polystable", r.stability->polystable},
                        {"delta_zero", r.stability->delta_zero},
                        {"normal_form", r.stability->normal_form},
                        {"singular_points", r.stability->singular_points}};
    } else {
      j["stability"] = nullptr;
    }
    if (r.metric) {
      j["metric"] = {{"diameter", json_double(r.metric->diameter)},
                     {"volume", json_double(r.metric->volume)},
                     {"unit_volume", json_double(r.metric->unit_volume)},
                     {"nodes", r.metric->nodes},
                     {"segment_length", json_double(r.metric->segment_length)},
                     {"segment_deviation", json_double(r.metric->segment_deviation)}};
    } else {
      j["metric"] = nullptr;
    }
    Json values = Json::object();
    for (const auto& [k, x] : r.values) values[k] = json_double(x);
    j["values"] = values;
    Json checks = Json::array();
    for (const Check& c : r.checks)
      checks.push_back({{"name", c.name},
                        {"status", to_string(c.status)},
                        {"value", json_double(c.value)},
                        {"bound", json_double(c.bound)},
                        {"detail", c.detail}});
    j["checks"] = checks;
    j["error"] = r.error;
    list.push_back(j);
  }
  root["records"] = list;
  return root.dump(2) + "\n";
}

std::map<std::string, std::string> to_gnuplot(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const RunRecord& r : records) {
    if (!r.error.empty()) continue;
    if (r.metric) {
      series["diameter"].emplace_back(r.parameter, r.metric->diameter);
      series["volume"].emplace_back(r.parameter, r.metric->volume);
      series["unit_volume"].emplace_back(r.parameter, r.metric->unit_volume);
      series["segment_deviation"].emplace_back(r.parameter, r.metric->segment_deviation);
    }
    for (const auto& [k, x] : r.values) series[k].emplace_back(r.parameter, x);
  }
  std::map<std::string, std::string> out;
  for (auto& [name, pts] : series) {
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string text = "# parameter " + name + "\n";
    for (const auto& [p, x] : pts) text += num(p) + " " + num(x) + "\n";
    out[name] = text;
  }
  return out;
}

std::vector<std::filesystem::path> emit(const std::vector<RunRecord>& records, Format format,
                                        const std::filesystem::path& dir, const std::string& stem) {
  if (records.empty()) throw PreconditionError("emit: no records");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
    if (!out) throw Error("write failed: " + p.string());
    return p;
  };
  std::vector<std::filesystem::path> written;
  switch (format) {
    case Format::Csv:
      written.push_back(write(dir / (stem + ".csv"), to_csv(records)));
      break;
    case Format::Json:
      written.push_back(write(dir / (stem + ".json"), to_json(records)));
      break;
    case Format::Gnuplot:
      for (const auto& [name, text] : to_gnuplot(records))
        written.push_back(write(dir / (stem + "_" + name + ".dat"), text));
      break;
  }
  return written;
}

}  // namespace k3lab::family
