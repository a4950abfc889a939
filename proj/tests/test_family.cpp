#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "k3lab/error.hpp"
#include "k3lab/family.hpp"

using namespace k3lab;
using namespace k3lab::family;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

bool same_digests(const RunRecord& a, const RunRecord& b) {
  if (a.family != b.family || a.parameter != b.parameter || a.parameter_text != b.parameter_text) return false;
  if (a.stability.has_value() != b.stability.has_value() || a.metric.has_value() != b.metric.has_value()) return false;
  if (a.stability) {
    const auto &x = *a.stability, &y = *b.stability;
    if (x.cls != y.cls || x.polystable != y.polystable || x.delta_zero != y.delta_zero ||
        x.normal_form != y.normal_form || x.singular_points != y.singular_points)
      return false;
  }
  if (a.metric) {
    const auto &x = *a.metric, &y = *b.metric;
    if (x.diameter != y.diameter || x.volume != y.volume || x.unit_volume != y.unit_volume || x.nodes != y.nodes ||
        x.segment_length != y.segment_length || x.segment_deviation != y.segment_deviation)
      return false;
  }
  if (a.values != b.values || a.checks.size() != b.checks.size() || a.error != b.error) return false;
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    const Check &x = a.checks[i], &y = b.checks[i];
    if (x.name != y.name || x.status != y.status || x.value != y.value || x.bound != y.bound || x.detail != y.detail)
      return false;
  }
  return true;
}

// b -> infinity along k = 1..n with a fixed unipotent part.
FamilySpec frame_family(int n) {
  FamilySpec s;
  s.name = "frames-d";
  s.kind = FamilyKind::Frames;
  for (int k = 1; k <= n; ++k) s.grid.push_back({static_cast<double>(k), std::to_string(k)});
  s.experiment = Experiment::Boundary;
  s.expected_boundary = satake::BoundaryType::TypeD;
  s.frame = [](const GridValue& v) {
    std::mt19937_64 gen(5);
    const Eigen::MatrixXd nil = satake::random_unipotent(lattice::StandardKind::E8Type, gen, 0.5);
    return Eigen::MatrixXd(satake::standard_frame(0, 3 * v.value, 0, nil) * satake::random_rotation(gen));
  };
  return s;
}

// Small Weierstrass family with metric summaries at low resolution.
FamilySpec small_family() {
  FamilySpec s;
  s.name = "small";
  s.templ = "h8 = t^8 + 3t^5 + {e} t^4 - 2t + 1; h12 = t^12 - t^7 + 5t^3 + 2";
  s.limit = "h8 = t^8 + 3t^5 - 2t + 1; h12 = t^12 - t^7 + 5t^3 + 2";
  s.grid = {{0.1, "1/10"}, {0.01, "1/100"}, {0.001, "1/1000"}};
  s.experiment = Experiment::Continuity;
  s.resolution = 12;
  s.landmarks = 16;
  return s;
}

const std::vector<RunRecord>& small_records() {
  static const std::vector<RunRecord> r = run_family(small_family(), ExperimentConfig{});
  return r;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("k3lab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config defaults, validation and round trip") {
  const ExperimentConfig d = parse_config("");
  CHECK(d.metric.resolution == 32);
  CHECK(d.metric.exclusion_radius == 1e-4);
  CHECK(d.numeric.tol == 1e-8);
  CHECK(d.satake.divergence == 20);
  CHECK(d.acceptance.tolerance_scale == 1);
  CHECK_FALSE(d.run.strict);

  const ExperimentConfig m = parse_config("# minimal\nmetric.resolution = 48\n\nrun.strict = true\n");
  CHECK(m.metric.resolution == 48);
  CHECK(m.run.strict);
  CHECK(m.metric.landmarks == d.metric.landmarks);

  CHECK(error_of([] { parse_config("numeric.tol = -1e-8"); }).find("numeric.tol") == 0);
  CHECK(error_of([] { parse_config("metric.exclusion_radius = -2"); }).find("metric.exclusion_radius") == 0);
  CHECK(error_of([] { parse_config("acceptance.tolerance_scale = -1"); }).find("acceptance.tolerance_scale") == 0);
  CHECK(error_of([] { parse_config("metric.resolution = 4.5"); }).find("metric.resolution") == 0);
  CHECK(error_of([] { parse_config("metric.convention = weird"); }).find("metric.convention") == 0);
  CHECK(error_of([] { parse_config("metric.bogus = 1"); }).find("metric.bogus: unknown key") == 0);
  CHECK(error_of([] { parse_config("run.seed = 1\nrun.seed = 2"); }).find("run.seed") == 0);
  CHECK_THROWS_AS(parse_config("just words"), ParseError);
  CHECK_THROWS_AS(parse_config("schema_version = 7"), PreconditionError);

  ExperimentConfig c;
  c.metric.resolution = 40;
  c.metric.exclusion_radius = 3.5e-5;
  c.metric.convention = metric::Convention::G2G3;
  c.numeric.tol = 1e-9;
  c.satake.siegel_c = 2.5;
  c.acceptance.tolerance_scale = 0;
  c.run.seed = 99;
  c.run.strict = true;
  c.run.out = "results dir";
  const std::string text = save_config(c);
  CHECK(config_entries(parse_config(text)) == config_entries(c));
  CHECK(save_config(parse_config(text)) == text);

  const auto path = scratch_dir("config") / "cfg.txt";
  std::filesystem::create_directories(path.parent_path());
  save_config(c, path);
  CHECK(config_entries(load_config(path)) == config_entries(c));
  CHECK_THROWS_AS(load_config(path.parent_path() / "missing.txt"), PreconditionError);
}

TEST_CASE("config from JSON") {
  const ExperimentConfig j =
      parse_config(R"({"metric": {"resolution": 24, "convention": "g2g3"}, "run": {"strict": true, "seed": 7}})");
  CHECK(j.metric.resolution == 24);
  CHECK(j.metric.convention == metric::Convention::G2G3);
  CHECK(j.run.strict);
  CHECK(j.run.seed == 7);
  CHECK(parse_config(R"({"numeric.tol": 1e-6})").numeric.tol == 1e-6);
  CHECK(error_of([] { parse_config(R"({"satake": {"divergence": -3}})"); }).find("satake.divergence") == 0);
  CHECK(error_of([] { parse_config(R"({"metric": {"resolution": [1]}})"); }).find("metric.resolution") == 0);
  CHECK_THROWS_AS(parse_config("{\"metric\": "), ParseError);
}

TEST_CASE("builtin cases") {
  const auto cases = builtin_cases();
  REQUIRE(cases.size() == 5);
  for (const FamilySpec& s : cases) {
    CHECK_FALSE(s.grid.empty());
    CHECK_FALSE(s.expected.empty());
    CHECK_NOTHROW(validate(s));
    // Parameters shrink along the run.
    for (std::size_t k = 1; k < s.grid.size(); ++k) CHECK(s.grid[k].value < s.grid[k - 1].value);
  }
  CHECK_THROWS_AS(builtin_case("case6"), PreconditionError);

  const auto limit4 = weierstrass::classify_stability(weierstrass::parse_weierstrass(builtin_case("case4").limit));
  CHECK(limit4.cls == weierstrass::Stability::SemistableNotStable);
  CHECK(limit4.polystable);
  REQUIRE(limit4.normal_form);
  CHECK(limit4.normal_form->to_string() == "[3 : 1]");

  const auto limit3 = weierstrass::classify_stability(weierstrass::parse_weierstrass(builtin_case("case3").limit));
  CHECK(limit3.polystable);
  CHECK(limit3.normal_form->to_string() == "[1 : 1]");

  const auto limit2 = weierstrass::classify_stability(weierstrass::parse_weierstrass(builtin_case("case2").limit));
  CHECK(limit2.cls == weierstrass::Stability::Stable);
  CHECK(limit2.delta_identically_zero);

  const FamilySpec c5 = builtin_case("case5");
  const auto limit5 = weierstrass::classify_stability(weierstrass::parse_weierstrass(c5.limit));
  CHECK(limit5.cls == weierstrass::Stability::SemistableNotStable);
  CHECK_FALSE(limit5.polystable);

  // g_k x_k written out by hand: (s^8 t^8 + t^4 + s^4, s^12 t^12 + t^6).
  for (const GridValue& v : c5.grid) {
    const auto x = weierstrass::parse_weierstrass(instantiate(c5, v));
    const auto moved = weierstrass::group_act(x, c5.translate(v), Gaussian(1));
    const std::string s = "(" + v.text + ")";
    const auto oracle = weierstrass::parse_weierstrass("h8 = " + s + "^8 t^8 + t^4 + " + s + "^4; h12 = " + s +
                                                       "^12 t^12 + t^6");
    CHECK(moved.h8() == oracle.h8());
    CHECK(moved.h12() == oracle.h12());
  }
  // Its SL2 limit is the polystable point [1 : 1].
  const auto target = weierstrass::classify_stability(weierstrass::parse_weierstrass("h8 = t^4; h12 = t^6"));
  CHECK(target.polystable);
  CHECK(target.normal_form->to_string() == "[1 : 1]");
}

TEST_CASE("spec validation and instantiation") {
  FamilySpec s = builtin_case("case4");
  CHECK(instantiate(s, {1e-6, "10^(-6)"}) == "h8 = 3t^4 + 10^(-6); h12 = t^6");
  s.grid.clear();
  CHECK_THROWS_AS(validate(s), PreconditionError);
  s = builtin_case("case4");
  s.templ = "h8 = 3t^4; h12 = t^6";
  CHECK_THROWS_AS(validate(s), PreconditionError);
  s.templ = "h8 = t^9 + {e}; h12 = t^6";
  CHECK_THROWS_AS(validate(s), ParseError);
}

TEST_CASE("run_family: conformal ratio without metric") {
  FamilySpec s = builtin_case("case2");
  s.grid = {{1e-10, "10^(-10)"}};
  s.with_metric = false;
  const auto recs = run_family(s, ExperimentConfig{});
  REQUIRE(recs.size() == 1);
  const RunRecord& r = recs[0];
  CHECK(r.error.empty());
  CHECK_FALSE(r.metric);
  REQUIRE(r.stability);
  CHECK(r.stability->cls == "stable");
  CHECK_FALSE(r.stability->delta_zero);
  // With |3 h8|^1/2 + |h12|^1/3 = 4|G4| and the limiting lambda 4 pi / 3 the
  // ratio tends to 1 / (2 pi).
  CHECK(r.values.at("ratio_min") == doctest::Approx(0.5 / std::numbers::pi).epsilon(1e-6));
  CHECK(r.values.at("ratio_max") == doctest::Approx(0.5 / std::numbers::pi).epsilon(1e-6));
  REQUIRE(r.checks.size() == 1);
  CHECK(r.checks[0].name == "conformal_ratio");
  CHECK(r.checks[0].status == CheckStatus::Fail);
}

TEST_CASE("run_family: cylinder ratio") {
  FamilySpec s = builtin_case("case4");
  s.with_metric = false;
  const auto recs = run_family(s, ExperimentConfig{});
  REQUIRE(recs.size() == 3);
  for (const RunRecord& r : recs) {
    CHECK(r.error.empty());
    // The cusp t^6 at infinity is untouched by the perturbation.
    CHECK(r.stability->cls == "semistable-not-stable");
  }
  // rho |t|^2 / log|j| -> lambda / 4 with |3 h8|^1/2 + |h12|^1/3 = 4 |t|^2.
  CHECK(recs.back().values.at("cylinder_min") == doctest::Approx(std::numbers::pi / 3).epsilon(1e-3));
  CHECK(recs.back().values.at("cylinder_max") == doctest::Approx(std::numbers::pi / 3).epsilon(1e-3));
  CHECK(recs.back().checks.at(0).status == CheckStatus::Pass);
}

TEST_CASE("run_family: frames, errors and strict mode") {
  const auto recs = run_family(frame_family(8), ExperimentConfig{});
  REQUIRE(recs.size() == 8);
  for (std::size_t k = 0; k < recs.size(); ++k) {
    CHECK(recs[k].values.at("b") == doctest::Approx(3.0 * (k + 1)));
    CHECK(std::abs(recs[k].values.at("a")) < 1e-8);
    CHECK(recs[k].values.at("residual") < 1e-9 * std::exp(3.0 * (k + 1)));
  }
  REQUIRE(recs.back().checks.size() == 1);
  CHECK(recs.back().checks[0].status == CheckStatus::Pass);

  FamilySpec bad = frame_family(4);
  bad.frame = [](const GridValue& v) -> Eigen::MatrixXd {
    if (v.value == 2) return Eigen::MatrixXd::Zero(satake::kRank, 3);
    return satake::standard_frame(0, v.value, 0, Eigen::MatrixXd::Identity(satake::kRank, satake::kRank));
  };
  const auto partial = run_family(bad, ExperimentConfig{});
  REQUIRE(partial.size() == 4);
  CHECK(partial[0].error.empty());
  CHECK(partial[1].error.find("positive plane") != std::string::npos);
  CHECK(partial[2].error.empty());
  ExperimentConfig strict;
  strict.run.strict = true;
  CHECK_THROWS_AS(run_family(bad, strict), PreconditionError);
}

TEST_CASE("run_family: metric steps and cross-step bounds") {
  const auto& recs = small_records();
  REQUIRE(recs.size() == 3);
  for (const RunRecord& r : recs) {
    CHECK(r.error.empty());
    REQUIRE(r.metric);
    CHECK(r.metric->diameter > 0);
    CHECK(r.metric->unit_volume == doctest::Approx(r.metric->volume / (r.metric->diameter * r.metric->diameter)));
    CHECK(r.metric->segment_deviation <= 0.5 * r.metric->diameter);
    CHECK(r.stability->singular_points == 24);
  }
  CHECK_FALSE(recs[0].values.count("gh_previous"));
  const double g1 = recs[1].values.at("gh_previous"), g2 = recs[2].values.at("gh_previous");
  CHECK(g2 < g1);
  CHECK(recs[2].checks.at(0).name == "gh_decreasing");
  CHECK(recs[2].checks.at(0).status == CheckStatus::Pass);
}

TEST_CASE("emission") {
  CHECK_THROWS_AS(emit({}, Format::Csv, scratch_dir("empty"), "x"), PreconditionError);

  std::vector<RunRecord> recs = small_records();
  const auto frames = run_family(frame_family(4), ExperimentConfig{});
  recs.insert(recs.end(), frames.begin(), frames.end());
  recs[0].checks.push_back({"odd, name", CheckStatus::Indeterminate, 1.5, -2, "detail with | ; = \\ and \"quotes\"\nnewline"});
  recs[1].error = "failed, somehow";

  const auto back = parse_csv(to_csv(recs));
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(same_digests(back[i], recs[i]));
  CHECK_THROWS_AS(parse_csv("a,b\n1,2\n"), ParseError);

  // Deterministic JSON: an independent run of the same family matches.
  const auto again = run_family(small_family(), ExperimentConfig{});
  CHECK(to_json(again) == to_json(small_records()));
  const std::string json = to_json(recs);
  CHECK(json.find("\"schema_version\": 1") != std::string::npos);
  CHECK(json.find("wall") == std::string::npos);

  const auto plots = to_gnuplot(small_records());
  REQUIRE(plots.count("diameter"));
  REQUIRE(plots.count("gh_previous"));
  std::istringstream in(plots.at("diameter"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "# parameter diameter");
  double last = -1;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cols(line);
    double p, v;
    cols >> p >> v;
    CHECK(p > last);
    last = p;
    ++rows;
  }
  CHECK(rows == 3);

  const auto dir = scratch_dir("emit");
  const auto csv = emit(recs, Format::Csv, dir, "run");
  REQUIRE(csv.size() == 1);
  CHECK(csv[0] == dir / "run.csv");
  std::ifstream f(csv[0]);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == to_csv(recs));
  CHECK(emit(recs, Format::Json, dir, "run").at(0) == dir / "run.json");
  const auto dats = emit(small_records(), Format::Gnuplot, dir, "run");
  CHECK(dats.size() == plots.size());
  CHECK(std::filesystem::exists(dir / "run_unit_volume.dat"));
}

TEST_CASE("verify_acceptance subsets and sensitivity") {
  ExperimentConfig cfg;
  auto rep = verify_acceptance(cfg, {3, 11});
  REQUIRE(rep.criteria.size() == 2);
  CHECK(rep.criteria[0].id == 3);
  CHECK(rep.criteria[0].passed);
  CHECK(rep.criteria[1].passed);
  CHECK(rep.all_passed());
  CHECK(rep.to_text().find("PASS  criterion 11") != std::string::npos);

  const auto lambda = verify_acceptance(cfg, {1});
  CHECK(lambda.criteria.at(0).measured.find("lambda(1e8) = ") != std::string::npos);

  cfg.acceptance.tolerance_scale = 0;
  rep = verify_acceptance(cfg, {3, 11});
  CHECK_FALSE(rep.criteria[0].passed);  // numerical tolerances collapse to zero
  CHECK(rep.criteria[1].passed);        // exact
  CHECK_FALSE(rep.all_passed());
  CHECK(rep.to_json().find("\"all_passed\": false") != std::string::npos);
}
