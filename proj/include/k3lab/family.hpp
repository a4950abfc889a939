#pragma once

// Families of Weierstrass data or period frames indexed by a small parameter,
// run step by step with stability, metric and cross-step checks, plus the
// experiment configuration and result emission (CSV, JSON, gnuplot columns).

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "k3lab/lattice.hpp"
#include "k3lab/metric.hpp"
#include "k3lab/satake.hpp"
#include "k3lab/weierstrass.hpp"

namespace k3lab::family {

constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  struct Metric {
    int resolution = 32;
    double exclusion_radius = 1e-4;
    int landmarks = 64;
    double volume_tol = 1e-4;
    metric::Convention convention = metric::Convention::Literal;
  } metric;
  struct Numeric {
    double tol = 1e-8;
  } numeric;
  satake::Thresholds satake;
  struct Acceptance {
    double tolerance_scale = 1;  // multiplies every acceptance tolerance
  } acceptance;
  struct Run {
    unsigned long seed = 20240611;
    bool strict = false;
    std::string out = "out";
  } run;
};

/// Dotted key -> value text, in a fixed key order.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);

/// Reads `key = value` lines ('#' comments, blank lines allowed), or a JSON
/// object whose nesting spells the same dotted keys. Missing keys keep their
/// defaults. Throws ParseError on syntax errors and PreconditionError naming
/// the field on unknown keys or invalid values.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string save_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

enum class FamilyKind { Weierstrass, Frames };

enum class Experiment {
  None,
  Continuity,      // GH bounds to the previous step decrease
  ConformalRatio,  // rho 3|G4| / (2 pi^2 log+|j|) near 1 at the last step
  Collapse,        // unit-diameter volume decreasing, close to a segment
  CylinderRatio,   // rho |t|^2 / log+|j| constant on an annulus around 0
  GroupAction,     // x_k and g_k x_k have the same diameter
  Boundary,        // frame sequence reaches the expected boundary type
};
std::string to_string(Experiment e);

struct GridValue {
  double value = 0;
  std::string text;  // substituted for {e}; must parse as an exact constant
};

struct FamilySpec {
  std::string name;
  FamilyKind kind = FamilyKind::Weierstrass;
  std::vector<GridValue> grid;
  /// Weierstrass input with {e} standing for the parameter.
  std::string templ;
  /// The limit datum as Weierstrass input.
  std::string limit;
  std::string expected;
  Experiment experiment = Experiment::None;
  /// GroupAction: the SL2 element g_k for a parameter value.
  std::function<weierstrass::Matrix2(const GridValue&)> translate;
  /// Frames: the frame for a parameter value, and the expected verdict.
  std::function<Eigen::MatrixXd(const GridValue&)> frame;
  lattice::StandardKind frame_kind = lattice::StandardKind::E8Type;
  satake::BoundaryType expected_boundary = satake::BoundaryType::Interior;
  /// Overrides of the config, 0 for none.
  int resolution = 0;
  int landmarks = 0;
  /// Landmarks shared across steps for GH comparisons.
  int shared_points = 48;
  bool with_metric = true;
};

/// Substitutes the grid text into the template; throws PreconditionError for
/// an empty grid or a missing placeholder.
std::string instantiate(const FamilySpec& spec, const GridValue& v);
/// Checks the grid and that every instantiated template parses within the
/// degree caps. Throws PreconditionError or ParseError.
void validate(const FamilySpec& spec);

/// The five reference degenerations; Case 5 approaches a polystable point
/// through explicit elements diag(s, 1/s).
std::vector<FamilySpec> builtin_cases();
/// Looks up a builtin case by name ("case1" .. "case5"); throws
/// PreconditionError for unknown names.
FamilySpec builtin_case(const std::string& name);

enum class CheckStatus { Pass, Fail, Indeterminate };
std::string to_string(CheckStatus s);

struct Check {
  std::string name;
  CheckStatus status = CheckStatus::Indeterminate;
  double value = 0;
  double bound = 0;
  std::string detail;
};

struct StabilityDigest {
  std::string cls;
  bool polystable = false;
  bool delta_zero = false;
  std::string normal_form;
  int singular_points = 0;
};

struct MetricDigest {
  double diameter = 0;
  double volume = 0;
  double unit_volume = 0;
  long nodes = 0;
  double segment_length = 0;
  double segment_deviation = 0;
};

struct RunRecord {
  std::string family;
  double parameter = 0;
  std::string parameter_text;
  std::optional<StabilityDigest> stability;
  std::optional<MetricDigest> metric;
  /// Tracked quantities, e.g. "gh_previous", "ratio_min", "a".
  std::map<std::string, double> values;
  std::vector<Check> checks;
  std::string error;  // empty unless the step failed
  double wall_seconds = 0;
};

/// Runs every grid value in order. A failing step records its error and the
/// run continues, unless cfg.run.strict, in which case the error propagates.
std::vector<RunRecord> run_family(const FamilySpec& spec, const ExperimentConfig& cfg);

enum class Format { Csv, Json, Gnuplot };

std::string to_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_csv(const std::string& text);
/// Deterministic: no wall times, fixed key order, round-trip doubles.
std::string to_json(const std::vector<RunRecord>& records);
/// One two-column table (parameter, value) per tracked quantity, sorted by
/// parameter.
std::map<std::string, std::string> to_gnuplot(const std::vector<RunRecord>& records);

/// Writes the records under `dir` with `stem` as the file name prefix and
/// returns the paths written. Throws PreconditionError for no records and
/// Error on I/O failure.
std::vector<std::filesystem::path> emit(const std::vector<RunRecord>& records, Format format,
                                        const std::filesystem::path& dir, const std::string& stem);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string measured;
  std::string detail;
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  bool all_passed() const;
  std::string to_text() const;
  std::string to_json() const;
};

/// Runs the twelve acceptance experiments. Tolerances are multiplied by
/// cfg.acceptance.tolerance_scale; failures are report entries. `only`
/// restricts the run to the listed criteria.
AcceptanceReport verify_acceptance(const ExperimentConfig& cfg, const std::vector<int>& only = {});

}  // namespace k3lab::family
