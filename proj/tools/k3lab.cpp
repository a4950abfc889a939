// k3lab command line: lattice, modular, classify, metric, satake, family, verify.
// Exit codes: 0 success, 1 a check failed, 2 usage or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "k3lab/error.hpp"
#include "k3lab/family.hpp"
#include "k3lab/lattice.hpp"
#include "k3lab/metric.hpp"
#include "k3lab/modular.hpp"
#include "k3lab/satake.hpp"
#include "k3lab/weierstrass.hpp"

namespace {

using namespace k3lab;
using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kOk = 0, kCheckFailed = 1, kInputError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_out(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed: " + p.string());
  return p;
}

Json complex_json(std::complex<double> z) { return Json::array({z.real(), z.imag()}); }

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json stability_json(const weierstrass::StabilityReport& r) {
  Json j;
  j["class"] = weierstrass::to_string(r.cls);
  j["polystable"] = r.polystable;
  j["delta_identically_zero"] = r.delta_identically_zero;
  if (r.normal_form) {
    j["normal_form"] = r.normal_form->to_string();
    if (r.normal_form->invariant_numeric) j["invariant"] = complex_json(*r.normal_form->invariant_numeric);
  } else {
    j["normal_form"] = nullptr;
  }
  Json points = Json::array();
  for (const auto& e : r.orders.entries) {
    Json p;
    p["point"] = e.point.label();
    p["count"] = e.point.count();
    p["v8"] = e.orders.v8;
    p["v12"] = e.orders.v12;
    p["vdelta"] = e.orders.vdelta;
    if (e.orders.vdelta >= 1 && !(e.orders.v8 >= 4 && e.orders.v12 >= 6)) {
      try {
        const auto k = weierstrass::kodaira_type(e.orders.v8, e.orders.v12, e.orders.vdelta);
        p["kodaira"] = k.symbol;
        if (k.symbol.find("_n") != std::string::npos) p["n"] = k.n;
      } catch (const PreconditionError&) {
        p["kodaira"] = nullptr;
      }
    }
    points.push_back(p);
  }
  j["points"] = points;
  Json wit = Json::array();
  for (const auto& w : r.witnesses) wit.push_back(w.point.label());
  j["witnesses"] = wit;
  j["ill_conditioned"] = r.orders.ill_conditioned;
  if (!r.orders.diagnostics.empty()) j["diagnostics"] = r.orders.diagnostics;
  return j;
}

weierstrass::ParseMode parse_mode(const std::string& m) {
  if (m == "exact") return weierstrass::ParseMode::Exact;
  if (m == "numeric") return weierstrass::ParseMode::Numeric;
  return weierstrass::ParseMode::Auto;
}

std::string weierstrass_text(const std::string& input, const std::string& text) {
  if (!text.empty()) return text;
  if (input.empty()) throw PreconditionError("give --input <file> or --text '<h8 = ...; h12 = ...>'");
  return read_file(input);
}

lattice::StandardKind basis_kind(const std::string& b) {
  return b == "gamma16" ? lattice::StandardKind::Gamma16Type : lattice::StandardKind::E8Type;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k3lab: lattices, modular functions, Weierstrass data, conformal metrics and period frames"};
  app.require_subcommand(1);
  std::string out_dir = "out";
  std::string config_path;
  app.add_option("--out", out_dir, "Directory for all file outputs")->capture_default_str();
  app.add_option("--config", config_path, "Experiment configuration (key = value lines or JSON)");

  // lattice
  auto* lat = app.add_subcommand("lattice", "Standard Gram matrices and the rank-16 root-system test");
  std::string gram_name, classify16;
  lat->add_option("--gram", gram_name, "Print a Gram matrix")->check(CLI::IsMember({"k3", "std-e8", "std-gamma16"}));
  lat->add_option("--classify16", classify16, "Classify a rank-16 Gram matrix read from a file");

  // modular
  auto* mod = app.add_subcommand("modular", "j-invariant, torus area and lambda");
  mod->require_subcommand(1);
  auto* mj = mod->add_subcommand("j", "j(tau)");
  std::vector<double> tau;
  mj->add_option("--tau", tau, "Re Im")->expected(2)->required();
  auto* ma = mod->add_subcommand("area", "Area of C/L for invariants (a, b)");
  std::vector<double> av{0, 0}, bv{0, 0};
  ma->add_option("--a", av, "Re [Im]")->expected(1, 2)->required();
  ma->add_option("--b", bv, "Re [Im]")->expected(1, 2)->required();
  auto* ml = mod->add_subcommand("lambda", "lambda(j)");
  std::vector<double> jv;
  ml->add_option("--j", jv, "Re [Im]")->expected(1, 2)->required();

  // classify
  auto* cls = app.add_subcommand("classify", "GIT stability, normal form and Kodaira fibres of Weierstrass data");
  std::string input, text, mode = "auto";
  bool as_json = false;
  cls->add_option("--input", input, "File with 'h8 = ...; h12 = ...'");
  cls->add_option("--text", text, "Weierstrass data given inline");
  cls->add_option("--mode", mode)->check(CLI::IsMember({"auto", "exact", "numeric"}))->capture_default_str();
  cls->add_flag("--json", as_json, "JSON output");

  // metric
  auto* met = app.add_subcommand("metric", "Conformal metric: mesh, diameter, volume, distances");
  int resolution = 0, landmarks = 0;
  double exclusion = 0;
  std::vector<std::string> emit_files;
  met->add_option("--input", input, "File with 'h8 = ...; h12 = ...'");
  met->add_option("--text", text, "Weierstrass data given inline");
  met->add_option("--resolution", resolution, "Base cells per chart side");
  met->add_option("--exclusion", exclusion, "Chart radius of removed disks");
  met->add_option("--landmarks", landmarks, "Shared landmarks for distances.csv");
  met->add_option("--emit", emit_files, "Files to write under --out")
      ->check(CLI::IsMember({"summary.json", "distances.csv", "profile.csv"}));

  // satake
  auto* sat = app.add_subcommand("satake", "Boundary type of a sequence of period frames");
  std::string frames_path, basis = "e8", lambda_text;
  sat->add_option("--frames", frames_path, "CSV of frames: 22 rows of 3 numbers each")->required();
  sat->add_option("--basis", basis)->check(CLI::IsMember({"e8", "gamma16"}))->capture_default_str();
  sat->add_option("--lambda", lambda_text, "Polarization: 22 comma-separated integers");
  sat->add_flag("--json", as_json, "JSON output");

  // family
  auto* fam = app.add_subcommand("family", "Run builtin degeneration families and emit results");
  std::vector<std::string> cases{"all"}, formats{"csv", "json", "gnuplot"};
  fam->add_option("--case", cases, "case1 .. case5 or all")->capture_default_str();
  fam->add_option("--format", formats)->check(CLI::IsMember({"csv", "json", "gnuplot"}))->capture_default_str();
  bool strict = false;
  fam->add_flag("--strict", strict, "Stop at the first failing step");

  // verify
  auto* ver = app.add_subcommand("verify", "Run the acceptance suite");
  std::vector<int> only;
  ver->add_option("--only", only, "Criterion ids to run");
  double tol_scale = -1;
  ver->add_option("--tolerance-scale", tol_scale, "Multiply every tolerance (0 shows sensitivity)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    family::ExperimentConfig cfg = config_path.empty() ? family::ExperimentConfig{} : family::load_config(config_path);
    if (app.get_option("--out")->count() == 0 && !config_path.empty()) out_dir = cfg.run.out;
    const fs::path out(out_dir);

    if (*lat) {
      if (gram_name.empty() == classify16.empty()) throw PreconditionError("give exactly one of --gram, --classify16");
      if (!gram_name.empty()) {
        const auto g = gram_name == "k3"       ? lattice::k3_gram()
                       : gram_name == "std-e8" ? lattice::standard_gram(lattice::StandardKind::E8Type).gram
                                               : lattice::standard_gram(lattice::StandardKind::Gamma16Type).gram;
        std::cout << lattice::write_gram(g);
        return kOk;
      }
      const auto v = lattice::classify_rank16(lattice::read_gram(read_file(classify16)));
      Json j;
      j["kind"] = lattice::to_string(v.kind);
      j["root_count"] = v.root_count;
      j["component_sizes"] = v.component_sizes;
      std::cout << j.dump(2) << "\n";
      return kOk;
    }

    if (*mod) {
      Json j;
      if (*mj) {
        const modular::Complex t(tau[0], tau[1]);
        j["tau"] = complex_json(t);
        j["j"] = complex_json(modular::j_from_tau(t));
        j["tau_reduced"] = complex_json(modular::reduce_fundamental(t).tau);
      } else if (*ma) {
        const modular::Complex a(av[0], av.size() > 1 ? av[1] : 0), b(bv[0], bv.size() > 1 ? bv[1] : 0);
        const auto r = modular::torus_area(a, b);
        j["a"] = complex_json(a);
        j["b"] = complex_json(b);
        j["singular"] = r.singular;
        if (!r.singular) {
          j["area"] = r.area;
          j["tau"] = complex_json(r.tau_used);
          j["cross_check"] = r.cross_check;
        }
      } else {
        const modular::Complex jj(jv[0], jv.size() > 1 ? jv[1] : 0);
        j["j"] = complex_json(jj);
        j["lambda"] = modular::lambda_of_j(jj);
      }
      std::cout << j.dump(2) << "\n";
      return kOk;
    }

    if (*cls) {
      const auto w = weierstrass::parse_weierstrass(weierstrass_text(input, text), parse_mode(mode));
      const auto r = weierstrass::classify_stability(w, {cfg.numeric.tol});
      const Json j = stability_json(r);
      if (as_json) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "class: " << j["class"].get<std::string>() << (r.polystable ? " (polystable)" : "") << "\n";
        if (r.normal_form) std::cout << "normal form: " << r.normal_form->to_string() << "\n";
        if (r.delta_identically_zero) std::cout << "discriminant vanishes identically\n";
        for (const auto& p : j["points"])
          std::cout << "  " << p["point"].get<std::string>() << ": (" << p["v8"] << ", " << p["v12"] << ", "
                    << p["vdelta"] << ")" << (p.contains("kodaira") && !p["kodaira"].is_null()
                                                  ? " " + p["kodaira"].get<std::string>()
                                                  : "")
                    << "\n";
      }
      return kOk;
    }

    if (*met) {
      const auto w = weierstrass::parse_weierstrass(weierstrass_text(input, text));
      const weierstrass::NumericOptions nopt{cfg.numeric.tol};
      const metric::ConformalFactorField field(w, cfg.metric.convention, nopt);
      metric::MeshOptions mopt;
      mopt.resolution = resolution > 0 ? resolution : cfg.metric.resolution;
      mopt.exclusion_radius = exclusion > 0 ? exclusion : cfg.metric.exclusion_radius;
      const metric::SphereMesh mesh = metric::build_mesh(field, mopt);
      const metric::MetricSummary s = metric::summarize(mesh, field, cfg.metric.volume_tol);
      const metric::SegmentFit fit = metric::segment_fit(s);
      Json j;
      j["input"] = weierstrass::to_string(w);
      j["nodes"] = s.nodes;
      j["diameter"] = s.diameter;
      j["diameter_change"] = s.diameter_change;
      j["volume"] = s.total_volume;
      j["volume_error"] = s.volume_error;
      j["unit_volume"] = s.unit_volume();
      j["segment_length"] = fit.length;
      j["segment_deviation"] = fit.deviation;
      j["singular_points"] = mesh.singular_points.size();
      std::cout << j.dump(2) << "\n";
      for (const std::string& f : emit_files) {
        std::string body;
        if (f == "summary.json") {
          body = j.dump(2) + "\n";
        } else if (f == "distances.csv") {
          const auto pts = metric::sphere_points(landmarks > 0 ? landmarks : cfg.metric.landmarks);
          const Eigen::MatrixXd d = metric::landmark_distances(mesh, pts);
          body = "chart,re,im";
          for (Eigen::Index k = 0; k < d.cols(); ++k) body += ",d" + std::to_string(k);
          body += "\n";
          for (Eigen::Index i = 0; i < d.rows(); ++i) {
            body += std::string(pts[i].chart == metric::Chart::T ? "t" : "s") + "," + num(pts[i].z.real()) + "," +
                    num(pts[i].z.imag());
            for (Eigen::Index k = 0; k < d.cols(); ++k) body += "," + num(d(i, k));
            body += "\n";
          }
        } else {
          // Distance from the first diameter landmark, per active node.
          const auto far = metric::diameter(mesh);
          const std::vector<double>& row = far.rows.front();
          body = "chart,re,im,side,rho,cell_volume,distance\n";
          for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
            const auto& n = mesh.nodes[i];
            if (!n.active) continue;
            body += std::string(n.where.chart == metric::Chart::T ? "t" : "s") + "," + num(n.where.z.real()) + "," +
                    num(n.where.z.imag()) + "," + num(n.side) + "," + num(n.rho) + "," + num(n.cell_volume) + "," +
                    num(row[i]) + "\n";
          }
        }
        std::cerr << "wrote " << write_out(out, f, body).string() << "\n";
      }
      return kOk;
    }

    if (*sat) {
      const auto kind = basis_kind(basis);
      const auto raw = satake::read_frames_csv(read_file(frames_path));
      std::vector<satake::PeriodFrame> frames;
      for (const auto& m : raw) frames.push_back({m, kind});
      if (frames.empty()) throw PreconditionError("no frames in " + frames_path);
      Json j;
      satake::BoundaryVerdict v;
      bool passed = true;
      if (!lambda_text.empty()) {
        std::vector<double> lambda;
        std::stringstream ss(lambda_text);
        std::string item;
        while (std::getline(ss, item, ',')) {
          try {
            lambda.push_back(std::stod(item));
          } catch (const std::exception&) {
            throw PreconditionError("--lambda: '" + item + "' is not a number");
          }
        }
        const auto rep = satake::polarized_filter(frames, lambda, cfg.satake);
        v = rep.verdict;
        passed = rep.passed;
        j["polarization"] = {{"passed", rep.passed}, {"norm", rep.norm}, {"max_plane_residual", rep.max_plane_residual}};
      } else {
        std::vector<satake::IwasawaCoordinates> coords;
        for (const auto& f : frames) coords.push_back(satake::triangularize(f));
        v = satake::classify_sequence(coords, cfg.satake);
      }
      j["boundary_type"] = satake::to_string(v.btype);
      j["component"] = v.component;
      j["a"] = v.a.last + 0.0;
      j["b"] = v.b.last + 0.0;
      j["c"] = v.c.last + 0.0;
      j["diagnostics"] = v.diagnostics;
      if (v.btype == satake::BoundaryType::TypeB || v.btype == satake::BoundaryType::TypeC ||
          v.btype == satake::BoundaryType::TypeD) {
        const auto r = satake::phi_realize(v);
        j["realization"] = r.description;
        if (r.orbifold) j["orbifold_diameter"] = r.diameter.value;
      }
      if (as_json) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << j["boundary_type"].get<std::string>() << (v.component.empty() ? "" : " (" + v.component + ")")
                  << "\n"
                  << v.diagnostics << "\n";
        if (j.contains("realization")) std::cout << "limit: " << j["realization"].get<std::string>() << "\n";
      }
      return passed ? kOk : kCheckFailed;
    }

    if (*fam) {
      if (strict) cfg.run.strict = true;
      std::vector<family::FamilySpec> specs;
      for (const std::string& c : cases) {
        if (c == "all") {
          for (const auto& s : family::builtin_cases()) specs.push_back(s);
        } else {
          specs.push_back(family::builtin_case(c));
        }
      }
      bool ok = true;
      for (const auto& spec : specs) {
        std::cerr << spec.name << ": " << spec.expected << "\n";
        const auto records = family::run_family(spec, cfg);
        for (const auto& r : records) {
          std::cerr << "  " << r.parameter_text << ":";
          if (!r.error.empty()) {
            ok = false;
            std::cerr << " error: " << r.error;
          }
          if (r.metric) std::cerr << " diameter " << r.metric->diameter << ", unit volume " << r.metric->unit_volume;
          for (const auto& c : r.checks) {
            std::cerr << "; " << c.name << " " << family::to_string(c.status);
            ok = ok && c.status == family::CheckStatus::Pass;
          }
          std::cerr << " (" << r.wall_seconds << " s)\n";
        }
        for (const std::string& f : formats) {
          const auto fmt = f == "csv" ? family::Format::Csv : f == "json" ? family::Format::Json : family::Format::Gnuplot;
          for (const auto& p : family::emit(records, fmt, out, spec.name)) std::cerr << "wrote " << p.string() << "\n";
        }
      }
      return ok ? kOk : kCheckFailed;
    }

    if (*ver) {
      if (tol_scale >= 0) cfg.acceptance.tolerance_scale = tol_scale;
      const auto report = family::verify_acceptance(cfg, only);
      std::cout << report.to_text();
      std::cerr << "wrote " << write_out(out, "acceptance.json", report.to_json()).string() << "\n";
      return report.all_passed() ? kOk : kCheckFailed;
    }
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const PreconditionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
