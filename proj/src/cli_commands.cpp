#include "ips/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <sstream>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ips/adversary_jordan.hpp"
#include "ips/adversary_rigidity.hpp"
#include "ips/adversary_rotation.hpp"
#include "ips/campaign.hpp"
#include "ips/errors.hpp"
#include "ips/gluing.hpp"
#include "ips/report.hpp"
#include "ips/rng.hpp"
#include "ips/shadowing.hpp"

namespace ips {

namespace {

std::string generated_stamp() {
  std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

// Writes one output file, prefixing a generation-time comment unless the run
// asked for deterministic output.
void emit(const CliOptions& options, const std::string& name, const std::string& body,
          std::ostream& log) {
  std::string text = body;
  if (!options.deterministic) text = "# generated: " + generated_stamp() + "\n" + body;
  std::string path = (std::filesystem::path(options.out_dir) / name).string();
  write_text_file(path, text);
  log << "wrote " << path << "\n";
}

std::string join_g17(const Vec& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_g17(v[i]);
  }
  return out;
}

std::string join_g17(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_g17(v[i]);
  }
  return out;
}

Mat rotation_matrix(double angle) {
  Mat r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

std::shared_ptr<const ToralAutomorphism> toral_from_config(const Config& config) {
  std::string system = config.get_string("system", "cat");
  if (system == "cat") return ToralAutomorphism::cat_map();
  if (system == "toral") {
    std::vector<double> entries = config.get_double_list("matrix");
    Index n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(entries.size()))));
    if (n < 1 || static_cast<std::size_t>(n * n) != entries.size())
      throw ConfigError(config.origin() + ":" + std::to_string(config.line_of("matrix")) +
                        ": key `matrix`: expected a square row-major matrix");
    Mat m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = entries[static_cast<std::size_t>(i * n + j)];
    return std::make_shared<ToralAutomorphism>(m);
  }
  throw ConfigError(config.origin() + ": system `" + system +
                    "` is not a toral automorphism (use cat or toral)");
}

SystemPtr system_from_config(const Config& config) {
  std::string system = config.get_string("system", "cat");
  if (system == "cat" || system == "toral") return toral_from_config(config);
  if (system == "rotation")
    return std::make_shared<LinearSystem>(rotation_matrix(config.get_double("angle", 1.0)));
  if (system == "linear") {
    std::vector<double> entries = config.get_double_list("matrix");
    Index n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(entries.size()))));
    if (n < 1 || static_cast<std::size_t>(n * n) != entries.size())
      throw ConfigError(config.origin() + ":" + std::to_string(config.line_of("matrix")) +
                        ": key `matrix`: expected a square row-major matrix");
    Mat m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = entries[static_cast<std::size_t>(i * n + j)];
    return std::make_shared<LinearSystem>(m);
  }
  throw ConfigError(config.origin() + ": unknown system `" + system +
                    "` (use cat, toral, rotation, or linear)");
}

std::shared_ptr<const PeriodicOrbit> orbit_from_config(const Config& config) {
  SystemPtr system = system_from_config(config);
  Vec base = Vec::Zero(system->dim());
  if (config.has("base")) {
    std::vector<double> entries = config.get_double_list("base");
    if (static_cast<Index>(entries.size()) != system->dim())
      throw ConfigError(config.origin() + ":" + std::to_string(config.line_of("base")) +
                        ": key `base`: expected " + std::to_string(system->dim()) +
                        " coordinates");
    for (Index i = 0; i < system->dim(); ++i) base[i] = entries[static_cast<std::size_t>(i)];
  }
  int period = static_cast<int>(config.get_int("period", 1));
  return std::make_shared<PeriodicOrbit>(PeriodicOrbit::from_base_point(system, base, period));
}

// Keys shared by every command that selects a system and an orbit.
const std::vector<std::string> kOrbitKeys = {"system", "matrix", "angle", "base",
                                             "period", "seed"};

std::vector<std::string> with_orbit_keys(std::initializer_list<const char*> extra) {
  std::vector<std::string> keys = kOrbitKeys;
  for (const char* k : extra) keys.emplace_back(k);
  return keys;
}

}  // namespace

int cmd_orbits(const Config& config, const CliOptions& options, std::ostream& log) {
  config.expect_only({"system", "matrix", "angle", "q", "seed"});
  std::string system = config.get_string("system", "cat");

  CsvWriter csv;
  csv.comment("construction: orbit-listing");
  csv.header({"base", "period", "moduli", "hyperbolic"});
  int rows = 0;
  auto add_row = [&](const PeriodicOrbit& orbit) {
    HyperbolicityVerdict verdict = classify_periodic_point(orbit);
    csv.begin_row();
    csv.cell(join_g17(orbit.point(0)));
    csv.cell(static_cast<long>(orbit.period()));
    csv.cell(join_g17(verdict.moduli));
    csv.cell(static_cast<long>(verdict.hyperbolic ? 1 : 0));
    csv.end_row();
    ++rows;
  };

  if (system == "rotation" || system == "linear") {
    // Euclidean linear systems: list the fixed point at the origin.
    SystemPtr sys = system_from_config(config);
    add_row(PeriodicOrbit::from_base_point(sys, Vec(Vec::Zero(sys->dim())), 1));
  } else {
    auto toral = toral_from_config(config);
    int q = static_cast<int>(config.get_int("q", 1));
    if (q < 1)
      throw ConfigError(config.origin() + ":" + std::to_string(config.line_of("q")) +
                        ": key `q`: denominator must be >= 1");
    for (const PeriodicOrbit& orbit : find_rational_periodic_orbit(toral, q))
      add_row(orbit);
  }

  emit(options, "orbits.csv", csv.body(), log);
  log << "listed " << rows << " orbit(s)\n";
  return 0;
}

int cmd_adversary(const Config& config, const CliOptions& options, std::ostream& log) {
  std::string construction = config.get_string("construction");
  std::string csv;
  std::string summary;
  bool pass = false;

  if (construction == "rotation-drift") {
    config.expect_only({"construction", "m", "nu", "chi", "r", "d", "trials", "seed"});
    RotationDriftSpec spec;
    spec.period = static_cast<int>(config.get_int("m", 1));
    spec.nu = static_cast<int>(config.get_int("nu", 1));
    spec.chi = config.get_double("chi", 0.0);
    spec.radii = config.has("r") ? config.get_double_list("r")
                                 : std::vector<double>(static_cast<std::size_t>(spec.period), 1.0);
    spec.drift_scale = config.get_double("d");
    spec.validate();
    RotationModel model = build_rotation_model(spec);
    RotationAdversary adversary = build_rotation_adversary(model, spec.drift_scale);
    RotationDivergenceReport report = verify_rotation_divergence(
        adversary, options.seed, static_cast<int>(config.get_int("trials", 6)));
    csv = report.csv();
    summary = report.summary();
    pass = report.pass;
  } else if (construction == "jordan-drift") {
    config.expect_only(
        {"construction", "l", "theta", "L", "d", "w", "window", "trials", "seed"});
    JordanDriftSpec spec;
    spec.l = static_cast<int>(config.get_int("l", 1));
    spec.theta = config.get_double("theta", 0.0);
    spec.L = static_cast<int>(config.get_int("L", 10));
    Vec w(2);
    w << 1.0, 0.0;
    if (config.has("w")) {
      std::vector<double> entries = config.get_double_list("w");
      if (entries.size() != 2)
        throw ConfigError(config.origin() + ":" + std::to_string(config.line_of("w")) +
                          ": key `w`: expected 2 coordinates");
      w << entries[0], entries[1];
    }
    spec.w = w;
    spec.drift_scale = config.get_double("d");
    JordanAdversary adversary = build_jordan_adversary(
        spec, spec.drift_scale, static_cast<int>(config.get_int("window", 0)));
    JordanDivergenceReport report = verify_jordan_divergence(
        adversary, options.seed, static_cast<int>(config.get_int("trials", 8)));
    csv = report.csv();
    summary = report.summary();
    pass = report.pass;
  } else if (construction == "rigidity") {
    config.expect_only(with_orbit_keys({"construction", "L", "d", "samples"}));
    auto orbit = orbit_from_config(config);
    RigiditySequence seq = build_rigidity_sequence(orbit);
    RigidityAdversary adversary = build_rigidity_adversary(
        seq, static_cast<int>(config.get_int("L", 5)), config.get_double("d", 0.0));
    RigidityReport report =
        verify_rigidity(adversary, options.seed, static_cast<int>(config.get_int("samples", 40)));
    csv = report.csv();
    summary = report.summary();
    pass = report.pass;
  } else {
    throw ConfigError(config.origin() + ":" + std::to_string(config.line_of("construction")) +
                      ": key `construction`: unknown construction `" + construction +
                      "` (use rotation-drift, jordan-drift, or rigidity)");
  }

  emit(options, "adversary.csv", csv, log);
  emit(options, "adversary_summary.txt", summary, log);
  log << summary;
  return pass ? 0 : 1;
}

int cmd_shadow(const Config& config, const CliOptions& options, std::ostream& log) {
  config.expect_only(with_orbit_keys({"d", "seeds", "ratio_bound"}));
  auto orbit = orbit_from_config(config);
  double d = config.get_double("d");
  int seeds = static_cast<int>(config.get_int("seeds", 200));
  double ratio_bound = config.get_double("ratio_bound", 0.0);

  ShadowCampaignReport report = run_shadow_campaign(orbit, d, seeds, options.seed, ratio_bound);
  emit(options, "shadow.csv", report.csv(), log);
  emit(options, "shadow_summary.txt", report.summary(), log);
  log << report.summary();
  return report.pass ? 0 : 1;
}

int cmd_glue_check(const Config& config, const CliOptions& options, std::ostream& log) {
  config.expect_only(with_orbit_keys({"mode", "d", "epsilon", "C", "b", "samples"}));
  auto orbit = orbit_from_config(config);
  const ModelSpace& space = orbit->system().space();
  Index dim = orbit->dim();
  int m = orbit->period();
  double d = config.get_double("d");
  std::string mode = config.get_string("mode", "nonlinear");
  int samples = static_cast<int>(config.get_int("samples", 100));

  // Local maps: the linearization plus a seeded constant drift of norm d/2,
  // which sits exactly at the nonlinear nearness budget and inside the linear
  // one.
  GluingSpec spec;
  spec.orbit = orbit;
  spec.local_maps.assign(static_cast<std::size_t>(m), MapFn{});
  spec.b = config.get_double("b", orbit->chart_radius());
  spec.d = d;
  std::vector<Mat> jacobians;
  std::vector<Vec> drifts;
  Rng drift_rng(options.seed ^ 0x676c75652d636bull);
  for (int k = 0; k < m; ++k) {
    Mat a = orbit->jacobian(k);
    Vec delta = Vec((d / 2.0) * drift_rng.unit_vector(dim));
    jacobians.push_back(a);
    drifts.push_back(delta);
    spec.local_maps[static_cast<std::size_t>(k)] = [a, delta](const Vec& v) {
      return Vec(a * v + delta);
    };
  }

  GluedMap glued = [&]() {
    if (mode == "linear") {
      spec.mode = GluingMode::Linear;
      spec.epsilon = config.get_double("epsilon", spec.b / 3.0);
      return glue_linear(spec, options.seed);
    }
    if (mode == "nonlinear") {
      spec.mode = GluingMode::Nonlinear;
      spec.C = config.get_double("C", 20.0);
      return glue_nonlinear(spec, options.seed);
    }
    throw ConfigError(config.origin() + ":" + std::to_string(config.line_of("mode")) +
                      ": key `mode`: use linear or nonlinear");
  }();

  // Region identities, checked through the same chart expressions the glued
  // map uses, so agreement is exact: inside rho_in the map is the chart
  // conjugate of the local map; at and outside rho_out it is the system.
  double inner_sup = 0.0;
  double outer_sup = 0.0;
  CsvWriter csv;
  csv.comment("construction: glue-check");
  csv.comment("mode=" + mode + " d=" + format_g17(d) + " b=" + format_g17(spec.b) +
              " rho_in=" + format_g17(glued.rho_in()) +
              " rho_out=" + format_g17(glued.rho_out()));
  csv.header({"ball", "inner_identity_sup", "outer_identity_sup"});
  Rng sample_rng(options.seed ^ 0x73616d706c65ull);
  for (int k = 0; k < m; ++k) {
    double inner_k = 0.0;
    double outer_k = 0.0;
    for (int i = 0; i < samples; ++i) {
      Vec u = sample_rng.unit_vector(dim);
      Vec x = space.chart_to(orbit->point(k), Vec(0.99 * glued.rho_in() * u));
      Vec v = space.chart_from(orbit->point(k), x);
      Vec want =
          space.chart_to(orbit->point(k + 1), Vec(jacobians[static_cast<std::size_t>(k)] * v +
                                                  drifts[static_cast<std::size_t>(k)]));
      inner_k = std::max(inner_k, space.distance(glued(x), want));

      Vec y = space.chart_to(orbit->point(k), Vec(1.01 * glued.rho_out() * u));
      outer_k = std::max(outer_k, space.distance(glued(y), orbit->system().eval(y)));
    }
    csv.begin_row();
    csv.cell(static_cast<long>(k));
    csv.cell(inner_k);
    csv.cell(outer_k);
    csv.end_row();
    inner_sup = std::max(inner_sup, inner_k);
    outer_sup = std::max(outer_sup, outer_k);
  }

  DefectSampler sampler = DefectSampler::orbit_focused(
      orbit, {0.99 * glued.rho_in(), glued.rho_in(), 0.5 * (glued.rho_in() + glued.rho_out()),
              glued.rho_out()},
      options.seed ^ 0x64656665637473ull);
  PseudomethodS psm(orbit->system_ptr(), {glued.as_map_fn()}, d);
  double defect = measure_defect_s(psm, sampler, samples);

  bool pass = inner_sup == 0.0 && outer_sup == 0.0 && defect <= d + 1e-12;
  std::ostringstream s;
  s << "glue check: mode " << mode << ", period " << m << ", d " << format_g17(d) << "\n";
  s << "rings (" << format_g17(glued.rho_in()) << ", " << format_g17(glued.rho_out())
    << "), inner identity sup " << format_g17(inner_sup) << ", outer identity sup "
    << format_g17(outer_sup) << "\n";
  s << "sampled defect " << format_g17(defect) << " (budget " << format_g17(d) << ")\n";
  s << (pass ? "PASS" : "FAIL") << "\n";

  emit(options, "glue_check.csv", csv.body(), log);
  emit(options, "glue_check_summary.txt", s.str(), log);
  log << s.str();
  return pass ? 0 : 1;
}

int cmd_hypconst(const Config& config, const CliOptions& options, std::ostream& log) {
  config.expect_only(with_orbit_keys({"q"}));

  std::vector<std::shared_ptr<const PeriodicOrbit>> orbits;
  if (config.has("q")) {
    auto toral = toral_from_config(config);
    int q = static_cast<int>(config.get_int("q"));
    for (PeriodicOrbit& orbit : find_rational_periodic_orbit(toral, q))
      orbits.push_back(std::make_shared<PeriodicOrbit>(std::move(orbit)));
  } else {
    orbits.push_back(orbit_from_config(config));
  }

  CsvWriter csv;
  csv.comment("construction: hyperbolicity-constants");
  csv.header({"base", "period", "hyperbolic", "C", "lambda", "L", "d0"});
  bool all_hyperbolic = true;
  std::vector<HyperbolicSplitting> splittings;
  double min_d0 = 0.0;
  for (const auto& orbit : orbits) {
    HyperbolicityVerdict verdict = classify_periodic_point(*orbit);
    csv.begin_row();
    csv.cell(join_g17(orbit->point(0)));
    csv.cell(static_cast<long>(orbit->period()));
    csv.cell(static_cast<long>(verdict.hyperbolic ? 1 : 0));
    if (!verdict.hyperbolic) {
      all_hyperbolic = false;
      csv.cell(0.0);
      csv.cell(verdict.witness_modulus.value_or(1.0));
      csv.cell(0.0);
      csv.cell(0.0);
      csv.end_row();
      continue;
    }
    HyperbolicSplitting splitting = compute_splitting(orbit);
    ShadowingParams params = estimate_lipschitz_constant(splitting);
    csv.cell(splitting.C());
    csv.cell(splitting.lambda());
    csv.cell(params.L);
    csv.cell(params.d0);
    csv.end_row();
    min_d0 = splittings.empty() ? params.d0 : std::min(min_d0, params.d0);
    splittings.push_back(std::move(splitting));
  }
  if (splittings.size() > 1) {
    auto [c, lambda] = uniform_constants(splittings);
    csv.begin_row();
    csv.cell(std::string("uniform"));
    csv.cell(0L);
    csv.cell(1L);
    csv.cell(c);
    csv.cell(lambda);
    csv.cell(2.0 * c * (1.0 + lambda) / (1.0 - lambda));
    csv.cell(min_d0);
    csv.end_row();
  }

  emit(options, "hypconst.csv", csv.body(), log);
  log << "constants for " << orbits.size() << " orbit(s), "
      << (all_hyperbolic ? "all hyperbolic" : "nonhyperbolic members flagged") << "\n";
  return all_hyperbolic ? 0 : 1;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"constructive laboratory for inverse periodic shadowing"};
  app.fallthrough();
  CliOptions options;
  app.add_option("--config", options.config_path,
                 "experiment configuration file (key = value lines)");
  app.add_option("--out", options.out_dir, "output directory")->capture_default_str();
  CLI::Option* seed_opt =
      app.add_option("--seed", options.seed, "master seed (overrides the config's `seed`)");
  app.add_flag("--deterministic", options.deterministic,
               "omit generation timestamps from outputs");
  app.require_subcommand(1);

  CLI::App* orbits = app.add_subcommand("orbits", "list periodic orbits and their moduli");
  CLI::App* adversary =
      app.add_subcommand("adversary", "build a defeating pseudomethod and verify it");
  CLI::App* shadow =
      app.add_subcommand("shadow", "run a seeded random-pseudomethod shadowing campaign");
  CLI::App* glue_check =
      app.add_subcommand("glue-check", "verify gluing region identities and defect");
  CLI::App* hypconst =
      app.add_subcommand("hypconst", "estimate hyperbolicity and shadowing constants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (options.config_path.empty())
      throw ConfigError("a --config file is required for every subcommand");
    Config config = Config::parse_file(options.config_path);
    if (seed_opt->count() == 0 && config.has("seed")) options.seed = config.get_u64("seed");
    if (orbits->parsed()) return cmd_orbits(config, options, out);
    if (adversary->parsed()) return cmd_adversary(config, options, out);
    if (shadow->parsed()) return cmd_shadow(config, options, out);
    if (glue_check->parsed()) return cmd_glue_check(config, options, out);
    if (hypconst->parsed()) return cmd_hypconst(config, options, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

int run_cli(int argc, const char* const* argv) {
  return run_cli(argc, argv, std::cout, std::cerr);
}

}  // namespace ips
