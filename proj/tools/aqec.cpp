// aqec: command-line front end for the adaptive-code simulator.
//
//   aqec pfail --code 15-1-7-3 --px 0.007 --py 0.002 --pz 0.001
//   aqec simulate dephasing|drift|unital [--config file] [flags]
//   aqec analyze copt|grid-spacing|fit [flags]
//   aqec report results.csv [--out figure.svg]
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aqec/aqec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::vector<std::pair<std::string, std::string*>> values;  // config key -> flag text
  bool baseline = false;
};

// Registers the experiment flags on a subcommand; each maps to one config key.
void add_experiment_flags(CLI::App* app, Flags& f, std::vector<std::string>& storage) {
  static const std::vector<std::tuple<std::string, std::string, std::string>> table{
      {"--code", "code", "code name (15-1-7-3, 31-6-7-5, 23-1-7, 5-1-3)"},
      {"--p", "channel.p", "comma-separated physical error rates"},
      {"--ecc", "channel.ecc", "eccentricities k1,k2,k3"},
      {"--orientation", "channel.orientation", "haar-random or 9 row-major reals"},
      {"--theta0", "channel.theta0", "dephasing angle in radians, or random"},
      {"--kappa-sq", "channel.kappa_sq", "per-cycle drift variance"},
      {"--cells", "estimator.cells", "angle grid cells (0: ceil(1/p))"},
      {"--points", "estimator.points", "channel grid points"},
      {"--engine", "estimator.engine", "per-cycle or fast-forward"},
      {"--max-cycles", "estimator.max_cycles", "censoring horizon"},
      {"--trials", "trials", "trials per p value"},
      {"--seed", "seed", "base seed"},
      {"--threads", "threads", "worker threads (0: all cores)"},
      {"--out", "out", "output directory"},
      {"--n-mc", "analysis.n_mc", "Monte Carlo samples"},
      {"--n-list", "analysis.n_list", "grid sizes for the spacing study"},
      {"--eps", "analysis.eps", "distance thresholds for the spacing study"},
      {"--input", "analysis.inputs", "results.csv files to fit"},
  };
  storage.reserve(table.size());
  for (const auto& [flag, key, help] : table) {
    storage.emplace_back();
    app->add_option(flag, storage.back(), help);
    f.values.emplace_back(key, &storage.back());
  }
  app->add_option("--config", f.config, "experiment config file");
  app->add_flag("--baseline", f.baseline, "disable adaptation (non-adaptive baseline)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(CLI::detail::trim_copy(item));
  return out;
}

aqec::ExperimentConfig build_config(const std::string& kind, const Flags& f) {
  aqec::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = aqec::load_config(f.config);
  cfg.kind = kind;
  for (const auto& [key, text] : f.values) {
    if (text->empty()) continue;
    aqec::detail::ConfigValue v{key, split_list(*text)};
    try {
      aqec::detail::apply(cfg, v);
    } catch (const aqec::ConfigError& e) {
      throw aqec::ConfigError(std::string("command line: ") + e.what());
    }
  }
  if (f.baseline) cfg.adaptive = false;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

int run_simulation(const aqec::ExperimentConfig& cfg) {
  const aqec::AsymmetricCode code = aqec::code_by_name(cfg.code);
  const fs::path dir = cfg.out;
  fs::create_directories(dir);
  open_out(dir / "config.toml") << aqec::emit_config(cfg);

  std::ofstream csv = open_out(dir / "results.csv");
  aqec::CsvWriter writer(csv);
  std::vector<aqec::ResultRow> rows;
  const unsigned threads = cfg.thread_count();

  for (std::size_t k = 0; k < cfg.p.size(); ++k) {
    const double p = cfg.p[k];
    const std::uint64_t base = cfg.seed + k;
    double k1 = std::numeric_limits<double>::quiet_NaN();
    double baseline = std::numeric_limits<double>::quiet_NaN();
    std::function<aqec::TrialResult(std::size_t, std::uint64_t)> trial;

    if (cfg.kind == "unital") {
      const aqec::Eccentricities ecc = cfg.eccentricities();
      k1 = std::max({ecc.k1, ecc.k2, ecc.k3});
      if (p > 0.0) baseline = aqec::unadapted_baseline(code, p, ecc, base);
      const auto orientation = cfg.orientation_rotation();
      trial = [&, p, ecc, orientation](std::size_t, std::uint64_t seed) {
        aqec::UnitalTrialConfig t;
        t.code = code;
        t.p = p;
        t.ecc = ecc;
        t.orientation = orientation;
        t.n_points = cfg.points;
        t.max_cycles = cfg.max_cycles;
        t.seed = seed;
        t.adaptive = cfg.adaptive;
        return aqec::run_unital_trial(t);
      };
    } else {
      const std::size_t cells = cfg.cells_for(p > 0.0 ? p : 1.0);
      trial = [&, p, cells](std::size_t, std::uint64_t seed) {
        aqec::DephasingTrialConfig t;
        t.code = code;
        t.p = p;
        t.theta0 = cfg.theta0;
        t.n_cells = cells;
        t.kappa_sq = cfg.drift_variance();
        t.engine = cfg.engine_kind();
        t.max_cycles = cfg.max_cycles;
        t.seed = seed;
        t.adaptive = cfg.adaptive;
        return aqec::run_dephasing(t);
      };
    }

    aqec::run_ensemble(cfg.trials, base, threads, trial, [&](const aqec::TrialResult& r) {
      rows.push_back(aqec::make_row(r, cfg.kind, cfg.code, k1, baseline));
      writer.write(rows.back());
    });
  }
  writer.flush();

  json summary = aqec::summarize_rows(rows);
  summary["kind"] = cfg.kind;
  summary["code"] = cfg.code;
  summary["adaptive"] = cfg.adaptive;
  summary["seed"] = cfg.seed;
  summary["control_policy"] = "mle-change";
  summary["update_policy"] = "per-error-cycle";
  if (cfg.kind != "unital") summary["engine"] = cfg.engine;
  if (cfg.kind == "unital") summary["baseline_model"] = "haar-average of 1/p_fail_exact, 20000 orientations";
  open_out(dir / "summary.json") << summary.dump(2) << '\n';
  open_out(dir / "figure.svg") << aqec::render_report_svg(rows);

  std::size_t errors = 0;
  for (const auto& r : rows) errors += r.ok() ? 0 : 1;
  std::cout << summary.dump(2) << '\n';
  if (errors) {
    std::cerr << errors << " trial(s) failed; see results.csv\n";
    return 2;
  }
  return 0;
}

int run_copt(const aqec::ExperimentConfig& cfg) {
  const auto code = aqec::code_by_name(cfg.code);
  const auto ecc = cfg.eccentricities();
  const auto r = aqec::c_opt_numeric(code, ecc, cfg.n_mc, cfg.seed);
  json j = {{"code", cfg.code},
            {"ecc", {ecc.k1, ecc.k2, ecc.k3}},
            {"n_mc", cfg.n_mc},
            {"seed", cfg.seed},
            {"c_opt", r.value},
            {"std_error", r.std_error},
            {"optimal_coefficient", r.optimal_coefficient},
            {"average_coefficient", r.average_coefficient}};
  if (code.tz() == 1 && ecc.k1 >= ecc.k3) j["closed_form_average_coefficient"] = aqec::haar_lifetime_bound_closed(ecc);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_grid_spacing(const aqec::ExperimentConfig& cfg) {
  const auto ecc = cfg.eccentricities();
  const std::size_t trials = cfg.trials;
  const auto rows = aqec::grid_spacing_study(ecc, cfg.n_list, trials, cfg.eps, cfg.seed);
  json table = json::array();
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) {
    table.push_back({{"n_points", r.n_points},
                     {"mean_min_distance", r.mean_min_distance},
                     {"std_error", r.std_error},
                     {"eps", r.eps},
                     {"empirical_cdf", r.empirical_cdf},
                     {"spacing_bound", r.bound}});
    pts.emplace_back(static_cast<double>(r.n_points), r.mean_min_distance);
  }
  json j = {{"ecc", {ecc.k1, ecc.k2, ecc.k3}}, {"trials", trials}, {"rows", table}};
  if (pts.size() >= 3) j["slope"] = aqec::power_law_fit(pts).slope;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_fit(const aqec::ExperimentConfig& cfg) {
  std::vector<aqec::ResultRow> rows;
  for (const auto& path : cfg.inputs) {
    auto r = aqec::read_results_csv(path);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::cout << aqec::summarize_rows(rows).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive asymmetric-code simulator"};
  app.require_subcommand(1);

  auto* pfail = app.add_subcommand("pfail", "exact and leading-order uncorrectable rate");
  std::string pf_code = "15-1-7-3";
  double px = 0, py = 0, pz = 0;
  bool leading_only = false;
  pfail->add_option("--code", pf_code, "code name");
  pfail->add_option("--px", px)->check(CLI::Range(0.0, 1.0));
  pfail->add_option("--py", py)->check(CLI::Range(0.0, 1.0));
  pfail->add_option("--pz", pz)->check(CLI::Range(0.0, 1.0));
  pfail->add_flag("--leading", leading_only, "print only the leading-order value");

  auto* simulate = app.add_subcommand("simulate", "run a trial ensemble");
  simulate->require_subcommand(1);
  std::vector<CLI::App*> sim_kinds;
  std::vector<std::vector<std::string>> sim_storage(3);
  std::vector<Flags> sim_kind_flags(3);
  const char* sim_names[] = {"dephasing", "drift", "unital"};
  for (int i = 0; i < 3; ++i) {
    sim_kinds.push_back(simulate->add_subcommand(sim_names[i]));
    add_experiment_flags(sim_kinds.back(), sim_kind_flags[i], sim_storage[i]);
  }

  auto* analyze = app.add_subcommand("analyze", "closed-form and post-processing analyses");
  analyze->require_subcommand(1);
  std::vector<CLI::App*> an_kinds;
  std::vector<std::vector<std::string>> an_storage(3);
  std::vector<Flags> an_kind_flags(3);
  const char* an_names[] = {"copt", "grid-spacing", "fit"};
  for (int i = 0; i < 3; ++i) {
    an_kinds.push_back(analyze->add_subcommand(an_names[i]));
    add_experiment_flags(an_kinds.back(), an_kind_flags[i], an_storage[i]);
  }

  auto* report = app.add_subcommand("report", "render figure.svg from results.csv");
  std::string report_in, report_out = "figure.svg";
  report->add_option("input", report_in, "results.csv")->required();
  report->add_option("--out", report_out, "output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*pfail) {
      const auto code = aqec::code_by_name(pf_code);
      const aqec::PauliRates r{px, py, pz};
      r.validate();
      json j = {{"code", pf_code}, {"px", px}, {"py", py}, {"pz", pz}, {"p_fail_leading", aqec::p_fail_leading(code, r)}};
      if (!leading_only) j["p_fail_exact"] = aqec::p_fail_exact(code, r);
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    for (int i = 0; i < 3; ++i)
      if (*sim_kinds[i]) return run_simulation(build_config(sim_names[i], sim_kind_flags[i]));
    for (int i = 0; i < 3; ++i)
      if (*an_kinds[i]) {
        const auto cfg = build_config(an_names[i], an_kind_flags[i]);
        if (i == 0) return run_copt(cfg);
        if (i == 1) return run_grid_spacing(cfg);
        return run_fit(cfg);
      }
    if (*report) {
      std::vector<aqec::ResultRow> rows;
      try {
        rows = aqec::read_results_csv(report_in);
      } catch (const aqec::SchemaError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
      }
      open_out(report_out) << aqec::render_report_svg(rows);
      return 0;
    }
  } catch (const aqec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
