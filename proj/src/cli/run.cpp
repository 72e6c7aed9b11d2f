#include "lilxing/cli/run.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "lilxing/analytic.hpp"
#include "lilxing/cli/csv.hpp"
#include "lilxing/cli/svg.hpp"
#include "lilxing/errors.hpp"
#include "lilxing/estimators.hpp"
#include "lilxing/parallel.hpp"
#include "lilxing/sde.hpp"

#ifndef LILXING_BUILD_ID
#define LILXING_BUILD_ID "unknown"
#endif

namespace lilxing::cli {

namespace {

constexpr std::uint64_t kSdeCheckStream = 0x51;
constexpr GridParams kMcGrid{40, 32};
constexpr GridParams kSdeGrid{20, 16};

GridParams grid_for(const ExperimentConfig& cfg, GridParams fallback) {
  return {cfg.grid_octaves.value_or(fallback.octaves),
          cfg.points_per_octave.value_or(fallback.points_per_octave)};
}

std::string grid_text(const GridParams& g) {
  return std::to_string(g.octaves) + "x" + std::to_string(g.points_per_octave);
}

// "# seed=... grid=... build=..." then the schema line.
void stamp(CsvTable& table, const ExperimentConfig& cfg, const std::string& grid,
           const std::string& extra = {}) {
  table.add_comment("seed=" + (cfg.seed ? std::to_string(*cfg.seed) : std::string("none")) +
                    " grid=" + grid + " build=" + LILXING_BUILD_ID);
  std::string line = "schema=" + std::to_string(kCsvSchemaVersion) + " command=" + cfg.command;
  if (!extra.empty()) line += " " + extra;
  table.add_comment(line);
}

std::uint64_t require_seed(const ExperimentConfig& cfg) {
  if (!cfg.seed) throw ConfigError("missing 'seed': required for the " + cfg.command + " command");
  return *cfg.seed;
}

void require_times(const ExperimentConfig& cfg) {
  if (cfg.t_list.empty()) throw ConfigError("missing 't': give --t or --t-list");
}

std::vector<double> epsilons(const ExperimentConfig& cfg) {
  if (cfg.epsilon_list.empty()) throw ConfigError("missing 'eps': give --eps or --eps-list");
  return cfg.epsilon_list;
}

Model make_model(const ExperimentConfig& cfg) {
  if (cfg.model == "bm") {
    if (cfg.sigma0 != 1.0) throw ConfigError("invalid value for 'sigma0': model bm has sigma0 = 1");
    return BrownianModel{};
  }
  if (cfg.model == "constant") return DiffusionSpec::constant(cfg.sigma0);
  if (cfg.model == "ou") return DiffusionSpec::ou(cfg.theta, cfg.sigma0);
  if (cfg.model == "state_vol") return DiffusionSpec::state_vol(cfg.beta, cfg.sigma0);
  throw ConfigError("invalid value for 'model': '" + cfg.model + "'");
}

DiffusionSpec make_diffusion(const ExperimentConfig& cfg) {
  if (cfg.model == "bm") return DiffusionSpec::constant(1.0);
  return std::get<DiffusionSpec>(make_model(cfg));
}

// Domain problems in user-supplied times are configuration errors.
ScaledTime scaled_time(double t) {
  try {
    return ScaledTime(t);
  } catch (const DomainError& e) {
    throw ConfigError("invalid value for 't': " + std::string(e.what()));
  }
}

McOptions mc_options(const ExperimentConfig& cfg, GridParams grid) {
  McOptions o;
  o.n = cfg.n;
  o.seed = require_seed(cfg);
  o.workers = cfg.workers;
  o.bridge_correction = cfg.bridge_correction;
  o.grid = grid;
  return o;
}

void emit(const CsvTable& table, const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) {
    table.write(out);
    return;
  }
  std::ofstream file(cfg.out, std::ios::binary);
  if (!file) throw ConfigError("cannot write output file '" + cfg.out + "'");
  table.write(file);
}

const std::vector<std::string> kEstimateColumns = {
    "model", "t", "eps", "sigma0", "loglog", "n", "hits", "excluded", "p_hat", "std_err",
    "u_min", "truncation_bound", "quadrature"};

std::vector<Cell> estimate_row(const CrossingEstimate& e, double quadrature) {
  return {e.model_tag, e.t, e.epsilon, e.sigma0, ScaledTime::relaxed(e.t).loglog, e.n, e.hits,
          e.excluded, e.p_hat, e.std_err, e.u_min, e.truncation_bound, quadrature};
}

void run_analytic(const ExperimentConfig& cfg, std::ostream& out) {
  require_times(cfg);
  const auto eps_list = epsilons(cfg);
  CsvTable table({"t", "eps", "loglog", "quadrature", "asymptotic", "reflection_lower", "h",
                  "rate", "quadrature_abs_error", "truncation_bound"});
  stamp(table, cfg, "none", "sigma0=" + format_real(cfg.sigma0));
  for (double t : cfg.t_list) {
    const ScaledTime st = scaled_time(t);
    for (double eps : eps_list) {
      const DeviationLevel level(eps, cfg.sigma0);
      const QuadratureReport q = crossing_prob_quadrature_report(st, level, cfg.rel_tol);
      const double x = cfg.sigma0 * level.q(t);
      table.add_row({t, eps, st.loglog, q.value, crossing_prob_asymptotic(st, eps),
                     reflection_lower_bound(st, eps), lil_scale(t),
                     rate_function(x, cfg.sigma0).value, q.abs_error, q.truncation_bound});
    }
  }
  emit(table, cfg, out);
}

std::vector<std::vector<CrossingEstimate>> simulate_estimates(const ExperimentConfig& cfg,
                                                              const GridParams& grid,
                                                              std::vector<std::vector<double>>& quad) {
  const Model model = make_model(cfg);
  const McOptions opts = mc_options(cfg, grid);
  const auto eps_list = epsilons(cfg);
  std::vector<std::vector<CrossingEstimate>> all;
  quad.clear();
  for (double eps : eps_list) {
    std::vector<CrossingEstimate> row;
    std::vector<double> qrow;
    for (double t : cfg.t_list) {
      const ScaledTime st = scaled_time(t);
      const DeviationLevel level(eps);
      row.push_back(mc_crossing_prob(model, t, level, opts));
      qrow.push_back(crossing_prob_quadrature_report(st, level, cfg.rel_tol).value);
    }
    all.push_back(std::move(row));
    quad.push_back(std::move(qrow));
  }
  return all;
}

void run_mc(const ExperimentConfig& cfg, std::ostream& out) {
  require_times(cfg);
  const GridParams grid = grid_for(cfg, kMcGrid);
  std::vector<std::vector<double>> quad;
  const auto all = simulate_estimates(cfg, grid, quad);
  CsvTable table(kEstimateColumns);
  stamp(table, cfg, grid_text(grid),
        std::string("bridge_correction=") + (cfg.bridge_correction ? "on" : "off"));
  for (std::size_t k = 0; k < all.size(); ++k) {
    for (std::size_t j = 0; j < all[k].size(); ++j) table.add_row(estimate_row(all[k][j], quad[k][j]));
  }
  emit(table, cfg, out);
}

void run_ldp_fit(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  require_times(cfg);
  if (cfg.t_list.size() < 3) throw ConfigError("invalid value for 't_list': ldp-fit needs at least 3 times");
  const GridParams grid = grid_for(cfg, kMcGrid);
  std::vector<std::vector<double>> quad;
  const auto all = simulate_estimates(cfg, grid, quad);
  auto columns = kEstimateColumns;
  for (const char* c : {"slope", "slope_stderr", "intercept", "r_squared"}) columns.push_back(c);
  CsvTable table(columns);
  stamp(table, cfg, grid_text(grid),
        std::string("bridge_correction=") + (cfg.bridge_correction ? "on" : "off"));
  for (std::size_t k = 0; k < all.size(); ++k) {
    RateFit fit;
    try {
      fit = ldp_rate_fit(all[k]);
    } catch (const std::invalid_argument& e) {
      // Too few points with hits: keep the estimates, mark the fit missing.
      err << "lil-xing: eps=" << format_real(all[k].front().epsilon) << ": " << e.what() << '\n';
      const double nan = std::nan("");
      fit.slope = fit.slope_stderr = fit.intercept = fit.r_squared = nan;
    }
    for (double t : fit.excluded_t) {
      table.add_comment("excluded zero-hit point eps=" + format_real(all[k].front().epsilon) +
                        " t=" + format_real(t));
    }
    for (std::size_t j = 0; j < all[k].size(); ++j) {
      auto row = estimate_row(all[k][j], quad[k][j]);
      row.insert(row.end(), {fit.slope, fit.slope_stderr, fit.intercept, fit.r_squared});
      table.add_row(std::move(row));
    }
  }
  emit(table, cfg, out);
}

void run_hitting(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  require_times(cfg);
  if (cfg.model != "bm") throw ConfigError("invalid value for 'model': hitting simulates bm only");
  const GridParams grid = grid_for(cfg, kLercheGrid);
  const McOptions opts = mc_options(cfg, grid);
  CsvTable table({"a", "eps", "n", "hits", "ta_p_hat", "ta_std_err", "lerche_mass", "bin_lo",
                  "bin_hi", "count", "density", "lerche_density"});
  stamp(table, cfg, grid_text(grid),
        "octaves_per_bin=" + std::to_string(cfg.octaves_per_bin) +
            std::string(" bridge_correction=") + (cfg.bridge_correction ? "on" : "off"));
  for (double eps : epsilons(cfg)) {
    for (double t : cfg.t_list) {
      const double a = 1.0 / t;
      if (!(a >= 100)) throw ConfigError("invalid value for 't': hitting needs a = 1/t >= 100");
      const Boundary b(DeviationLevel(eps), a);
      const HittingHistogram h = hitting_time_histogram(b, opts, cfg.octaves_per_bin);
      if (!h.reliable) err << "lil-xing: a=" << format_real(a) << ": " << h.message << '\n';
      const Eigen::VectorXd ref = lerche_bin_density(b, h.edges);
      const CrossingEstimate ta = make_estimate(h.hits, h.n);
      const double mass = lerche_mass(b);
      for (std::size_t k = 0; k < h.counts.size(); ++k) {
        table.add_row({a, eps, h.n, h.hits, ta.p_hat, ta.std_err, mass, h.edges[k], h.edges[k + 1],
                       h.counts[k], h.density[k], ref[k]});
      }
    }
  }
  emit(table, cfg, out);
}

struct SdeTally {
  std::uint64_t diverged = 0;
  std::uint64_t drift_checked = 0;  // paths with max|X| < c1
  std::uint64_t drift_violations = 0;
  std::uint64_t drift_exceed_sqrt_t = 0;
  double max_drift = 0;
  std::uint64_t qv_violations = 0;
  double qv_max_slack = 0;
  double qv_worst_excess = -std::numeric_limits<double>::infinity();
  std::uint64_t sup_abs_ge_c1 = 0;
};

void run_sde_check(const ExperimentConfig& cfg, std::ostream& out) {
  require_times(cfg);
  const std::uint64_t seed = require_seed(cfg);
  if (cfg.n == 0) throw ConfigError("invalid value for 'n': must be at least 1");
  const DiffusionSpec spec = make_diffusion(cfg);
  const GridParams grid = grid_for(cfg, kSdeGrid);
  const bool driftless = spec.family != Family::ou || spec.parameter == 0;
  const double c = spec.family == Family::ou ? spec.parameter * cfg.c1 : 0.0;

  CsvTable table({"model", "t", "c1", "n", "diverged", "drift_checked", "drift_violations",
                  "max_drift_functional", "drift_exceed_sqrt_t", "qv_violations", "qv_max_slack",
                  "qv_worst_excess", "sup_abs_ge_c1", "r_bound", "dds_statistic",
                  "dds_threshold", "dds_passed"});
  stamp(table, cfg, grid_text(grid), "drift_bound_c=" + format_real(c));

  for (std::size_t j = 0; j < cfg.t_list.size(); ++j) {
    const double t = cfg.t_list[j];
    scaled_time(t);
    const auto g = std::make_shared<const TimeGrid>(
        make_geometric_grid(t, grid.octaves, grid.points_per_octave));
    struct State {
      DiffusionPath path;
      SdeTally tally;
    };
    const auto states = for_each_replicate(
        cfg.n, cfg.workers, [] { return State{}; },
        [&](State& st, std::uint64_t i) {
          PathRng rng(SeedRecord{seed, kSdeCheckStream + (j << 8), i});
          auto& tl = st.tally;
          if (!euler_maruyama_into(spec, g, rng, st.path)) {
            ++tl.diverged;
            return;
          }
          const double sup_abs = st.path.x.cwiseAbs().maxCoeff();
          if (sup_abs >= cfg.c1) ++tl.sup_abs_ge_c1;
          const double d = drift_functional(st.path);
          tl.max_drift = std::max(tl.max_drift, d);
          if (d > std::sqrt(t)) ++tl.drift_exceed_sqrt_t;
          if (sup_abs < cfg.c1) ++tl.drift_checked;
          if (!drift_bound_check(st.path, c, cfg.c1)) ++tl.drift_violations;
          const QvCheck qv = qv_deviation_check(st.path, spec, cfg.c1);
          if (!qv.passed) ++tl.qv_violations;
          tl.qv_max_slack = std::max(tl.qv_max_slack, qv.slack);
          tl.qv_worst_excess = std::max(tl.qv_worst_excess, qv.worst_excess);
        });
    SdeTally total;
    for (const auto& st : states) {
      const auto& s = st.tally;
      total.diverged += s.diverged;
      total.drift_checked += s.drift_checked;
      total.drift_violations += s.drift_violations;
      total.drift_exceed_sqrt_t += s.drift_exceed_sqrt_t;
      total.max_drift = std::max(total.max_drift, s.max_drift);
      total.qv_violations += s.qv_violations;
      total.qv_max_slack = std::max(total.qv_max_slack, s.qv_max_slack);
      total.qv_worst_excess = std::max(total.qv_worst_excess, s.qv_worst_excess);
      total.sup_abs_ge_c1 += s.sup_abs_ge_c1;
    }

    double r = std::nan("");
    try {
      r = r_bound(t, spec, cfg.c1);
    } catch (const DomainError&) {
      // g(u) too large for the bound; reported as nan.
    }
    double ks = std::nan(""), threshold = std::nan("");
    std::string passed = "n/a";
    if (driftless) {
      DdsOptions dds;
      dds.grid = grid;
      dds.seed = seed + j;
      dds.workers = cfg.workers;
      const KsReport rep = dds_equivalence_check(spec, t, cfg.n, dds);
      ks = rep.statistic;
      threshold = rep.threshold;
      passed = rep.passed ? "true" : "false";
    }
    table.add_row({spec.tag(), t, cfg.c1, cfg.n, total.diverged, total.drift_checked,
                   total.drift_violations, total.max_drift, total.drift_exceed_sqrt_t,
                   total.qv_violations, total.qv_max_slack, total.qv_worst_excess,
                   total.sup_abs_ge_c1, r, ks, threshold, passed});
  }
  emit(table, cfg, out);
}

void run_plot(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw ConfigError("missing 'input': plot needs a CSV from mc or ldp-fit");
  std::ifstream in(cfg.input, std::ios::binary);
  if (!in) throw ConfigError("cannot read input file '" + cfg.input + "'");
  CsvData data;
  std::size_t ix = 0, ip = 0, ie = 0;
  try {
    data = read_csv(in);
    ix = data.column("loglog");
    ip = data.column("p_hat");
    ie = data.column("eps");
  } catch (const std::invalid_argument& e) {
    throw ConfigError("invalid input '" + cfg.input + "': " + e.what());
  }
  std::map<double, RateSeries> by_eps;
  for (const auto& row : data.rows) {
    const double eps = std::stod(row[ie]);
    const double p = std::stod(row[ip]);
    if (!(p > 0)) continue;
    auto& s = by_eps[eps];
    s.epsilon = eps;
    s.loglog.push_back(std::stod(row[ix]));
    s.log_p.push_back(std::log(p));
  }
  std::vector<RateSeries> series;
  for (auto& [eps, s] : by_eps) series.push_back(std::move(s));
  if (series.empty()) throw ConfigError("invalid input '" + cfg.input + "': no rows with p_hat > 0");

  std::ostringstream svg;
  write_rate_plot(svg, series, "log p against log log(1/t)");
  if (cfg.out.empty()) {
    out << svg.str();
    return;
  }
  std::ofstream file(cfg.out, std::ios::binary);
  if (!file) throw ConfigError("cannot write output file '" + cfg.out + "'");
  file << svg.str();
}

}  // namespace

void run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  if (cfg.command == "analytic") {
    run_analytic(cfg, out);
  } else if (cfg.command == "mc") {
    run_mc(cfg, out);
  } else if (cfg.command == "hitting") {
    run_hitting(cfg, out, err);
  } else if (cfg.command == "ldp-fit") {
    run_ldp_fit(cfg, out, err);
  } else if (cfg.command == "sde-check") {
    run_sde_check(cfg, out);
  } else if (cfg.command == "plot") {
    run_plot(cfg, out);
  } else if (cfg.command.empty()) {
    throw ConfigError("missing command: give a subcommand or 'command' in the config file");
  } else {
    throw ConfigError("invalid value for 'command': '" + cfg.command + "'");
  }
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Small-time LIL boundary-crossing experiments", "lil-xing"};
  app.require_subcommand(0, 1);

  std::map<std::string, std::string> flags;
  std::string config_path;
  bool no_bridge = false;
  auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };
  flag("--t", "t", "time horizon t (or a comma list)");
  flag("--t-list", "t_list", "comma-separated times");
  flag("--eps", "eps", "deviation epsilon (or a comma list)");
  flag("--eps-list", "eps_list", "comma-separated epsilons");
  flag("--sigma0", "sigma0", "sigma(0,0) of the diffusion");
  flag("--model", "model", "bm | constant | ou | state_vol, optionally ou(theta), state_vol(beta)");
  flag("--theta", "theta", "mean reversion rate of ou");
  flag("--beta", "beta", "state dependence of state_vol");
  flag("--n", "n", "Monte Carlo replicates");
  flag("--seed", "seed", "master seed (required for stochastic commands)");
  flag("--workers", "workers", "worker threads (default LILXING_WORKERS or 1)");
  flag("--grid-octaves", "grid_octaves", "octaves of the geometric grid below t");
  flag("--points-per-octave", "points_per_octave", "grid points per octave");
  app.add_flag("--no-bridge-correction", no_bridge, "disable the Brownian bridge correction");
  flag("--out", "out", "output file (CSV, or SVG for plot); default stdout");
  app.add_option("--config", config_path, "key = value experiment file");

  std::string plot_input;
  const std::pair<const char*, const char*> commands[] = {
      {"analytic", "quadrature, asymptotic and reflection values over t x eps"},
      {"mc", "Monte Carlo crossing probabilities"},
      {"hitting", "T_a histograms with Lerche reference densities, a = 1/t"},
      {"ldp-fit", "crossing estimates and the fitted rate slope per eps"},
      {"sde-check", "drift, quadratic variation, r(t) and DDS diagnostics"},
      {"plot", "SVG of log p against log log(1/t) from an mc or ldp-fit CSV"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (std::string(name) == "plot") sub->add_option("input", plot_input, "CSV from mc or ldp-fit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "lil-xing: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    ExperimentConfig cfg;
    if (const char* env = std::getenv("LILXING_WORKERS"); env && *env) {
      cli::apply(cfg, KeyValues{{"workers", env}});
    }
    if (!config_path.empty()) cli::apply(cfg, read_config_file(config_path));
    if (no_bridge) flags["bridge_correction"] = "false";
    if (!plot_input.empty()) flags["input"] = plot_input;
    if (auto subs = app.get_subcommands(); !subs.empty()) flags["command"] = subs.front()->get_name();
    cli::apply(cfg, flags);
    run(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "lil-xing: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConvergenceError& e) {
    err << "lil-xing: convergence failure: " << e.what() << '\n';
    return kConvergenceError;
  } catch (const std::invalid_argument& e) {
    err << "lil-xing: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "lil-xing: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

}  // namespace lilxing::cli
