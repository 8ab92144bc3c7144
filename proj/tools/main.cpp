#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ouvol/config.hpp"
#include "ouvol/io.hpp"
#include "ouvol/oracle.hpp"
#include "ouvol/pide.hpp"
#include "ouvol/strategy.hpp"

namespace {

using namespace ouvol;

constexpr int kExitOk = 0;
constexpr int kExitPrecondition = 1;
constexpr int kExitVerification = 2;

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  long seed = -1;  // < 0 keeps the config value
};

/// Loads, resolves, and precondition-checks the run configuration.  Returns
/// false after printing one "config error" line per issue.
bool load_config(const CommonArgs& args, RunConfig& cfg) {
  std::vector<ConfigIssue> issues;
  ConfigMap map;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) {
      std::cerr << "config error [--config]: cannot read " << args.config_path << "\n";
      return false;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    map = parse_config(buf.str(), issues);
  }
  if (!args.preset.empty()) map["market.preset"] = args.preset;
  if (args.seed >= 0) map["mc.seed"] = std::to_string(args.seed);
  if (!args.out_dir.empty()) map["out.dir"] = args.out_dir;
  if (map.empty()) {
    std::cerr << "config error [--config]: need --config or --preset\n";
    return false;
  }
  cfg = resolve_config(map, issues);
  if (issues.empty()) {
    const auto pre = validate_preconditions(cfg);
    issues.insert(issues.end(), pre.begin(), pre.end());
  }
  for (const ConfigIssue& issue : issues) {
    std::cerr << "config error [" << issue.key << "]: " << issue.message << "\n";
  }
  return issues.empty();
}

std::filesystem::path out_path(const RunConfig& cfg, const char* name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

int cmd_solve(const RunConfig& cfg) {
  const SolveResult res = solve(cfg.market, cfg.ou, cfg.grid);
  const ValueSurface consumption = consumption_surface(res.surface, cfg.market.gamma);
  write_file_atomic(out_path(cfg, "surface.csv"), surface_csv(res.surface, consumption));
  write_file_atomic(out_path(cfg, "consumption.csv"), consumption_csv(consumption));
  write_file_atomic(out_path(cfg, "figure1.svg"),
                    svg_heatmap(consumption, "optimal consumption fraction c/x over (t, y)"));
  std::cout << "solve: grid " << cfg.grid.m_steps << "x" << cfg.grid.j_nodes << ", CFL "
            << res.diagnostics.cfl_value << ", f range [" << res.surface.min_value() << ", "
            << *std::max_element(res.surface.values.begin(), res.surface.values.end())
            << "], envelope breaches " << res.diagnostics.envelope_breaches << "\n";
  std::cout << "solve: wrote surface.csv, consumption.csv, figure1.svg under " << cfg.out_dir
            << "\n";
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, double inject_scale) {
  SolveResult res = solve(cfg.market, cfg.ou, cfg.grid);
  if (inject_scale != 1.0) {
    for (double& v : res.surface.values) v *= inject_scale;
  }
  const ValueSurface& f = res.surface;
  const DerivedConstants& dc = res.constants;
  const double horizon = cfg.market.horizon;
  std::vector<CheckRow> checks;

  checks.push_back({"condition_b_margin", dc.condition_b.margin, 0.0, dc.condition_b.margin > 0.0});
  checks.push_back({"cfl", res.diagnostics.cfl_value, 0.9, res.diagnostics.cfl_value <= 0.9});

  // Band sweep over every node, recomputed here so injected faults are seen.
  double max_env_breach = 0.0;
  double min_f = f.values.front();
  for (int i = 0; i <= cfg.grid.m_steps; ++i) {
    for (int j = 0; j < cfg.grid.j_nodes; ++j) {
      const double env = envelope_upper(dc, cfg.grid.t_node(i), cfg.grid.y_node(j));
      max_env_breach = std::max(max_env_breach, (f.node(i, j) - env) / env);
      min_f = std::min(min_f, f.node(i, j));
    }
  }
  checks.push_back({"envelope_max_rel_breach", max_env_breach, 1e-8, max_env_breach <= 1e-8});
  checks.push_back({"min_f", min_f, 1.0 - 1e-12, min_f >= 1.0 - 1e-12});

  const DerivativeBoundReport deriv = derivative_bound_check(f, dc);
  checks.push_back({"derivative_bound_fraction", deriv.fraction_within_interior, 0.99,
                    deriv.fraction_within_interior >= 0.99});

  // Fixed-point residual at a probe lattice; bands are 3 standard errors.
  McConfig mc;
  mc.n_paths = cfg.mc_paths;
  mc.seed = cfg.seed;
  mc.substep = cfg.mc_substep;
  for (double ft : {0.0, 0.25, 0.5, 0.75}) {
    for (double fy : {0.25, 0.5, 0.75}) {
      mc.probe_points.emplace_back(ft * horizon, fy * cfg.grid.y_max);
    }
  }
  if (cfg.ou.y0 > 0.0 && cfg.ou.y0 <= cfg.grid.y_max) mc.probe_points.emplace_back(0.0, cfg.ou.y0);
  // Tolerance 3 standard errors plus the scheme's relative accuracy target;
  // the second term keeps the check meaningful when the factor is
  // deterministic and the estimator has zero variance.  The operator is only
  // defined on surfaces above 1, so a surface that already failed the band
  // sweep fails the residual row outright instead of being sampled.
  if (min_f >= 1.0 - 1e-12) {
    const std::vector<ProbeEstimate> probes = apply_operator(f, cfg.market, cfg.ou, mc);
    double worst_ratio_resid = 0.0;
    for (const ProbeEstimate& p : probes) {
      const double fv = f.value_at(p.t, p.y);
      const double resid = std::abs(p.mean - fv);
      worst_ratio_resid = std::max(worst_ratio_resid, resid / (3.0 * p.std_error + 1e-4 * fv));
    }
    checks.push_back({"residual_max_ratio", worst_ratio_resid, 1.0, worst_ratio_resid <= 1.0});
    write_file_atomic(out_path(cfg, "probes.csv"), probes_csv(probes, dc));
  } else {
    checks.push_back(
        {"residual_max_ratio", std::numeric_limits<double>::infinity(), 1.0, false});
  }

  // Contraction probe on random band-surface pairs with common random
  // numbers; the tolerance adds 3 paired standard errors in metric weight.
  const double modulus = dc.gamma / (dc.alpha - dc.a_prime);
  SolverGrid small = cfg.grid;
  small.m_steps = 8;
  small.j_nodes = 12;
  McConfig cmc = mc;
  cmc.n_paths = std::max<long>(2000, cfg.mc_paths / 4);
  cmc.probe_points.clear();
  Rng probe_rng = make_stream(hash_combine(cfg.seed, 900), 0);
  for (int k = 0; k < 15; ++k) {
    cmc.probe_points.emplace_back(uniform01(probe_rng) * horizon * 0.95,
                                  (0.05 + 0.95 * uniform01(probe_rng)) * cfg.grid.y_max);
  }
  double worst_ratio = 0.0;
  bool contraction_ok = true;
  for (int pair = 0; pair < 3; ++pair) {
    Rng rng = make_stream(hash_combine(cfg.seed, 901), pair);
    const ValueSurface phi = random_band_surface(small, dc, rng);
    const ValueSurface xi = random_band_surface(small, dc, rng);
    const double d_in = metric_distance(phi, xi, {dc.alpha, dc.b_prime});
    const auto lphi = apply_operator(phi, cfg.market, cfg.ou, cmc);
    const auto lxi = apply_operator(xi, cfg.market, cfg.ou, cmc);
    double d_out = 0.0;
    double sigma = 0.0;
    for (std::size_t k = 0; k < lphi.size(); ++k) {
      const double w = std::exp(-dc.alpha * (horizon - lphi[k].t) - dc.b_prime * lphi[k].y);
      d_out = std::max(d_out, w * std::abs(lphi[k].mean - lxi[k].mean));
      sigma = std::max(sigma, w * std::hypot(lphi[k].std_error, lxi[k].std_error));
    }
    worst_ratio = std::max(worst_ratio, d_out / d_in);
    if (d_out > modulus * d_in + 3.0 * sigma) contraction_ok = false;
  }
  checks.push_back({"contraction_max_ratio", worst_ratio, modulus, contraction_ok});

  // Concavity gap of the certainty-equivalent value: nonnegative, zero only
  // for a deterministic factor.
  JensenGapConfig jg;
  jg.n_paths = cfg.mc_paths;
  jg.n_inner = cfg.mc_paths;
  jg.seed = cfg.seed;
  const JensenGapReport gap = jensen_gap(cfg.market, cfg.ou, 0.0, cfg.ou.y0, jg);
  checks.push_back(
      {"jensen_gap_sigma",
       gap.gap_se > 0.0 ? gap.gap / gap.gap_se : (gap.gap == 0.0 ? 0.0 : -1e9),
       -3.0, gap.gap >= -3.0 * gap.gap_se});

  if (cfg.preset == "merton-constant") {
    const double q0 = q_value(cfg.market, cfg.ou.y0);
    const double exact = merton_closed_form(q0, cfg.market.gamma, horizon, 0.0);
    const double rel = std::abs(f.value_at(0.0, cfg.ou.y0) - exact) / exact;
    checks.push_back({"closed_form_rel_error", rel, 1e-4, rel <= 1e-4});
  }

  write_file_atomic(out_path(cfg, "verify.csv"), checks_csv(checks));
  bool all_ok = true;
  for (const CheckRow& row : checks) {
    std::cout << (row.passed ? "[PASS] " : "[FAIL] ") << row.name << " value " << row.value
              << " bound " << row.bound << "\n";
    all_ok = all_ok && row.passed;
  }
  std::cout << (all_ok ? "verify: all checks passed\n" : "verify: checks failed\n");
  return all_ok ? kExitOk : kExitVerification;
}

int cmd_simulate(const RunConfig& cfg, const std::string& utility, const std::string& scenario_path,
                 bool compare_constant_vol) {
  const double horizon = cfg.market.horizon;
  FactorPath factor;
  if (!scenario_path.empty()) {
    std::ifstream in(scenario_path, std::ios::binary);
    if (!in) {
      std::cerr << "config error [--scenario]: cannot read " << scenario_path << "\n";
      return kExitPrecondition;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    factor = make_path(cfg.ou, 0.0, horizon, read_scenario_csv(buf.str()));
  } else {
    Rng rng = make_stream(hash_combine(cfg.seed, 11), 0);
    factor = evolve(cfg.ou, 0.0, horizon, rng);
  }
  Rng wiener = make_stream(hash_combine(cfg.seed, 12), 0);
  const std::vector<double> increments =
      sample_increments(wiener, cfg.sim_steps, horizon / cfg.sim_steps);

  StrategyPath path;
  if (utility == "log") {
    path = simulate_log(cfg.market, factor, increments, cfg.sim_x0);
  } else {
    const SolveResult res = solve(cfg.market, cfg.ou, cfg.grid);
    path = simulate_power(res.surface, cfg.market, factor, increments, cfg.sim_x0);
  }
  write_file_atomic(out_path(cfg, "path.csv"), path_csv(path));
  write_file_atomic(out_path(cfg, "jumps.csv"), jumps_csv(factor.jumps));

  std::vector<SvgSeries> series;
  SvgSeries main_series{utility == "log" ? "log utility" : "stochastic volatility", path.times, {}};
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    main_series.y.push_back(path.consumption[k] / path.wealth[k]);
  }
  series.push_back(std::move(main_series));

  if (compare_constant_vol) {
    // Benchmark with the factor frozen at its initial level: constant
    // coefficients, consumption fraction from the constant-Q closed form,
    // driven by the same Brownian increments.
    const double y0 = cfg.ou.y0;
    MarketModel frozen = cfg.market;
    const double r0 = cfg.market.r.value(y0);
    const double mu0 = cfg.market.mu.value(y0);
    const double s20 = cfg.market.sigma2.value(y0);
    frozen.r = AffineCoeff{r0, 0.0}.to_coeff();
    frozen.mu = AffineCoeff{mu0, 0.0}.to_coeff();
    frozen.sigma2 = AffineCoeff{s20, 0.0}.to_coeff();
    const OuParams flat_params{0.0, y0, {SubordinatorFamily::Null, 0.0, 1.0}};
    const FactorPath flat = make_path(flat_params, 0.0, horizon, {});
    StrategyPath bench;
    if (utility == "log") {
      bench = simulate_log(frozen, flat, increments, cfg.sim_x0);
    } else {
      const double q0 = q_value(frozen, y0);
      const double gamma = cfg.market.gamma;
      const StrategyRule fraction = [&frozen](double, double y) {
        return optimal_fraction(frozen, y);
      };
      const StrategyRule consumption = [q0, gamma, horizon](double t, double) {
        return std::pow(merton_closed_form(q0, gamma, horizon, t), -1.0 / (1.0 - gamma));
      };
      bench = simulate_with_rules(frozen, flat, increments, fraction, consumption, cfg.sim_x0);
    }
    write_file_atomic(out_path(cfg, "path_constant_vol.csv"), path_csv(bench));
    SvgSeries bench_series{"constant volatility", bench.times, {}};
    for (std::size_t k = 0; k < bench.times.size(); ++k) {
      bench_series.y.push_back(bench.consumption[k] / bench.wealth[k]);
    }
    series.push_back(std::move(bench_series));
  }

  write_file_atomic(out_path(cfg, "figure2.svg"),
                    svg_lines(series, "consumption fraction c/X along the simulated path", "t",
                              "c/X"));
  std::cout << "simulate: " << path.n_steps() << " steps, " << factor.jumps.size()
            << " factor jumps, X(T) = " << path.wealth.back();
  if (utility == "power") std::cout << ", utility " << utility_score(path, cfg.market.gamma);
  std::cout << "\n";
  std::cout << "simulate: wrote path.csv, jumps.csv, figure2.svg under " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_laplace(const RunConfig& cfg) {
  const SubordinatorSpec& spec = cfg.ou.subordinator;
  std::cout << "family " << (spec.family == SubordinatorFamily::Null ? "null" : "compound-poisson-exp")
            << ", intensity " << spec.intensity << ", jump rate " << spec.jump_rate << "\n";
  std::cout << "mean rate " << mean_rate(spec) << ", second moment " << second_moment(spec) << "\n";
  const double w_hi = spec.family == SubordinatorFamily::Null ? 10.0 : 0.95 * spec.jump_rate;
  std::cout << "w,psi\n";
  for (int k = 0; k <= 20; ++k) {
    const double w = w_hi * k / 20;
    std::cout << format_g17(w) << "," << format_g17(laplace_exponent(spec, w)) << "\n";
  }
  const DerivedConstants dc =
      derive_constants(cfg.market, cfg.ou, cfg.alpha_margin, cfg.condition_b_eps);
  std::cout << "exponential moment check: w* = " << dc.condition_b.w_star << ", psi(w*) = "
            << dc.condition_b.psi_value << ", margin = " << dc.condition_b.margin << ", "
            << (dc.condition_b.passed ? "passed" : "failed") << "\n";
  return kExitOk;
}

int cmd_constants(const RunConfig& cfg) {
  const DerivedConstants dc =
      derive_constants(cfg.market, cfg.ou, cfg.alpha_margin, cfg.condition_b_eps);
  std::cout << "b_prime = " << format_g17(dc.b_prime) << "\n"
            << "a_prime = " << format_g17(dc.a_prime) << "\n"
            << "b_dprime = " << format_g17(dc.b_dprime) << "\n"
            << "a_dprime = " << format_g17(dc.a_dprime) << "\n"
            << "b_prime_sigma = " << format_g17(dc.b_prime_sigma) << "\n"
            << "ode_a = " << format_g17(dc.ode_a) << "\n"
            << "alpha = " << format_g17(dc.alpha) << "\n"
            << "contraction_modulus = " << format_g17(dc.gamma / (dc.alpha - dc.a_prime)) << "\n"
            << "envelope_coefficient = " << format_g17(1.0 + (1.0 - dc.gamma) / dc.a_prime) << "\n"
            << "condition_b_margin = " << format_g17(dc.condition_b.margin) << "\n";
  const PideStepper stepper(cfg.market, cfg.ou, cfg.grid, dc.b_prime);
  std::cout << "cfl = " << format_g17(stepper.cfl_value()) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal investment and consumption under a jump-driven volatility factor"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonArgs common;
  app.add_option("--config", common.config_path, "key = value config file");
  app.add_option("--preset", common.preset, "model preset (bns-example, merton-constant)");
  app.add_option("--seed", common.seed, "master seed, overrides mc.seed");
  app.add_option("--out", common.out_dir, "output directory, overrides out.dir");

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve the value equation, export surfaces");
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "residual, contraction, bound, and concavity-gap checks");
  double inject_scale = 1.0;
  verify_cmd->add_option("--inject-scale", inject_scale,
                         "scale the solved surface before checking (fault injection)");
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "simulate the optimal strategy");
  std::string utility = "power";
  simulate_cmd->add_option("--utility", utility, "power or log")
      ->check(CLI::IsMember({"power", "log"}));
  std::string scenario_path;
  simulate_cmd->add_option("--scenario", scenario_path, "tau,z jump list replacing random jumps");
  bool compare_cv = false;
  simulate_cmd->add_flag("--compare-constant-vol", compare_cv,
                         "overlay the frozen-factor benchmark");
  CLI::App* laplace_cmd = app.add_subcommand("laplace", "print the jump transform table");
  CLI::App* constants_cmd = app.add_subcommand("constants", "print the derived constants");

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  if (!load_config(common, cfg)) return kExitPrecondition;

  try {
    if (solve_cmd->parsed()) return cmd_solve(cfg);
    if (verify_cmd->parsed()) return cmd_verify(cfg, inject_scale);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg, utility, scenario_path, compare_cv);
    if (laplace_cmd->parsed()) return cmd_laplace(cfg);
    if (constants_cmd->parsed()) return cmd_constants(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPrecondition;
  }
  return kExitOk;
}
