#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ouvol/factor.hpp"
#include "ouvol/market.hpp"
#include "ouvol/pide.hpp"
#include "ouvol/rng.hpp"
#include "ouvol/stats.hpp"
#include "ouvol/strategy.hpp"

using namespace ouvol;

namespace {

/// Constant coefficients with the rate above the drift, so the optimal
/// risky fraction is zero and every wealth path is deterministic.
MarketModel bank_dominant_model() {
  MarketModel m;
  m.gamma = 0.5;
  m.horizon = 1.0;
  m.r = {[](double) { return 0.03; }, [](double) { return 0.0; }};
  m.mu = {[](double) { return 0.01; }, [](double) { return 0.0; }};
  m.sigma2 = {[](double) { return 0.25; }, [](double) { return 0.0; }};
  m.growth = {0.03, 0.0, 0.01, 0.0, 0.25, 0.0, 0.03, 0.0, 0.0, 0.0};
  return m;
}

/// Interior-regime coefficients whose optimal fraction moves with the
/// factor level, for the measurability checks.
MarketModel varying_fraction_model() {
  MarketModel m;
  m.gamma = 0.5;
  m.horizon = 1.0;
  m.r = {[](double) { return 0.0; }, [](double) { return 0.0; }};
  m.mu = {[](double y) { return 0.02 + 0.01 * y; }, [](double) { return 0.01; }};
  m.sigma2 = {[](double y) { return 0.25 + 0.1 * y; }, [](double) { return 0.1; }};
  m.growth = {0.0, 0.0, 0.02, 0.01, 0.25, 0.1, 0.01, 0.005, 0.05, 0.005};
  return m;
}

/// u(t) for constant q: the closed-form certainty integrand with k = gamma
/// q / (1 - gamma), so the optimal consumption fraction is 1/u.
double u_of_t(double q, double gamma, double horizon, double t) {
  const double k = gamma * q / (1.0 - gamma);
  const double tau = horizon - t;
  return (k == 0.0) ? 1.0 + tau : std::exp(k * tau) + std::expm1(k * tau) / k;
}

const SolveResult& solved_bns() {
  static const SolveResult res = [] {
    const ModelPreset p = bns_example();
    return solve(p.market, p.ou, SolverGrid{2000, 200, 1.0, 2.0, 0.0, 32});
  }();
  return res;
}

}  // namespace

TEST_CASE("log-rule consumption fraction is deterministic in time") {
  const ModelPreset p = bns_example();
  Rng rng = make_stream(1, 0);
  const auto incr = sample_increments(rng, 400, 1.0 / 400);
  const FactorPath two_jumps = make_path(p.ou, 0.0, 1.0, {{0.05, 0.12}, {0.65, 0.07}});
  const FactorPath one_jump = make_path(p.ou, 0.0, 1.0, {{0.3, 0.4}});

  const StrategyPath a = simulate_log(p.market, two_jumps, incr);
  const StrategyPath b = simulate_log(p.market, one_jump, incr);
  REQUIRE(a.n_steps() == 400);
  for (int k = 0; k <= a.n_steps(); ++k) {
    const double t = a.times[k];
    CHECK(std::abs(a.consumption[k] * (2.0 - t) / a.wealth[k] - 1.0) <= 1e-14);
    // The fraction of wealth consumed never looks at the factor.
    CHECK(std::abs(a.consumption[k] / a.wealth[k] - b.consumption[k] / b.wealth[k]) <= 1e-14);
  }
  CHECK(a.consumption[400] == a.wealth[400]);
}

TEST_CASE("bank-only zero-consumption wealth is the bond account") {
  const ModelPreset p = bns_example();
  Rng rng = make_stream(2, 0);
  const auto incr = sample_increments(rng, 250, 1.0 / 250);
  const FactorPath factor = make_path(p.ou, 0.0, 1.0, {{0.05, 0.12}, {0.65, 0.07}});
  const StrategyRule zero = [](double, double) { return 0.0; };

  // The preset's rate is identically zero, so wealth must not move at all.
  const StrategyPath flat = simulate_with_rules(p.market, factor, incr, zero, zero);
  for (double x : flat.wealth) CHECK(x == 1.0);
  for (double c : flat.consumption) CHECK(c == 0.0);
  CHECK(utility_score(flat, p.market.gamma) == 1.0);

  const MarketModel bank = bank_dominant_model();
  const ModelPreset merton = merton_constant();
  const FactorPath decay = make_path(merton.ou, 0.0, 1.0, {});
  const StrategyPath grow = simulate_with_rules(bank, decay, incr, zero, zero);
  CHECK(std::abs(std::log(grow.wealth[250]) - 0.03) <= 1e-12);
  for (int k = 0; k < 250; ++k) CHECK(grow.wealth[k + 1] > grow.wealth[k]);
}

TEST_CASE("deterministic drift integration matches the closed form") {
  const MarketModel model = bank_dominant_model();
  const ModelPreset merton = merton_constant();
  const FactorPath factor = make_path(merton.ou, 0.0, 1.0, {});
  const std::vector<double> incr(2000, 0.0);

  const StrategyRule no_stock = [](double, double) { return 0.0; };
  const StrategyRule rho = [&](double t, double) { return 1.0 / u_of_t(0.03, 0.5, 1.0, t); };
  const StrategyPath path = simulate_with_rules(model, factor, incr, no_stock, rho);

  // Int_0^T 1/u dt = log u(0) - k for constant q, hence
  // log X(T) = r T - (log u(0) - k) with k = gamma q / (1 - gamma).
  const double want_log_x = 0.06 - std::log(u_of_t(0.03, 0.5, 1.0, 0.0));
  CHECK(std::abs(std::log(path.wealth[2000]) - want_log_x) <= 1e-10);
  for (int k = 0; k <= 2000; ++k) {
    const double want_rho = 1.0 / u_of_t(0.03, 0.5, 1.0, path.times[k]);
    CHECK(std::abs(path.consumption[k] / path.wealth[k] - want_rho) <= 1e-14);
  }
}

TEST_CASE("optimal pair read from an exact value surface") {
  const MarketModel model = bank_dominant_model();
  const ModelPreset merton = merton_constant();

  SolverGrid grid{2000, 4, 1.0, 2.0, 0.0, 32};
  ValueSurface surface;
  surface.grid = grid;
  surface.extrap_rate = 0.003;
  surface.values.resize(static_cast<std::size_t>(grid.m_steps + 1) * grid.j_nodes);
  for (int i = 0; i <= grid.m_steps; ++i) {
    const double u = u_of_t(0.03, 0.5, 1.0, grid.t_node(i));
    for (int j = 0; j < grid.j_nodes; ++j) surface.node(i, j) = std::sqrt(u);
  }

  const FactorPath factor = make_path(merton.ou, 0.0, 1.0, {});
  Rng rng = make_stream(3, 0);
  const auto incr = sample_increments(rng, 2000, 1.0 / 2000);
  const StrategyPath path = simulate_power(surface, model, factor, incr);

  for (double pi : path.fraction) CHECK(pi == 0.0);
  const double want_log_x = 0.06 - std::log(u_of_t(0.03, 0.5, 1.0, 0.0));
  CHECK(std::abs(std::log(path.wealth[2000]) - want_log_x) <= 1e-8);
  for (int k = 0; k <= 2000; k += 37) {
    const double want_rho = 1.0 / u_of_t(0.03, 0.5, 1.0, path.times[k]);
    CHECK(std::abs(path.consumption[k] / path.wealth[k] - want_rho) <= 1e-12);
  }
}

TEST_CASE("consumption fraction reacts to factor jumps between nodes") {
  const ModelPreset p = bns_example();
  const ValueSurface& surface = solved_bns().surface;
  const FactorPath factor = make_path(p.ou, 0.0, 1.0, {{0.05, 0.12}, {0.65, 0.07}});
  Rng rng = make_stream(4, 0);
  const auto incr = sample_increments(rng, 2000, 1.0 / 2000);
  const StrategyPath path = simulate_power(surface, p.market, factor, incr);

  std::vector<double> rho(path.times.size());
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = path.consumption[k] / path.wealth[k];
  // Jump times sit exactly on nodes 100 and 1300; the pre-jump evaluation
  // delays the response by one step.
  double elsewhere = 0.0;
  for (std::size_t k = 0; k + 1 < rho.size(); ++k) {
    if (k == 100 || k == 1300) continue;
    elsewhere = std::max(elsewhere, std::abs(rho[k + 1] - rho[k]));
  }
  CHECK(std::abs(rho[101] - rho[100]) >= 5.0 * elsewhere);
  CHECK(std::abs(rho[1301] - rho[1300]) >= 5.0 * elsewhere);
  // Extra volatility makes the agent consume a smaller fraction.
  CHECK(rho[101] < rho[100]);
  CHECK(rho[1301] < rho[1300]);
}

TEST_CASE("rules are evaluated at the pre-jump factor level") {
  const MarketModel model = varying_fraction_model();
  const ModelPreset p = bns_example();
  const FactorPath factor = make_path(p.ou, 0.0, 1.0, {{0.5, 0.3}});

  SolverGrid grid{10, 40, 1.0, 2.0, 0.0, 32};
  ValueSurface surface;
  surface.grid = grid;
  surface.extrap_rate = 0.05;
  surface.values.resize(static_cast<std::size_t>(grid.m_steps + 1) * grid.j_nodes);
  for (int i = 0; i <= grid.m_steps; ++i)
    for (int j = 0; j < grid.j_nodes; ++j) surface.node(i, j) = 1.0 + 0.05 * grid.y_node(j);

  Rng rng = make_stream(5, 0);
  const auto incr = sample_increments(rng, 10, 0.1);
  const StrategyPath path = simulate_power(surface, model, factor, incr);

  for (int k = 0; k <= 10; ++k) {
    const double t = path.times[k];
    const double y_left = factor.left_value(t);
    CHECK(path.fraction[k] == optimal_fraction(model, y_left));
    CHECK(path.factor_level[k] == factor.value(t));
    const double want_rho = std::pow(surface.value_at(t, y_left), -2.0);
    CHECK(std::abs(path.consumption[k] / path.wealth[k] - want_rho) <= 1e-13);
  }
  // Node 5 sits exactly on the jump: the strategy must not see the landing.
  CHECK(path.fraction[5] != optimal_fraction(model, factor.value(0.5)));
  CHECK(path.factor_level[5] != factor.left_value(0.5));
}

TEST_CASE("wealth positivity under an aggressive sampled strategy") {
  const ModelPreset p = bns_example();
  const ValueSurface& surface = solved_bns().surface;
  for (long i = 0; i < 2000; ++i) {
    Rng rng = make_stream(77, static_cast<std::uint64_t>(i));
    const StrategyPath path = simulate_power(surface, p.market, p.ou, 1.0, 100, rng);
    REQUIRE(path.n_steps() == 100);
    for (int k = 0; k <= 100; ++k) {
      REQUIRE(path.wealth[k] > 0.0);
      REQUIRE(path.consumption[k] >= 0.0);
      REQUIRE(path.fraction[k] >= 0.0);
      REQUIRE(path.fraction[k] <= 1.0);
      REQUIRE(path.factor_level[k] > 0.0);
    }
  }
}

TEST_CASE("rule contracts are enforced") {
  const ModelPreset p = bns_example();
  Rng rng = make_stream(6, 0);
  const auto incr = sample_increments(rng, 10, 0.1);
  const FactorPath factor = make_path(p.ou, 0.0, 1.0, {});
  const StrategyRule zero = [](double, double) { return 0.0; };
  const StrategyRule leveraged = [](double, double) { return 1.5; };
  const StrategyRule shorting = [](double, double) { return -0.1; };
  const StrategyRule nan_rule = [](double, double) { return std::nan(""); };
  const StrategyRule refund = [](double, double) { return -1.0; };

  CHECK_THROWS_AS(simulate_with_rules(p.market, factor, incr, leveraged, zero),
                  std::runtime_error);
  CHECK_THROWS_AS(simulate_with_rules(p.market, factor, incr, shorting, zero),
                  std::runtime_error);
  CHECK_THROWS_AS(simulate_with_rules(p.market, factor, incr, nan_rule, zero),
                  std::runtime_error);
  CHECK_THROWS_AS(simulate_with_rules(p.market, factor, incr, zero, refund), std::runtime_error);
  CHECK_THROWS_AS(simulate_with_rules(p.market, factor, incr, zero, zero, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_with_rules(p.market, factor, {}, zero, zero), std::invalid_argument);
  CHECK_THROWS_AS(sample_increments(rng, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(sample_increments(rng, 10, 0.0), std::invalid_argument);

  // A jump far beyond the grid exhausts the extrapolation budget.
  const ValueSurface& surface = solved_bns().surface;
  const FactorPath spike = make_path(p.ou, 0.0, 1.0, {{0.5, 5.0}});
  CHECK_THROWS_AS(simulate_power(surface, p.market, spike, incr), std::runtime_error);
}

TEST_CASE("realized utility on a deterministic path matches the closed form") {
  const MarketModel model = bank_dominant_model();
  const ModelPreset merton = merton_constant();
  const FactorPath factor = make_path(merton.ou, 0.0, 1.0, {});
  const std::vector<double> incr(2000, 0.0);
  // The log rule consumes X/(1+T-t) and invests nothing here (mu < r), so
  // c(t) = e^{r t} / 2 and X(T) = e^{r} / 2 from the variation of constants.
  const StrategyPath path = simulate_log(model, factor, incr);
  const double score = utility_score(path, 0.5);
  const double want = std::sqrt(0.5) * std::expm1(0.015) / 0.015 + std::sqrt(0.5 * std::exp(0.03));
  CHECK(std::abs(score - want) <= 1e-10);
  CHECK_THROWS_AS(utility_score(path, 1.2), std::invalid_argument);
}

TEST_CASE("each perturbation changes exactly its documented ingredient") {
  const ModelPreset p = bns_example();
  const ValueSurface& surface = solved_bns().surface;
  Rng rng = make_stream(7, 0);
  const FactorPath factor = evolve(p.ou, 0.0, 1.0, rng);
  const auto incr = sample_increments(rng, 200, 1.0 / 200);
  const StrategyPath base = simulate_power(surface, p.market, factor, incr);

  const auto all = all_perturbations();
  REQUIRE(all.size() == 8);

  const auto rho_of = [](const StrategyPath& path, int k) {
    return path.consumption[k] / path.wealth[k];
  };

  const StrategyPath down =
      simulate_perturbed(surface, p.market, factor, incr, Perturbation::ScaleConsumptionDown);
  const StrategyPath up =
      simulate_perturbed(surface, p.market, factor, incr, Perturbation::ScaleConsumptionUp);
  const StrategyPath shift =
      simulate_perturbed(surface, p.market, factor, incr, Perturbation::ShiftFractionDown);
  const StrategyPath half =
      simulate_perturbed(surface, p.market, factor, incr, Perturbation::HalveFraction);
  const StrategyPath frozen =
      simulate_perturbed(surface, p.market, factor, incr, Perturbation::FreezeConsumptionAtStart);
  const StrategyPath fasting =
      simulate_perturbed(surface, p.market, factor, incr, Perturbation::ZeroConsumption);
  const StrategyPath bank =
      simulate_perturbed(surface, p.market, factor, incr, Perturbation::AllBank);
  const StrategyPath log_c =
      simulate_perturbed(surface, p.market, factor, incr, Perturbation::LogRuleConsumption);

  const double rho0 = rho_of(base, 0);
  for (int k = 0; k <= base.n_steps(); ++k) {
    const double t = base.times[k];
    CHECK(std::abs(rho_of(down, k) - 0.8 * rho_of(base, k)) <= 1e-13);
    CHECK(down.fraction[k] == base.fraction[k]);
    CHECK(std::abs(rho_of(up, k) - 1.25 * rho_of(base, k)) <= 1e-13);
    CHECK(shift.fraction[k] == std::max(base.fraction[k] - 0.2, 0.0));
    CHECK(std::abs(rho_of(shift, k) - rho_of(base, k)) <= 1e-13);
    CHECK(half.fraction[k] == 0.5 * base.fraction[k]);
    CHECK(std::abs(rho_of(frozen, k) - rho0) <= 1e-13);
    CHECK(fasting.consumption[k] == 0.0);
    CHECK(bank.fraction[k] == 0.0);
    CHECK(std::abs(rho_of(log_c, k) - 1.0 / (2.0 - t)) <= 1e-13);
  }
}

TEST_CASE("the solved pair dominates every documented perturbation") {
  const ModelPreset p = bns_example();
  const ValueSurface& surface = solved_bns().surface;
  const double gamma = p.market.gamma;
  const auto all = all_perturbations();
  const long n_paths = 2000;
  const int n_steps = 100;

  std::vector<std::vector<double>> diffs(all.size(), std::vector<double>(n_paths));
  for (long i = 0; i < n_paths; ++i) {
    Rng rng = make_stream(99, static_cast<std::uint64_t>(i));
    const FactorPath factor = evolve(p.ou, 0.0, 1.0, rng);
    const auto incr = sample_increments(rng, n_steps, 1.0 / n_steps);
    const double base = utility_score(simulate_power(surface, p.market, factor, incr), gamma);
    for (std::size_t w = 0; w < all.size(); ++w) {
      const StrategyPath path = simulate_perturbed(surface, p.market, factor, incr, all[w]);
      diffs[w][i] = base - utility_score(path, gamma);
    }
  }
  for (std::size_t w = 0; w < all.size(); ++w) {
    const MeanSe ms = mean_se(diffs[w]);
    CHECK(ms.mean >= -3.0 * ms.se);
  }
  // Switching off consumption or the stock forfeits a visible share of the
  // objective, not just noise.
  const MeanSe no_c = mean_se(diffs[5]);
  const MeanSe no_stock = mean_se(diffs[6]);
  CHECK(no_c.mean > 3.0 * no_c.se);
  CHECK(no_stock.mean > 3.0 * no_stock.se);
}

TEST_CASE("sampled simulators draw reproducible paths") {
  const ModelPreset p = bns_example();
  const ValueSurface& surface = solved_bns().surface;

  Rng r1 = make_stream(8, 0);
  Rng r2 = make_stream(8, 0);
  const StrategyPath a = simulate_power(surface, p.market, p.ou, 1.0, 50, r1);
  const StrategyPath b = simulate_power(surface, p.market, p.ou, 1.0, 50, r2);
  REQUIRE(a.n_steps() == 50);
  CHECK(a.times.front() == 0.0);
  CHECK(a.times.back() == 1.0);
  CHECK(a.wealth == b.wealth);
  CHECK(a.brownian == b.brownian);
  CHECK(a.jumps.size() == b.jumps.size());

  Rng r3 = make_stream(8, 1);
  const StrategyPath c = simulate_power(surface, p.market, p.ou, 1.0, 50, r3);
  CHECK(a.wealth != c.wealth);

  Rng r4 = make_stream(8, 0);
  const StrategyPath d = simulate_log(p.market, p.ou, 1.0, 50, r4);
  REQUIRE(d.n_steps() == 50);
  CHECK(d.jumps.size() == a.jumps.size());
}
