#include "ouvol/strategy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace ouvol {

namespace {

double power_fraction_rule(const MarketModel& model, double y) {
  return optimal_fraction(model, y);
}

double surface_consumption_rule(const ValueSurface& surface, double gamma, double t, double y) {
  return std::pow(surface.value_at(t, y), -1.0 / (1.0 - gamma));
}

double log_fraction_rule(const MarketModel& model, double y) {
  const double excess = model.mu.value(y) - model.r.value(y);
  if (excess <= 0.0) return 0.0;
  const double s2 = model.sigma2.value(y);
  if (s2 <= 0.0) return 1.0;
  return std::min(1.0, excess / s2);
}

void check_surface_budget(const ValueSurface& surface, const FactorPath& factor) {
  double peak = factor.y0;
  for (const JumpEvent& j : factor.jumps) peak = std::max(peak, factor.value(j.time));
  if (peak > 2.0 * surface.grid.y_max) {
    throw std::runtime_error("surface range exceeded beyond extrapolation budget");
  }
}

}  // namespace

std::vector<double> sample_increments(Rng& rng, int n_steps, double dt) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  std::vector<double> out(n_steps);
  const double scale = std::sqrt(dt);
  for (double& w : out) w = scale * sample_normal(rng);
  return out;
}

StrategyPath simulate_with_rules(const MarketModel& model, const FactorPath& factor,
                                 std::span<const double> increments,
                                 const StrategyRule& fraction_rule,
                                 const StrategyRule& consumption_rule, double x0) {
  validate(model);
  if (!(x0 > 0.0)) throw std::invalid_argument("initial wealth must be positive");
  const int n = static_cast<int>(increments.size());
  if (n < 1) throw std::invalid_argument("at least one step is required");
  const double span = factor.t_end - factor.t_start;
  if (!(span > 0.0)) throw std::invalid_argument("factor path window must have positive length");
  const double dt = span / n;

  auto checked_pi = [&](double t, double y) {
    const double pi = fraction_rule(t, y);
    if (!(pi >= 0.0 && pi <= 1.0)) {
      throw std::runtime_error("fraction rule left [0,1]");
    }
    return pi;
  };
  auto checked_rho = [&](double t, double y) {
    const double rho = consumption_rule(t, y);
    if (!(rho >= 0.0)) throw std::runtime_error("consumption rule went negative");
    return rho;
  };
  // Drift of log X at (s, y): pi (mu - r) + r - c/X - pi^2 sigma^2 / 2.
  auto drift = [&](double s, double y) {
    const double pi = checked_pi(s, y);
    const double r = model.r.value(y);
    const double mu = model.mu.value(y);
    const double s2 = model.sigma2.value(y);
    return pi * (mu - r) + r - checked_rho(s, y) - 0.5 * pi * pi * s2;
  };

  StrategyPath path;
  path.jumps = factor.jumps;
  path.brownian.assign(increments.begin(), increments.end());
  path.times.resize(n + 1);
  path.factor_level.resize(n + 1);
  path.wealth.resize(n + 1);
  path.consumption.resize(n + 1);
  path.fraction.resize(n + 1);

  double log_x = std::log(x0);
  std::size_t next_jump = 0;
  for (int k = 0; k <= n; ++k) {
    const double t = (k == n) ? factor.t_end : factor.t_start + k * dt;
    const double y_left = factor.left_value(t);
    const double pi = checked_pi(t, y_left);
    const double rho = checked_rho(t, y_left);
    const double x = std::exp(log_x);
    path.times[k] = t;
    path.factor_level[k] = factor.value(t);
    path.wealth[k] = x;
    path.consumption[k] = rho * x;
    path.fraction[k] = pi;
    if (k == n) break;

    const double t_next = (k + 1 == n) ? factor.t_end : factor.t_start + (k + 1) * dt;
    // ds-integral: Simpson on each inter-jump piece of the step.
    double piece_lo = t;
    double drift_sum = 0.0;
    while (true) {
      double piece_hi = t_next;
      while (next_jump < factor.jumps.size() && factor.jumps[next_jump].time <= piece_lo) {
        ++next_jump;
      }
      if (next_jump < factor.jumps.size() && factor.jumps[next_jump].time < t_next) {
        piece_hi = factor.jumps[next_jump].time;
      }
      const double h = piece_hi - piece_lo;
      if (h > 0.0) {
        const double mid = 0.5 * (piece_lo + piece_hi);
        drift_sum += h / 6.0 *
                     (drift(piece_lo, factor.value(piece_lo)) +
                      4.0 * drift(mid, factor.value(mid)) +
                      drift(piece_hi, factor.left_value(piece_hi)));
      }
      if (piece_hi >= t_next) break;
      piece_lo = piece_hi;
    }
    log_x += drift_sum + pi * std::sqrt(model.sigma2.value(y_left)) * increments[k];
  }
  return path;
}

StrategyPath simulate_power(const ValueSurface& surface, const MarketModel& model,
                            const FactorPath& factor, std::span<const double> increments,
                            double x0) {
  check_surface_budget(surface, factor);
  const double gamma = model.gamma;
  StrategyRule pi_rule = [&model](double, double y) { return power_fraction_rule(model, y); };
  StrategyRule rho_rule = [&surface, gamma](double t, double y) {
    return surface_consumption_rule(surface, gamma, t, y);
  };
  return simulate_with_rules(model, factor, increments, pi_rule, rho_rule, x0);
}

StrategyPath simulate_power(const ValueSurface& surface, const MarketModel& model,
                            const OuParams& ou, double horizon, int n_steps, Rng& rng,
                            double x0) {
  FactorPath factor = evolve(ou, 0.0, horizon, rng);
  std::vector<double> increments = sample_increments(rng, n_steps, horizon / n_steps);
  return simulate_power(surface, model, factor, increments, x0);
}

StrategyPath simulate_log(const MarketModel& model, const FactorPath& factor,
                          std::span<const double> increments, double x0) {
  const double horizon = model.horizon;
  StrategyRule pi_rule = [&model](double, double y) { return log_fraction_rule(model, y); };
  StrategyRule rho_rule = [horizon](double t, double) { return 1.0 / (1.0 + horizon - t); };
  return simulate_with_rules(model, factor, increments, pi_rule, rho_rule, x0);
}

StrategyPath simulate_log(const MarketModel& model, const OuParams& ou, double horizon,
                          int n_steps, Rng& rng, double x0) {
  FactorPath factor = evolve(ou, 0.0, horizon, rng);
  std::vector<double> increments = sample_increments(rng, n_steps, horizon / n_steps);
  return simulate_log(model, factor, increments, x0);
}

double utility_score(const StrategyPath& path, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  const int n = path.n_steps();
  double integral = 0.0;
  int k = 0;
  // Simpson over step pairs; a trailing odd step falls back to trapezoid.
  for (; k + 2 <= n; k += 2) {
    const double h = path.times[k + 1] - path.times[k];
    integral += h / 3.0 *
                (std::pow(path.consumption[k], gamma) +
                 4.0 * std::pow(path.consumption[k + 1], gamma) +
                 std::pow(path.consumption[k + 2], gamma));
  }
  if (k < n) {
    const double h = path.times[k + 1] - path.times[k];
    integral += 0.5 * h *
                (std::pow(path.consumption[k], gamma) +
                 std::pow(path.consumption[k + 1], gamma));
  }
  return integral + std::pow(path.wealth[n], gamma);
}

std::span<const Perturbation> all_perturbations() {
  static constexpr std::array<Perturbation, 8> kAll = {
      Perturbation::ScaleConsumptionDown,     Perturbation::ScaleConsumptionUp,
      Perturbation::ShiftFractionDown,        Perturbation::HalveFraction,
      Perturbation::FreezeConsumptionAtStart, Perturbation::ZeroConsumption,
      Perturbation::AllBank,                  Perturbation::LogRuleConsumption,
  };
  return kAll;
}

StrategyPath simulate_perturbed(const ValueSurface& surface, const MarketModel& model,
                                const FactorPath& factor, std::span<const double> increments,
                                Perturbation which, double x0) {
  check_surface_budget(surface, factor);
  const double gamma = model.gamma;
  const double horizon = model.horizon;
  StrategyRule pi_rule = [&model](double, double y) { return power_fraction_rule(model, y); };
  StrategyRule rho_rule = [&surface, gamma](double t, double y) {
    return surface_consumption_rule(surface, gamma, t, y);
  };
  switch (which) {
    case Perturbation::ScaleConsumptionDown:
      rho_rule = [&surface, gamma](double t, double y) {
        return 0.8 * surface_consumption_rule(surface, gamma, t, y);
      };
      break;
    case Perturbation::ScaleConsumptionUp:
      rho_rule = [&surface, gamma](double t, double y) {
        return 1.25 * surface_consumption_rule(surface, gamma, t, y);
      };
      break;
    case Perturbation::ShiftFractionDown:
      pi_rule = [&model](double, double y) {
        return std::max(0.0, power_fraction_rule(model, y) - 0.2);
      };
      break;
    case Perturbation::HalveFraction:
      pi_rule = [&model](double, double y) { return 0.5 * power_fraction_rule(model, y); };
      break;
    case Perturbation::FreezeConsumptionAtStart: {
      const double rho0 =
          surface_consumption_rule(surface, gamma, factor.t_start, factor.y0);
      rho_rule = [rho0](double, double) { return rho0; };
      break;
    }
    case Perturbation::ZeroConsumption:
      rho_rule = [](double, double) { return 0.0; };
      break;
    case Perturbation::AllBank:
      pi_rule = [](double, double) { return 0.0; };
      break;
    case Perturbation::LogRuleConsumption:
      rho_rule = [horizon](double t, double) { return 1.0 / (1.0 + horizon - t); };
      break;
  }
  return simulate_with_rules(model, factor, increments, pi_rule, rho_rule, x0);
}

}  // namespace ouvol
