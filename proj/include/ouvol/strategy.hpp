#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ouvol/market.hpp"
#include "ouvol/pide.hpp"
#include "ouvol/rng.hpp"

namespace ouvol {

/**
 * One simulated wealth path under a feedback strategy.  Nodes sit on a
 * uniform grid over the factor path's window; fraction and consumption at a
 * node are computed from (t, Y(t-)), the pre-jump factor level, so the
 * strategy never peeks at a jump landing exactly on the node.
 */
struct StrategyPath {
  std::vector<double> times;
  std::vector<double> factor_level;  // Y(t), post-jump
  std::vector<double> wealth;        // X(t) > 0
  std::vector<double> consumption;   // rate c(t) = (c/X)(t) X(t) >= 0
  std::vector<double> fraction;      // pi(t) in [0,1]
  std::vector<double> brownian;      // dW increments, one per step
  std::vector<JumpEvent> jumps;      // the factor path's jump list

  int n_steps() const { return static_cast<int>(brownian.size()); }
};

/// Feedback rule evaluated at (t, Y(t-)).
using StrategyRule = std::function<double(double, double)>;

/// Gaussian increments with variance dt, one per step.
std::vector<double> sample_increments(Rng& rng, int n_steps, double dt);

/**
 * Core simulator: wealth follows the exact exponential representation
 *
 *   log X(t) = log x0 + Int_0^t [pi (mu - r) + r - c/X - pi^2 sigma^2 / 2] ds
 *              + Int_0^t pi sigma dW,
 *
 * with the ds-integral by Simpson on inter-jump pieces of each step and the
 * dW-integral with left-point (Ito) coefficients.  Positivity of X is
 * structural.  Throws when a rule leaves [0,1] (fraction) or [0,inf)
 * (consumption fraction).
 */
StrategyPath simulate_with_rules(const MarketModel& model, const FactorPath& factor,
                                 std::span<const double> increments,
                                 const StrategyRule& fraction_rule,
                                 const StrategyRule& consumption_rule, double x0 = 1.0);

/// Optimal power-utility pair: pi = optimal_fraction(Y(t-)) and
/// c/X = f(t, Y(t-))^{-1/(1-gamma)} from the solved surface.  Replay variant
/// over a fixed factor path and fixed Brownian increments.
StrategyPath simulate_power(const ValueSurface& surface, const MarketModel& model,
                            const FactorPath& factor, std::span<const double> increments,
                            double x0 = 1.0);

/// Sampling variant: draws the factor path on [0, horizon] and then the
/// increments from one stream.
StrategyPath simulate_power(const ValueSurface& surface, const MarketModel& model,
                            const OuParams& ou, double horizon, int n_steps, Rng& rng,
                            double x0 = 1.0);

/// Logarithmic utility: pi maximizes pi (mu - r) - pi^2 sigma^2 / 2 over
/// [0,1]; the consumption fraction is the deterministic 1/(1 + T - t),
/// independent of the market coefficients.
StrategyPath simulate_log(const MarketModel& model, const FactorPath& factor,
                          std::span<const double> increments, double x0 = 1.0);

StrategyPath simulate_log(const MarketModel& model, const OuParams& ou, double horizon,
                          int n_steps, Rng& rng, double x0 = 1.0);

/// Realized objective Int_0^T c(s)^gamma ds + X(T)^gamma, Simpson on the
/// path grid.
double utility_score(const StrategyPath& path, double gamma);

/**
 * The eight documented strategy perturbations for the paired optimality
 * probe.  Each modifies exactly one ingredient of the optimal pair and is
 * replayed on the same factor path and Brownian increments.
 */
enum class Perturbation {
  ScaleConsumptionDown,      // c/X scaled by 0.8
  ScaleConsumptionUp,        // c/X scaled by 1.25
  ShiftFractionDown,         // pi replaced by max(pi - 0.2, 0)
  HalveFraction,             // pi replaced by pi / 2
  FreezeConsumptionAtStart,  // c/X held at its initial value
  ZeroConsumption,           // c = 0 throughout
  AllBank,                   // pi = 0 throughout
  LogRuleConsumption,        // c/X = 1/(1 + T - t)
};

std::span<const Perturbation> all_perturbations();

StrategyPath simulate_perturbed(const ValueSurface& surface, const MarketModel& model,
                                const FactorPath& factor, std::span<const double> increments,
                                Perturbation which, double x0 = 1.0);

}  // namespace ouvol
