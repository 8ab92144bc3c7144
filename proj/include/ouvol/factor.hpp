#pragma once

#include <functional>
#include <vector>

#include "ouvol/levy.hpp"
#include "ouvol/rng.hpp"

namespace ouvol {

/// Mean-reverting factor dY = -lambda Y dt + dL(lambda t), Y(0) = y0 > 0.
struct OuParams {
  double lambda = 1.0;  // reversion speed, > 0
  double y0 = 1.0;      // initial level, > 0
  SubordinatorSpec subordinator;
};

void validate(const OuParams& params);

/**
 * Exact path of the factor on [t_start, t_end]:
 *
 *   Y(u) = y0 e^{-lambda (u - t_start)} + sum_{tau_i <= u} z_i e^{-lambda (u - tau_i)}
 *
 * Jump times are strictly increasing inside (t_start, t_end].  The path is
 * cadlag; left_value gives the pre-jump limit.  lambda = 0 is allowed when a
 * frozen benchmark path is needed (no decay).
 */
struct FactorPath {
  double t_start = 0.0;
  double t_end = 0.0;
  double y0 = 0.0;
  double lambda = 0.0;
  std::vector<JumpEvent> jumps;

  double value(double u) const;       // Y(u), jumps at u included
  double left_value(double u) const;  // Y(u-), jumps at u excluded
};

/// Builds a path from an explicit jump list (scenario injection); validates
/// ordering, window membership and positivity of sizes.
FactorPath make_path(const OuParams& params, double t_start, double t_end,
                     std::vector<JumpEvent> jumps);

/// Samples the jumps of L(lambda * u) on (t_start, t_end] and assembles the path.
FactorPath evolve(const OuParams& params, double t_start, double t_end, Rng& rng);

/// Closed-form integral of Y over [a, b] (piecewise exponential between jumps).
double integrated_level(const FactorPath& path, double a, double b);

/// Integral of q(Y(u)) over [a, b]: composite Simpson on each inter-jump
/// piece with step at most substep (Y is smooth there).
double integrated_q(const FactorPath& path, const std::function<double(double)>& q_of_y,
                    double a, double b, double substep);

}  // namespace ouvol
