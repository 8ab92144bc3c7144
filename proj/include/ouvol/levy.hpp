#pragma once

#include <vector>

#include "ouvol/rng.hpp"

namespace ouvol {

enum class SubordinatorFamily {
  CompoundPoissonExp,  // intensity c, Exp(eta) jump sizes
  Null,                // no jumps; Laplace exponent identically zero
};

/**
 * Driving subordinator of the volatility factor.  The compound Poisson
 * family has Levy measure nu(dz) = c * eta * exp(-eta z) dz on (0, inf),
 * so psi(w) = c w / (eta - w) for w < eta and +inf otherwise.
 */
struct SubordinatorSpec {
  SubordinatorFamily family = SubordinatorFamily::CompoundPoissonExp;
  double intensity = 0.0;   // c >= 0, jumps per unit of subordinator time
  double jump_rate = 1.0;   // eta > 0, jump sizes are Exp(eta)
};

void validate(const SubordinatorSpec& spec);

/// psi(w) = integral of (e^{wz} - 1) nu(dz).  Returns +inf where the
/// integral diverges (w >= eta); psi(0) = 0, nondecreasing and convex.
double laplace_exponent(const SubordinatorSpec& spec, double w);

/// E[L(1)] = psi'(0) = c / eta.
double mean_rate(const SubordinatorSpec& spec);

/// integral of z^2 nu(dz) = 2 c / eta^2; finiteness is the moment condition
/// needed by the logarithmic-utility strategy.
double second_moment(const SubordinatorSpec& spec);

struct JumpEvent {
  double time = 0.0;  // position in the sampling window
  double size = 0.0;  // > 0
};

/**
 * Exponential-moment check for the solution theory: the exponent must stay
 * finite at w* = 2 (1 + gamma/2) max(b_prime, b_prime_sigma) + eps.
 */
struct ConditionB {
  bool passed = false;
  double w_star = 0.0;
  double psi_value = 0.0;  // psi(w*), +inf on failure
  double margin = 0.0;     // eta - w* (how much room is left), +inf for Null
};

ConditionB check_condition_b(const SubordinatorSpec& spec, double gamma,
                             double b_prime, double b_prime_sigma, double eps);

/**
 * Jumps of u -> L(clock_scale * u) on the window (a, b], via the
 * conditional-uniform construction: count ~ Poisson(c * clock_scale * (b-a)),
 * times i.i.d. uniform on (a, b] then sorted, sizes Exp(eta) drawn in time
 * order.  Deterministic for a fixed rng state.
 */
std::vector<JumpEvent> sample_jumps(const SubordinatorSpec& spec, double a, double b,
                                    double clock_scale, Rng& rng);

}  // namespace ouvol
