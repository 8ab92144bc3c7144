#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ouvol/factor.hpp"
#include "ouvol/levy.hpp"

namespace ouvol {

/// Coefficient of the price dynamics as a function of the factor level,
/// together with its derivative in y.
struct CoeffFn {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

/// Linear growth bounds supplied with the model and validated by sampling:
///   r <= A_r + B_r y,  mu <= A_mu + B_mu y,  sigma2 <= A_sigma + B_sigma y,
///   Q <= A + B y,      |dQ/dy| <= C + D y.
struct GrowthConstants {
  double A_r = 0.0, B_r = 0.0;
  double A_mu = 0.0, B_mu = 0.0;
  double A_sigma = 0.0, B_sigma = 0.0;
  double A = 0.0, B = 0.0;
  double C = 0.0, D = 0.0;
};

/**
 * Power-utility market: bank rate r(y), stock drift mu(y), squared
 * volatility sigma2(y), risk-aversion exponent gamma in (0,1), horizon T.
 */
struct MarketModel {
  CoeffFn r;
  CoeffFn mu;
  CoeffFn sigma2;
  double gamma = 0.5;
  double horizon = 1.0;
  GrowthConstants growth;
};

/// Throws std::invalid_argument when gamma or T is out of range or a
/// coefficient callable is missing.
void validate(const MarketModel& model);

/// Sign of the excess return relative to the no-shorting / no-leverage caps.
/// D1: mu - r < 0 (all in the bank).  D2: 0 < mu - r < (1-gamma) sigma2
/// (interior fraction).  D3: mu - r >= (1-gamma) sigma2 (all in the stock).
enum class Regime { D1, D2, D3, Boundary12, Boundary23 };

Regime classify_regime(const MarketModel& model, double y);

/// Optimal stock fraction pi(y) in [0, 1] under the constraint set.
double optimal_fraction(const MarketModel& model, double y);

/// Hamiltonian value Q(y): r on D1, (mu-r)^2 / (2 (1-gamma) sigma2) + r on D2,
/// mu - (1-gamma) sigma2 / 2 on D3.  Boundary points use the D2 branch where
/// well defined (the branches agree there).
double q_value(const MarketModel& model, double y);

/// dQ/dy by branch; the D2 branch is written with d(sigma2)/dy.  Continuous
/// across the regime boundaries.
double q_derivative(const MarketModel& model, double y);

/**
 * Constants derived from the growth bounds that control the solution theory:
 * exponential envelope rates, the comparison-ODE constant a, and the metric
 * weight alpha.  A zero Q-growth slope B is floored at 1e-3 so the envelope
 * rate stays positive; a vanishing derivative bound is floored at 1e-6.
 */
struct DerivedConstants {
  double b_prime = 0.0;        // gamma B / lambda
  double a_prime = 0.0;        // gamma A + lambda psi(b_prime)
  double b_dprime = 0.0;       // b_prime (1 + gamma/4)
  double a_dprime = 0.0;       // gamma A + lambda psi(b_dprime)
  double b_prime_sigma = 0.0;  // gamma B_sigma / lambda
  double ode_a = 0.0;          // (1/lambda)(1 + (1-gamma)/a_dprime) max(4D/b_prime, C gamma)
  double alpha = 0.0;          // a_prime + gamma + alpha_margin
  double gamma = 0.0;          // copies for downstream evaluators
  double lambda = 0.0;
  double horizon = 0.0;
  ConditionB condition_b;
};

DerivedConstants derive_constants(const MarketModel& model, const OuParams& ou,
                                  double alpha_margin = 1.0, double condition_b_eps = 0.1);

/// Upper envelope (1 + (1-gamma)/A') e^{A'(T-t) + B' y}; the solution lives
/// in [1, envelope].
double envelope_upper(const DerivedConstants& dc, double t, double y);

/// Solution of phi' + (gamma - lambda) phi + lambda a = 0, phi(T) = a; bounds
/// the y-derivative of the value surface together with e^{A''(T-t) + B'' y}.
double phi_bound(const DerivedConstants& dc, double t);

struct GrowthViolation {
  std::string what;
  double y = 0.0;
};

/// Samples n points on (0, y_hi] and checks every growth bound plus the
/// positivity requirements on the coefficients.  Empty result means valid.
std::vector<GrowthViolation> validate_growth(const MarketModel& model, double y_hi, int n);

/// Model plus factor dynamics bundled for the command line and tests.
struct ModelPreset {
  std::string name;
  MarketModel market;
  OuParams ou;
};

/// Affine stochastic-volatility market: T=1, gamma=0.75, lambda=1/6, r=0,
/// mu = 0.1 + 0.5 y, sigma2 = y, compound Poisson jumps c=0.5, eta=15,
/// Y(0)=0.2.  All of (0,inf) sits in regime D3, Q(y) = 0.1 + 0.375 y.
ModelPreset bns_example();

/// Constant-coefficient check case: r=0, mu=0.1, sigma2=0.25, gamma=0.5, T=1,
/// Null subordinator.  Q = 0.04, pi = 0.8 (regime D2); the value function has
/// a closed form.
ModelPreset merton_constant();

/// Convenience wrapper over factor::integrated_q using this model's Q.
double integrated_q(const FactorPath& path, const MarketModel& model, double a, double b,
                    double substep);

}  // namespace ouvol
