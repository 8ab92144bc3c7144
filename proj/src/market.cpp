#include "ouvol/market.hpp"

#include <cmath>
#include <stdexcept>

namespace ouvol {

namespace {

constexpr double kBFloor = 1e-3;      // floor for a zero Q-growth slope
constexpr double kDerivFloor = 1e-6;  // floor for a zero derivative bound

double equality_tol(const MarketModel& model, double y) {
  return 1e-12 * (1.0 + std::abs(model.mu.value(y)) + std::abs(model.r.value(y)));
}

void require_positive_level(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("factor level y must be positive");
}

}  // namespace

void validate(const MarketModel& model) {
  if (!(model.gamma > 0.0 && model.gamma < 1.0))
    throw std::invalid_argument("market.gamma must lie in (0,1)");
  if (!(model.horizon > 0.0)) throw std::invalid_argument("market.T must be positive");
  if (!model.r.value || !model.r.deriv || !model.mu.value || !model.mu.deriv ||
      !model.sigma2.value || !model.sigma2.deriv) {
    throw std::invalid_argument("market coefficient callables must all be set");
  }
}

Regime classify_regime(const MarketModel& model, double y) {
  require_positive_level(y);
  const double excess = model.mu.value(y) - model.r.value(y);
  const double tol = equality_tol(model, y);
  if (std::abs(excess) <= tol) return Regime::Boundary12;
  if (excess < 0.0) return Regime::D1;
  const double cap = (1.0 - model.gamma) * model.sigma2.value(y);
  if (std::abs(cap - excess) <= tol) return Regime::Boundary23;
  return cap > excess ? Regime::D2 : Regime::D3;
}

double optimal_fraction(const MarketModel& model, double y) {
  require_positive_level(y);
  switch (classify_regime(model, y)) {
    case Regime::D1:
    case Regime::Boundary12:
      return 0.0;
    case Regime::D2: {
      const double excess = model.mu.value(y) - model.r.value(y);
      return excess / ((1.0 - model.gamma) * model.sigma2.value(y));
    }
    case Regime::D3:
    case Regime::Boundary23:
      return 1.0;
  }
  return 0.0;
}

double q_value(const MarketModel& model, double y) {
  require_positive_level(y);
  const double r = model.r.value(y);
  const double mu = model.mu.value(y);
  const double s2 = model.sigma2.value(y);
  switch (classify_regime(model, y)) {
    case Regime::D1:
      return r;
    case Regime::D2:
      return (mu - r) * (mu - r) / (2.0 * (1.0 - model.gamma) * s2) + r;
    case Regime::D3:
      return mu - 0.5 * (1.0 - model.gamma) * s2;
    case Regime::Boundary12:
      return s2 > 0.0 ? (mu - r) * (mu - r) / (2.0 * (1.0 - model.gamma) * s2) + r : r;
    case Regime::Boundary23:
      return s2 > 0.0 ? (mu - r) * (mu - r) / (2.0 * (1.0 - model.gamma) * s2) + r
                      : mu - 0.5 * (1.0 - model.gamma) * s2;
  }
  return r;
}

double q_derivative(const MarketModel& model, double y) {
  require_positive_level(y);
  const double rp = model.r.deriv(y);
  const auto d2 = [&] {
    const double r = model.r.value(y);
    const double mu = model.mu.value(y);
    const double s2 = model.sigma2.value(y);
    const double excess = mu - r;
    const double dex = model.mu.deriv(y) - rp;
    const double ds2 = model.sigma2.deriv(y);
    const double g1 = 1.0 - model.gamma;
    return excess * dex / (g1 * s2) - excess * excess * ds2 / (2.0 * g1 * s2 * s2) + rp;
  };
  const auto d3 = [&] {
    return model.mu.deriv(y) - 0.5 * (1.0 - model.gamma) * model.sigma2.deriv(y);
  };
  switch (classify_regime(model, y)) {
    case Regime::D1:
      return rp;
    case Regime::D2:
      return d2();
    case Regime::D3:
      return d3();
    case Regime::Boundary12:
      return model.sigma2.value(y) > 0.0 ? d2() : rp;
    case Regime::Boundary23:
      return model.sigma2.value(y) > 0.0 ? d2() : d3();
  }
  return rp;
}

DerivedConstants derive_constants(const MarketModel& model, const OuParams& ou,
                                  double alpha_margin, double condition_b_eps) {
  validate(model);
  validate(ou);

  DerivedConstants dc;
  dc.gamma = model.gamma;
  dc.lambda = ou.lambda;
  dc.horizon = model.horizon;

  const double b_eff = model.growth.B > 0.0 ? model.growth.B : kBFloor;
  dc.b_prime = model.gamma * b_eff / ou.lambda;
  dc.b_dprime = dc.b_prime * (1.0 + 0.25 * model.gamma);
  dc.b_prime_sigma = model.gamma * model.growth.B_sigma / ou.lambda;

  dc.condition_b = check_condition_b(ou.subordinator, model.gamma, dc.b_prime,
                                     dc.b_prime_sigma, condition_b_eps);
  const double psi_bp = laplace_exponent(ou.subordinator, dc.b_prime);
  const double psi_bpp = laplace_exponent(ou.subordinator, dc.b_dprime);
  if (!dc.condition_b.passed || !std::isfinite(psi_bp) || !std::isfinite(psi_bpp))
    throw std::runtime_error("condition B violated: subordinator lacks the exponential moment");

  dc.a_prime = model.gamma * model.growth.A + ou.lambda * psi_bp;
  dc.a_dprime = model.gamma * model.growth.A + ou.lambda * psi_bpp;
  if (!(dc.a_prime > 0.0) || !(dc.a_dprime > 0.0))
    throw std::runtime_error("derive_constants: growth constant A must make A' positive");

  double deriv_scale = std::max(4.0 * model.growth.D / dc.b_prime, model.growth.C * model.gamma);
  if (deriv_scale <= 0.0) deriv_scale = kDerivFloor;
  dc.ode_a = (1.0 / ou.lambda) * (1.0 + (1.0 - model.gamma) / dc.a_dprime) * deriv_scale;

  if (!(alpha_margin > 0.0)) throw std::invalid_argument("alpha_margin must be positive");
  dc.alpha = dc.a_prime + model.gamma + alpha_margin;
  return dc;
}

double envelope_upper(const DerivedConstants& dc, double t, double y) {
  return (1.0 + (1.0 - dc.gamma) / dc.a_prime) *
         std::exp(dc.a_prime * (dc.horizon - t) + dc.b_prime * y);
}

double phi_bound(const DerivedConstants& dc, double t) {
  // phi(t) = a e^{x} + lambda a (T-t) expm1(x)/x with x = (gamma-lambda)(T-t);
  // the expm1 form is exact in the gamma -> lambda limit.
  const double tau = dc.horizon - t;
  const double x = (dc.gamma - dc.lambda) * tau;
  const double em = std::abs(x) < 1e-10 ? 1.0 + 0.5 * x : std::expm1(x) / x;
  return dc.ode_a * std::exp(x) + dc.lambda * dc.ode_a * tau * em;
}

std::vector<GrowthViolation> validate_growth(const MarketModel& model, double y_hi, int n) {
  std::vector<GrowthViolation> out;
  if (!(y_hi > 0.0) || n < 1) throw std::invalid_argument("validate_growth: bad sampling window");
  const auto& g = model.growth;
  for (int i = 1; i <= n; ++i) {
    const double y = y_hi * static_cast<double>(i) / n;
    const double slack = 1e-9 * (1.0 + y);
    const double r = model.r.value(y);
    const double mu = model.mu.value(y);
    const double s2 = model.sigma2.value(y);
    if (r < 0.0) out.push_back({"r negative", y});
    if (mu < 0.0) out.push_back({"mu negative", y});
    if (!(s2 > 0.0)) out.push_back({"sigma2 not positive", y});
    if (r > g.A_r + g.B_r * y + slack) out.push_back({"r exceeds A_r + B_r y", y});
    if (mu > g.A_mu + g.B_mu * y + slack) out.push_back({"mu exceeds A_mu + B_mu y", y});
    if (s2 > g.A_sigma + g.B_sigma * y + slack) out.push_back({"sigma2 exceeds A_sigma + B_sigma y", y});
    if (q_value(model, y) > g.A + g.B * y + slack) out.push_back({"Q exceeds A + B y", y});
    if (std::abs(q_derivative(model, y)) > g.C + g.D * y + slack)
      out.push_back({"|dQ/dy| exceeds C + D y", y});
    if (out.size() > 32) break;  // enough to diagnose
  }
  return out;
}

ModelPreset bns_example() {
  ModelPreset p;
  p.name = "bns-example";
  p.market.r = {[](double) { return 0.0; }, [](double) { return 0.0; }};
  p.market.mu = {[](double y) { return 0.1 + 0.5 * y; }, [](double) { return 0.5; }};
  p.market.sigma2 = {[](double y) { return y; }, [](double) { return 1.0; }};
  p.market.gamma = 0.75;
  p.market.horizon = 1.0;
  p.market.growth = {/*A_r=*/0.0, /*B_r=*/0.0,
                     /*A_mu=*/0.1, /*B_mu=*/0.5,
                     /*A_sigma=*/0.0, /*B_sigma=*/1.0,
                     /*A=*/0.1, /*B=*/0.375,
                     /*C=*/0.375, /*D=*/0.0};
  p.ou.lambda = 1.0 / 6.0;
  p.ou.y0 = 0.2;
  p.ou.subordinator = {SubordinatorFamily::CompoundPoissonExp, 0.5, 15.0};
  return p;
}

ModelPreset merton_constant() {
  ModelPreset p;
  p.name = "merton-constant";
  p.market.r = {[](double) { return 0.0; }, [](double) { return 0.0; }};
  p.market.mu = {[](double) { return 0.1; }, [](double) { return 0.0; }};
  p.market.sigma2 = {[](double) { return 0.25; }, [](double) { return 0.0; }};
  p.market.gamma = 0.5;
  p.market.horizon = 1.0;
  p.market.growth = {/*A_r=*/0.0, /*B_r=*/0.0,
                     /*A_mu=*/0.1, /*B_mu=*/0.0,
                     /*A_sigma=*/0.25, /*B_sigma=*/0.0,
                     /*A=*/0.04, /*B=*/0.0,
                     /*C=*/0.0, /*D=*/0.0};
  p.ou.lambda = 1.0 / 6.0;
  p.ou.y0 = 0.2;
  p.ou.subordinator = {SubordinatorFamily::Null, 0.0, 1.0};
  return p;
}

double integrated_q(const FactorPath& path, const MarketModel& model, double a, double b,
                    double substep) {
  return integrated_q(path, [&model](double y) { return q_value(model, y); }, a, b, substep);
}

}  // namespace ouvol
