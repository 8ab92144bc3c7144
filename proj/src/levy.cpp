#include "ouvol/levy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ouvol {

void validate(const SubordinatorSpec& spec) {
  if (spec.family == SubordinatorFamily::Null) return;
  if (spec.intensity < 0.0)
    throw std::invalid_argument("subordinator.intensity must be nonnegative");
  if (!(spec.jump_rate > 0.0))
    throw std::invalid_argument("subordinator.jump_rate must be positive");
}

double laplace_exponent(const SubordinatorSpec& spec, double w) {
  if (spec.family == SubordinatorFamily::Null) return 0.0;
  if (w >= spec.jump_rate) return std::numeric_limits<double>::infinity();
  return spec.intensity * w / (spec.jump_rate - w);
}

double mean_rate(const SubordinatorSpec& spec) {
  if (spec.family == SubordinatorFamily::Null) return 0.0;
  return spec.intensity / spec.jump_rate;
}

double second_moment(const SubordinatorSpec& spec) {
  if (spec.family == SubordinatorFamily::Null) return 0.0;
  return 2.0 * spec.intensity / (spec.jump_rate * spec.jump_rate);
}

ConditionB check_condition_b(const SubordinatorSpec& spec, double gamma,
                             double b_prime, double b_prime_sigma, double eps) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("check_condition_b: gamma must lie in (0,1)");
  if (eps <= 0.0)
    throw std::invalid_argument("check_condition_b: eps must be positive");
  ConditionB out;
  out.w_star = 2.0 * (1.0 + 0.5 * gamma) * std::max(b_prime, b_prime_sigma) + eps;
  out.psi_value = laplace_exponent(spec, out.w_star);
  out.passed = std::isfinite(out.psi_value);
  out.margin = spec.family == SubordinatorFamily::Null
                   ? std::numeric_limits<double>::infinity()
                   : spec.jump_rate - out.w_star;
  return out;
}

std::vector<JumpEvent> sample_jumps(const SubordinatorSpec& spec, double a, double b,
                                    double clock_scale, Rng& rng) {
  if (b < a) throw std::invalid_argument("sample_jumps: window end precedes start");
  if (clock_scale <= 0.0) throw std::invalid_argument("sample_jumps: clock_scale must be positive");
  validate(spec);
  if (spec.family == SubordinatorFamily::Null || spec.intensity == 0.0 || b == a) return {};

  const double mean = spec.intensity * clock_scale * (b - a);
  const std::uint64_t n = sample_poisson(rng, mean);
  std::vector<double> times(n);
  for (auto& t : times) t = b - (b - a) * uniform01(rng);  // lands in (a, b]
  std::sort(times.begin(), times.end());
  std::vector<JumpEvent> jumps(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    jumps[i].time = times[i];
    jumps[i].size = sample_exponential(rng, spec.jump_rate);
  }
  return jumps;
}

}  // namespace ouvol
