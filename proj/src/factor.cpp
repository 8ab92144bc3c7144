#include "ouvol/factor.hpp"

#include <cmath>
#include <stdexcept>

namespace ouvol {

namespace {

// Window membership slack; absolute times here are O(1).
constexpr double kEdgeTol = 1e-12;

// integral of e^{-lambda s} over [0, len]; exact limit at lambda = 0.
double decay_integral(double lambda, double len) {
  if (lambda == 0.0) return len;
  return -std::expm1(-lambda * len) / lambda;
}

}  // namespace

void validate(const OuParams& params) {
  if (!(params.lambda > 0.0)) throw std::invalid_argument("ou.lambda must be positive");
  if (!(params.y0 > 0.0)) throw std::invalid_argument("ou.y0 must be positive");
  validate(params.subordinator);
}

double FactorPath::value(double u) const {
  double v = y0 * std::exp(-lambda * (u - t_start));
  for (const auto& j : jumps) {
    if (j.time > u) break;
    v += j.size * std::exp(-lambda * (u - j.time));
  }
  return v;
}

double FactorPath::left_value(double u) const {
  double v = y0 * std::exp(-lambda * (u - t_start));
  for (const auto& j : jumps) {
    if (j.time >= u) break;
    v += j.size * std::exp(-lambda * (u - j.time));
  }
  return v;
}

FactorPath make_path(const OuParams& params, double t_start, double t_end,
                     std::vector<JumpEvent> jumps) {
  if (t_end < t_start) throw std::invalid_argument("factor path: t_end precedes t_start");
  double prev = t_start;
  for (const auto& j : jumps) {
    if (j.time <= prev)
      throw std::invalid_argument("factor path: jump times must be strictly increasing in (t_start, t_end]");
    if (j.time > t_end + kEdgeTol)
      throw std::invalid_argument("factor path: jump time beyond t_end");
    if (!(j.size > 0.0)) throw std::invalid_argument("factor path: jump sizes must be positive");
    prev = j.time;
  }
  FactorPath path;
  path.t_start = t_start;
  path.t_end = t_end;
  path.y0 = params.y0;
  path.lambda = params.lambda;
  path.jumps = std::move(jumps);
  return path;
}

FactorPath evolve(const OuParams& params, double t_start, double t_end, Rng& rng) {
  validate(params);
  if (t_end < t_start) throw std::invalid_argument("evolve: t_end precedes t_start");
  FactorPath path;
  path.t_start = t_start;
  path.t_end = t_end;
  path.y0 = params.y0;
  path.lambda = params.lambda;
  path.jumps = sample_jumps(params.subordinator, t_start, t_end, params.lambda, rng);
  return path;
}

double integrated_level(const FactorPath& path, double a, double b) {
  if (a < path.t_start - kEdgeTol || b > path.t_end + kEdgeTol || b < a)
    throw std::invalid_argument("integrated_level: [a,b] outside the path window");
  if (b == a) return 0.0;
  double total = 0.0;
  double piece_start = a;
  double level = path.value(a);
  for (const auto& j : path.jumps) {
    if (j.time <= a || j.time >= b) continue;
    const double len = j.time - piece_start;
    total += level * decay_integral(path.lambda, len);
    level = level * std::exp(-path.lambda * len) + j.size;
    piece_start = j.time;
  }
  total += level * decay_integral(path.lambda, b - piece_start);
  return total;
}

double integrated_q(const FactorPath& path, const std::function<double(double)>& q_of_y,
                    double a, double b, double substep) {
  if (a < path.t_start - kEdgeTol || b > path.t_end + kEdgeTol || b < a)
    throw std::invalid_argument("integrated_q: [a,b] outside the path window");
  if (!(substep > 0.0)) throw std::invalid_argument("integrated_q: substep must be positive");
  if (b == a) return 0.0;

  double total = 0.0;
  double piece_start = a;
  double level = path.value(a);

  auto piece = [&](double p, double q, double lvl) {
    const double len = q - p;
    if (len <= 0.0) return 0.0;
    int n = static_cast<int>(std::ceil(len / substep));
    if (n < 2) n = 2;
    if (n % 2 != 0) ++n;
    const double h = len / n;
    double acc = q_of_y(lvl) + q_of_y(lvl * std::exp(-path.lambda * len));
    for (int i = 1; i < n; ++i) {
      const double w = (i % 2 != 0) ? 4.0 : 2.0;
      acc += w * q_of_y(lvl * std::exp(-path.lambda * (i * h)));
    }
    return h / 3.0 * acc;
  };

  for (const auto& j : path.jumps) {
    if (j.time <= a || j.time >= b) continue;
    total += piece(piece_start, j.time, level);
    level = level * std::exp(-path.lambda * (j.time - piece_start)) + j.size;
    piece_start = j.time;
  }
  total += piece(piece_start, b, level);
  return total;
}

}  // namespace ouvol
