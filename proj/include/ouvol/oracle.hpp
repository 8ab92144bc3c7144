#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ouvol/market.hpp"
#include "ouvol/pide.hpp"

namespace ouvol {

/// Monte Carlo controls shared by the operator estimator and the iteration.
struct McConfig {
  long n_paths = 100000;
  std::uint64_t seed = 1;
  double substep = 0.0;  // <= 0 picks (T - t)/128 per evaluation
  std::vector<std::pair<double, double>> probe_points;
  int max_threads = 8;
};

/// Weights of the weighted-sup metric d(f,g) = sup e^{-alpha (T-t) - b' y} |f-g|.
struct MetricParams {
  double alpha = 0.0;
  double b_prime = 0.0;
};

struct ProbeEstimate {
  double t = 0.0;
  double y = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
};

/**
 * Estimates, at each probe (t,y), the integral operator
 *
 *   (Lf)(t,y) = E[ e^{gamma Int_t^T Q(Y) ds}
 *                  + (1-gamma) Int_t^T e^{gamma Int_t^s Q(Y) du} f(s,Y(s))^{-gamma/(1-gamma)} ds ]
 *
 * by simulating factor paths started at (t,y); the time integrals use
 * composite Simpson on inter-jump pieces.  Requires f >= 1 so the power is
 * bounded by 1.  Stream k of probe p is hash(seed, p), path i inside it.
 */
std::vector<ProbeEstimate> apply_operator(const ValueSurface& f, const MarketModel& model,
                                          const OuParams& ou, const McConfig& cfg);

struct IterationReport {
  std::vector<ValueSurface> iterates;  // L f0, L^2 f0, ...
  std::vector<double> distances;       // d(f_{k+1}, f_k), first entry d(f_1, f_0)
};

/**
 * Picard iteration f_{k+1} = L f_k evaluated on f0's own lattice with the
 * surface rebuilt by interpolation between iterations.  Common random
 * numbers: every iteration reuses the stream of its lattice node, so the
 * reported distances contract with the operator's modulus instead of being
 * floored by fresh sampling noise.  The terminal row stays exactly 1.
 */
IterationReport fixed_point_iterate(const ValueSurface& f0, const MarketModel& model,
                                    const OuParams& ou, const McConfig& cfg, int n_iter);

/// Max over shared grid nodes of e^{-alpha (T-t) - b' y} |f - g|; rejects
/// surfaces on different grids.
double metric_distance(const ValueSurface& f, const ValueSurface& g, const MetricParams& params);

/// Random surface inside the admissible band: node values are uniform draws
/// from [1, envelope(t,y)] with the terminal row pinned to 1.  Input for the
/// contraction probes.
ValueSurface random_band_surface(const SolverGrid& grid, const DerivedConstants& dc, Rng& rng);

/// Constant-Q solution of f' + gamma q f + (1-gamma) f^{-gamma/(1-gamma)} = 0,
/// f(T) = 1: f(t) = u(t)^{1-gamma}, u(t) = (1+1/k)e^{k(T-t)} - 1/k with
/// k = gamma q / (1-gamma); the k = 0 limit is u = 1 + (T-t).
double merton_closed_form(double q, double gamma, double horizon, double t);

/**
 * For each path, the value f_bar(t,omega) of the deterministic-coefficient
 * problem along that realized path: the random terminal-value ODE
 * f' + gamma Q(Y(s,omega)) f + (1-gamma) f^{-gamma/(1-gamma)} = 0, f(T)=1,
 * solved through the substitution u = f^{1/(1-gamma)} (linear in u) with the
 * Q-integrals by piecewise Simpson.  substep <= 0 picks (span)/128.
 */
std::vector<double> pathwise_certainty(const std::vector<FactorPath>& paths,
                                       const MarketModel& model, double substep = 0.0);

struct JensenGapConfig {
  long n_paths = 100000;
  long n_inner = 20000;  // per node of the curvature lattice
  std::uint64_t seed = 1;
  double substep = 0.0;  // <= 0 picks (T-t)/64 here
  int lattice_t = 13;    // curvature lattice resolution in t
  int lattice_y = 17;    // and in y
  int max_threads = 8;
};

struct JensenGapReport {
  double mean_certainty = 0.0;  // estimate of h(t,y) = E[f_bar(t, .)]
  double se_certainty = 0.0;
  double operator_mean = 0.0;  // estimate of (L h)(t,y)
  double gap = 0.0;            // h - L h, >= 0, = 0 iff the factor is deterministic
  double gap_se = 0.0;
};

/**
 * Estimates the gap h(t,y) - (L h)(t,y) for h(s,y') = E[f_bar(s, .)] started
 * at (s,y').  The pathwise integral form of f_bar plus the restart property
 * of the factor turn the gap into
 *
 *   (1-gamma) Int_t^T E[ e^{gamma Int_t^s Q} g(s, Y_s) ] ds,
 *   g(s,v) = E[f_bar^{-gamma/(1-gamma)} | restart (s,v)] - h(s,v)^{-gamma/(1-gamma)},
 *
 * where g >= 0 is the pointwise curvature of the power.  g is estimated on
 * a lattice, one inner sample per node (the linear sampling error cancels
 * between the two means, so each node resolves its tiny positive value),
 * and outer paths integrate the interpolated field.  gap_se combines the
 * outer spread with a fully-correlated bound on the lattice uncertainty.
 * A deterministic factor has g = 0 and reports a gap of exactly zero.
 */
JensenGapReport jensen_gap(const MarketModel& model, const OuParams& ou, double t, double y,
                           const JensenGapConfig& cfg);

}  // namespace ouvol
