#pragma once

#include <span>
#include <vector>

#include "ouvol/market.hpp"

namespace ouvol {

/**
 * Uniform grid for the backward equation
 *
 *   0 = f_t - lambda y f_y + lambda Int (f(t,y+z) - f(t,y)) nu(dz)
 *       + gamma Q(y) f + (1-gamma) f^{-gamma/(1-gamma)},   f(T,y) = 1,
 *
 * on [0,T] x (0, y_max]: time nodes t_i = i T / M, factor nodes
 * y_j = (j+1) y_max / J.  kappa is the exponential scaling rate of the
 * stored unknown g = f e^{-kappa y}; it must exceed b_dprime.
 */
struct SolverGrid {
  int m_steps = 2000;
  int j_nodes = 200;
  double horizon = 1.0;
  double y_max = 2.0;
  double kappa = 0.0;   // <= 0 requests the default b_dprime + 1
  int quad_nodes = 32;  // Gauss-Legendre points for the jump expectation

  double dt() const { return horizon / m_steps; }
  double dy() const { return y_max / j_nodes; }
  double t_node(int i) const { return horizon * i / m_steps; }
  double y_node(int j) const { return y_max * (j + 1) / j_nodes; }
  bool same_shape(const SolverGrid& o) const {
    return m_steps == o.m_steps && j_nodes == o.j_nodes && horizon == o.horizon &&
           y_max == o.y_max;
  }
};

/**
 * Value surface on a SolverGrid, row-major over (t, y).  Inside the grid the
 * evaluation is bilinear; beyond y_max it follows the envelope rate,
 * f(t,y) = f(t,y_max) e^{extrap_rate (y - y_max)}; below the first node the
 * nearest column is used (the scheme treats the lower edge the same way).
 */
struct ValueSurface {
  SolverGrid grid;
  std::vector<double> values;  // (m_steps+1) * j_nodes
  double extrap_rate = 0.0;

  double node(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.j_nodes + j]; }
  double& node(int i, int j) { return values[static_cast<std::size_t>(i) * grid.j_nodes + j]; }
  double value_at(double t, double y) const;
  double min_value() const;
};

struct SolveDiagnostics {
  double cfl_value = 0.0;       // dt (lambda y_max/dy + lambda c + gamma Q(y_max) + 1)
  int envelope_breaches = 0;    // nodes outside [1, envelope] by more than 1e-8 envelope
  double max_breach = 0.0;      // largest relative breach
  int breach_time_idx = -1;
  int breach_y_idx = -1;
};

struct SolveResult {
  ValueSurface surface;
  SolveDiagnostics diagnostics;
  DerivedConstants constants;
};

/**
 * One explicit backward step of the scheme, exposed for the ordering /
 * stability property tests.  Slices are in f-space; the drift uses the
 * one-sided difference toward smaller y (the transport speed -lambda y is
 * negative), the jump expectation combines Gauss-Legendre on [0, 12/eta]
 * with an analytic tail that follows the exponential extrapolation rule.
 */
class PideStepper {
 public:
  PideStepper(const MarketModel& model, const OuParams& ou, const SolverGrid& grid,
              double extrap_rate);

  void step(std::span<const double> f_in, std::span<double> f_out) const;
  double cfl_value() const { return cfl_value_; }
  const SolverGrid& grid() const { return grid_; }

 private:
  struct JumpTerm {
    int idx;        // contribution w0 f[idx] + w1 f[idx+1] (w1 = 0 when extrapolated)
    double w0, w1;
  };
  SolverGrid grid_;
  double dt_, dy_, lambda_, gamma_, intensity_;
  double power_;  // -gamma / (1-gamma)
  std::vector<double> y_, q_;
  std::vector<std::vector<JumpTerm>> jump_terms_;  // per y-node
  std::vector<double> tail_coeff_;                 // per y-node, applies to f[J-1]
  double cfl_value_ = 0.0;
};

/// Marches the scheme from f(T, .) = 1 down to t = 0.  Throws on CFL or
/// condition-B violations and when kappa <= b_dprime; envelope breaches are
/// reported as diagnostics, never clamped.
SolveResult solve(const MarketModel& model, const OuParams& ou, const SolverGrid& grid);

/// Optimal consumption fraction c/x = f^{-1/(1-gamma)} node by node.
ValueSurface consumption_surface(const ValueSurface& f, double gamma);

struct DerivativeBoundReport {
  double fraction_within = 1.0;           // central differences vs the phi bound
  double fraction_within_interior = 1.0;  // excluding the two smallest-y columns
  int checked = 0;
};

/// Central-difference y-derivatives against phi(t) e^{A''(T-t) + B'' y}.
DerivativeBoundReport derivative_bound_check(const ValueSurface& f, const DerivedConstants& dc);

}  // namespace ouvol
