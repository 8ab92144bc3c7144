#include "ouvol/pide.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ouvol/quad.hpp"

namespace ouvol {

namespace {

void check_grid(const SolverGrid& grid) {
  if (grid.m_steps < 1) throw std::invalid_argument("grid m_steps must be positive");
  if (grid.j_nodes < 2) throw std::invalid_argument("grid j_nodes must be at least 2");
  if (!(grid.horizon > 0.0)) throw std::invalid_argument("grid horizon must be positive");
  if (!(grid.y_max > 0.0)) throw std::invalid_argument("grid y_max must be positive");
  if (grid.quad_nodes < 2) throw std::invalid_argument("grid quad_nodes must be at least 2");
}

}  // namespace

double ValueSurface::value_at(double t, double y) const {
  const double dt = grid.dt();
  const double dy = grid.dy();
  const int m = grid.m_steps;
  const int jn = grid.j_nodes;
  double s = std::clamp(t / dt, 0.0, static_cast<double>(m));
  int i0 = std::min(static_cast<int>(s), m - 1);
  double wt = s - i0;

  auto column_mix = [&](int j) { return (1.0 - wt) * node(i0, j) + wt * node(i0 + 1, j); };

  if (y >= grid.y_max) {
    return column_mix(jn - 1) * std::exp(extrap_rate * (y - grid.y_max));
  }
  if (y <= dy) return column_mix(0);
  double p = y / dy - 1.0;
  int j0 = std::min(static_cast<int>(p), jn - 2);
  double wy = p - j0;
  return (1.0 - wy) * column_mix(j0) + wy * column_mix(j0 + 1);
}

double ValueSurface::min_value() const {
  return *std::min_element(values.begin(), values.end());
}

PideStepper::PideStepper(const MarketModel& model, const OuParams& ou, const SolverGrid& grid,
                         double extrap_rate)
    : grid_(grid) {
  check_grid(grid);
  validate(model);
  validate(ou);

  dt_ = grid.dt();
  dy_ = grid.dy();
  lambda_ = ou.lambda;
  gamma_ = model.gamma;
  power_ = -gamma_ / (1.0 - gamma_);
  intensity_ = (ou.subordinator.family == SubordinatorFamily::Null) ? 0.0
                                                                    : ou.subordinator.intensity;

  const int jn = grid.j_nodes;
  y_.resize(jn);
  q_.resize(jn);
  for (int j = 0; j < jn; ++j) {
    y_[j] = grid.y_node(j);
    q_[j] = q_value(model, y_[j]);
  }

  if (intensity_ > 0.0) {
    const double eta = ou.subordinator.jump_rate;
    if (!(eta > extrap_rate)) {
      throw std::runtime_error(
          "jump size tail must decay faster than the surface extrapolation rate");
    }
    const double z_cut = 12.0 / eta;
    QuadratureRule rule = gauss_legendre(grid.quad_nodes, 0.0, z_cut);
    // Mass of the size distribution beyond the quadrature window, folded into
    // the exponential continuation f(y) = f(y_max) e^{extrap_rate (y - y_max)}.
    const double tail_mass = eta / (eta - extrap_rate) * std::exp(-(eta - extrap_rate) * z_cut);
    jump_terms_.resize(jn);
    tail_coeff_.assign(jn, 0.0);
    for (int j = 0; j < jn; ++j) {
      tail_coeff_[j] = tail_mass * std::exp(extrap_rate * (y_[j] + z_cut - grid.y_max));
      for (int k = 0; k < grid.quad_nodes; ++k) {
        const double z = rule.nodes[k];
        const double w = rule.weights[k] * eta * std::exp(-eta * z);
        const double target = y_[j] + z;
        const double p = target / dy_ - 1.0;
        const int idx = static_cast<int>(p);
        if (idx >= jn - 1) {
          tail_coeff_[j] += w * std::exp(extrap_rate * (target - grid.y_max));
        } else {
          const double frac = p - idx;
          jump_terms_[j].push_back({idx, w * (1.0 - frac), w * frac});
        }
      }
    }
  }

  cfl_value_ = dt_ * (lambda_ * grid.y_max / dy_ + lambda_ * intensity_ +
                      gamma_ * std::max(q_[jn - 1], 0.0) + 1.0);
}

void PideStepper::step(std::span<const double> f_in, std::span<double> f_out) const {
  const int jn = grid_.j_nodes;
  const double edge = f_in[jn - 1];
  for (int j = 0; j < jn; ++j) {
    double rhs = gamma_ * q_[j] * f_in[j] + (1.0 - gamma_) * std::pow(f_in[j], power_);
    if (j > 0) rhs -= lambda_ * y_[j] * (f_in[j] - f_in[j - 1]) / dy_;
    if (intensity_ > 0.0) {
      double expect = tail_coeff_[j] * edge;
      for (const JumpTerm& term : jump_terms_[j]) {
        expect += term.w0 * f_in[term.idx] + term.w1 * f_in[term.idx + 1];
      }
      rhs += lambda_ * intensity_ * (expect - f_in[j]);
    }
    f_out[j] = f_in[j] + dt_ * rhs;
  }
}

SolveResult solve(const MarketModel& model, const OuParams& ou, const SolverGrid& grid) {
  check_grid(grid);
  DerivedConstants dc = derive_constants(model, ou);

  SolverGrid resolved = grid;
  if (resolved.kappa <= 0.0) resolved.kappa = dc.b_dprime + 1.0;
  if (!(resolved.kappa > dc.b_dprime)) {
    throw std::invalid_argument("kappa must exceed b_dprime (the derivative growth rate)");
  }

  PideStepper stepper(model, ou, resolved, dc.b_prime);
  if (stepper.cfl_value() > 0.9) {
    throw std::runtime_error("CFL violated: dt too large for this grid, value " +
                             std::to_string(stepper.cfl_value()));
  }

  const int m = resolved.m_steps;
  const int jn = resolved.j_nodes;
  SolveResult result;
  result.constants = dc;
  result.surface.grid = resolved;
  result.surface.extrap_rate = dc.b_prime;
  result.surface.values.assign(static_cast<std::size_t>(m + 1) * jn, 1.0);

  std::vector<double> scale_down(jn), scale_up(jn);
  for (int j = 0; j < jn; ++j) {
    scale_down[j] = std::exp(-resolved.kappa * resolved.y_node(j));
    scale_up[j] = 1.0 / scale_down[j];
  }

  // March backward from the terminal slice; between steps the slice is held
  // as g = f e^{-kappa y} to keep the stored range flat in y.
  std::vector<double> g(jn), f_in(jn), f_out(jn);
  for (int j = 0; j < jn; ++j) g[j] = scale_down[j];
  for (int i = m - 1; i >= 0; --i) {
    for (int j = 0; j < jn; ++j) f_in[j] = g[j] * scale_up[j];
    stepper.step(f_in, f_out);
    double* row = &result.surface.node(i, 0);
    for (int j = 0; j < jn; ++j) {
      row[j] = f_out[j];
      g[j] = f_out[j] * scale_down[j];
    }
  }

  SolveDiagnostics& diag = result.diagnostics;
  diag.cfl_value = stepper.cfl_value();
  const double coef = 1.0 + (1.0 - dc.gamma) / dc.a_prime;
  std::vector<double> col(jn);
  for (int j = 0; j < jn; ++j) col[j] = std::exp(dc.b_prime * resolved.y_node(j));
  for (int i = 0; i <= m; ++i) {
    const double rowf = coef * std::exp(dc.a_prime * (resolved.horizon - resolved.t_node(i)));
    for (int j = 0; j < jn; ++j) {
      const double env = rowf * col[j];
      const double v = result.surface.node(i, j);
      const double breach = std::max(v - env, 1.0 - v);
      if (breach > 1e-8 * env) {
        ++diag.envelope_breaches;
        if (breach / env > diag.max_breach) {
          diag.max_breach = breach / env;
          diag.breach_time_idx = i;
          diag.breach_y_idx = j;
        }
      }
    }
  }
  return result;
}

ValueSurface consumption_surface(const ValueSurface& f, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  ValueSurface c;
  c.grid = f.grid;
  c.extrap_rate = -f.extrap_rate / (1.0 - gamma);
  c.values.resize(f.values.size());
  const double p = -1.0 / (1.0 - gamma);
  std::transform(f.values.begin(), f.values.end(), c.values.begin(),
                 [p](double v) { return std::pow(v, p); });
  return c;
}

DerivativeBoundReport derivative_bound_check(const ValueSurface& f, const DerivedConstants& dc) {
  const SolverGrid& grid = f.grid;
  const double dy = grid.dy();
  DerivativeBoundReport report;
  long within = 0, within_interior = 0, checked = 0, checked_interior = 0;
  for (int i = 0; i <= grid.m_steps; ++i) {
    const double bound_t =
        phi_bound(dc, grid.t_node(i)) *
        std::exp(dc.a_dprime * (grid.horizon - grid.t_node(i)));
    for (int j = 1; j + 1 < grid.j_nodes; ++j) {
      const double deriv = (f.node(i, j + 1) - f.node(i, j - 1)) / (2.0 * dy);
      const double bound = bound_t * std::exp(dc.b_dprime * grid.y_node(j));
      const bool ok = std::abs(deriv) <= bound * (1.0 + 1e-9);
      ++checked;
      within += ok;
      if (j >= 3) {
        ++checked_interior;
        within_interior += ok;
      }
    }
  }
  report.checked = static_cast<int>(checked);
  if (checked > 0) report.fraction_within = static_cast<double>(within) / checked;
  if (checked_interior > 0) {
    report.fraction_within_interior = static_cast<double>(within_interior) / checked_interior;
  }
  return report;
}

}  // namespace ouvol
