#include "ouvol/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ouvol/parallel.hpp"
#include "ouvol/rng.hpp"
#include "ouvol/stats.hpp"

namespace ouvol {

namespace {

/**
 * Composite-Simpson scaffold along one factor path over [a, b], split at the
 * jump times.  Per node: time, the one-sided factor level (pre-jump at a
 * piece's right edge, post-jump at its left edge), the Simpson weight for
 * the outer time integral, and the running integral of Q from a.  Prefix
 * integrals use an extra Q evaluation at each subinterval midpoint, so both
 * the prefix and the outer rule are fourth order on each smooth piece.
 */
struct PathQuad {
  std::vector<double> times, yvals, weights, q_prefix;
  double q_total = 0.0;
};

PathQuad build_quad(const FactorPath& path, const MarketModel& model, double a, double b,
                    double substep) {
  PathQuad out;
  if (!(b > a)) return out;
  std::vector<double> cuts;
  cuts.push_back(a);
  for (const JumpEvent& j : path.jumps) {
    if (j.time > a && j.time < b) cuts.push_back(j.time);
  }
  cuts.push_back(b);

  double acc = 0.0;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p];
    const double hi = cuts[p + 1];
    if (!(hi > lo)) continue;
    int n = static_cast<int>(std::ceil((hi - lo) / substep));
    n = std::max(2, n + (n & 1));
    const double h = (hi - lo) / n;

    double t_prev = lo;
    double q_prev = q_value(model, path.value(lo));
    out.times.push_back(lo);
    out.yvals.push_back(path.value(lo));
    out.weights.push_back(h / 3.0);
    out.q_prefix.push_back(acc);
    for (int k = 1; k <= n; ++k) {
      const double tk = (k == n) ? hi : lo + k * h;
      const double yk = (k == n) ? path.left_value(hi) : path.value(tk);
      const double qk = q_value(model, yk);
      const double qm = q_value(model, path.value(0.5 * (t_prev + tk)));
      acc += (tk - t_prev) / 6.0 * (q_prev + 4.0 * qm + qk);
      out.times.push_back(tk);
      out.yvals.push_back(yk);
      out.weights.push_back(k == n ? h / 3.0 : (k & 1 ? 4.0 * h / 3.0 : 2.0 * h / 3.0));
      out.q_prefix.push_back(acc);
      t_prev = tk;
      q_prev = qk;
    }
  }
  out.q_total = acc;
  return out;
}

/// f_bar(from) along the path: u' + (gamma/(1-gamma)) Q u + 1 = 0, u(T) = 1,
/// by the integrating-factor formula; returns u^{1-gamma}.
double certainty_value(const FactorPath& path, const MarketModel& model, double from,
                       double substep) {
  const double gt = model.gamma / (1.0 - model.gamma);
  PathQuad q = build_quad(path, model, from, path.t_end, substep);
  double integral = 0.0;
  for (std::size_t k = 0; k < q.times.size(); ++k) {
    integral += q.weights[k] * std::exp(gt * q.q_prefix[k]);
  }
  const double u = std::exp(gt * q.q_total) + integral;
  return std::pow(u, 1.0 - model.gamma);
}

double resolve_substep(double requested, double span, double denom) {
  if (requested > 0.0) return requested;
  return span > 0.0 ? span / denom : 1.0;
}

}  // namespace

std::vector<ProbeEstimate> apply_operator(const ValueSurface& f, const MarketModel& model,
                                          const OuParams& ou, const McConfig& cfg) {
  validate(model);
  validate(ou);
  if (cfg.n_paths < 100) throw std::invalid_argument("mc.n_paths must be at least 100");
  if (f.min_value() < 1.0 - 1e-12) {
    throw std::runtime_error("precondition f<1: surface dips below 1");
  }
  const double T = model.horizon;
  const double gamma = model.gamma;
  const double gt = gamma / (1.0 - gamma);

  std::vector<ProbeEstimate> out;
  out.reserve(cfg.probe_points.size());
  for (std::size_t p = 0; p < cfg.probe_points.size(); ++p) {
    const auto [t, y] = cfg.probe_points[p];
    if (t < 0.0 || t > T || y <= 0.0 || y > f.grid.y_max) {
      throw std::invalid_argument("probe point outside [0,T] x (0, y_max]");
    }
    const double substep = resolve_substep(cfg.substep, T - t, 128.0);
    const std::uint64_t probe_seed = hash_combine(cfg.seed, p);
    std::vector<double> vals(cfg.n_paths);
    parallel_chunks(cfg.n_paths, cfg.max_threads, [&](long lo, long hi) {
      OuParams start = ou;
      start.y0 = y;
      for (long i = lo; i < hi; ++i) {
        Rng rng = make_stream(probe_seed, static_cast<std::uint64_t>(i));
        FactorPath path = evolve(start, t, T, rng);
        PathQuad q = build_quad(path, model, t, T, substep);
        double integral = 0.0;
        for (std::size_t k = 0; k < q.times.size(); ++k) {
          const double fv = f.value_at(q.times[k], q.yvals[k]);
          integral += q.weights[k] * std::exp(gamma * q.q_prefix[k]) * std::pow(fv, -gt);
        }
        vals[i] = std::exp(gamma * q.q_total) + (1.0 - gamma) * integral;
      }
    });
    MeanSe ms = mean_se(vals);
    out.push_back({t, y, ms.mean, ms.se});
  }
  return out;
}

IterationReport fixed_point_iterate(const ValueSurface& f0, const MarketModel& model,
                                    const OuParams& ou, const McConfig& cfg, int n_iter) {
  if (n_iter < 1) throw std::invalid_argument("n_iter must be positive");
  if (cfg.n_paths < 100) throw std::invalid_argument("mc.n_paths must be at least 100");
  DerivedConstants dc = derive_constants(model, ou);
  const MetricParams mp{dc.alpha, dc.b_prime};
  const SolverGrid grid = f0.grid;
  const double T = model.horizon;
  const double gamma = model.gamma;
  const double gt = gamma / (1.0 - gamma);
  const long n_nodes = static_cast<long>(grid.m_steps) * grid.j_nodes;

  IterationReport report;
  ValueSurface cur = f0;
  for (int iter = 0; iter < n_iter; ++iter) {
    ValueSurface next;
    next.grid = grid;
    next.extrap_rate = dc.b_prime;
    next.values.assign(static_cast<std::size_t>(grid.m_steps + 1) * grid.j_nodes, 1.0);
    parallel_chunks(n_nodes, cfg.max_threads, [&](long lo, long hi) {
      for (long node = lo; node < hi; ++node) {
        const int i = static_cast<int>(node / grid.j_nodes);
        const int j = static_cast<int>(node % grid.j_nodes);
        const double t = grid.t_node(i);
        const double y = grid.y_node(j);
        const double substep = resolve_substep(cfg.substep, T - t, 128.0);
        // The node's stream does not involve the iteration index: every pass
        // re-walks the same paths, so distances see only the contraction.
        const std::uint64_t node_seed = hash_combine(cfg.seed, static_cast<std::uint64_t>(node));
        OuParams start = ou;
        start.y0 = y;
        double sum = 0.0;
        for (long k = 0; k < cfg.n_paths; ++k) {
          Rng rng = make_stream(node_seed, static_cast<std::uint64_t>(k));
          FactorPath path = evolve(start, t, T, rng);
          PathQuad q = build_quad(path, model, t, T, substep);
          double integral = 0.0;
          for (std::size_t m = 0; m < q.times.size(); ++m) {
            const double fv = cur.value_at(q.times[m], q.yvals[m]);
            integral += q.weights[m] * std::exp(gamma * q.q_prefix[m]) * std::pow(fv, -gt);
          }
          sum += std::exp(gamma * q.q_total) + (1.0 - gamma) * integral;
        }
        next.node(i, j) = sum / static_cast<double>(cfg.n_paths);
      }
    });
    report.distances.push_back(metric_distance(next, cur, mp));
    report.iterates.push_back(next);
    cur = std::move(next);
  }
  return report;
}

double metric_distance(const ValueSurface& f, const ValueSurface& g, const MetricParams& params) {
  if (!f.grid.same_shape(g.grid)) {
    throw std::invalid_argument("metric_distance: surfaces live on different grids");
  }
  const SolverGrid& grid = f.grid;
  double best = 0.0;
  for (int i = 0; i <= grid.m_steps; ++i) {
    const double wt = std::exp(-params.alpha * (grid.horizon - grid.t_node(i)));
    for (int j = 0; j < grid.j_nodes; ++j) {
      const double w = wt * std::exp(-params.b_prime * grid.y_node(j));
      best = std::max(best, w * std::abs(f.node(i, j) - g.node(i, j)));
    }
  }
  return best;
}

ValueSurface random_band_surface(const SolverGrid& grid, const DerivedConstants& dc, Rng& rng) {
  ValueSurface f;
  f.grid = grid;
  f.extrap_rate = dc.b_prime;
  f.values.assign(static_cast<std::size_t>(grid.m_steps + 1) * grid.j_nodes, 1.0);
  for (int i = 0; i < grid.m_steps; ++i) {
    const double t = grid.t_node(i);
    for (int j = 0; j < grid.j_nodes; ++j) {
      const double env = envelope_upper(dc, t, grid.y_node(j));
      f.node(i, j) = 1.0 + uniform01(rng) * (env - 1.0);
    }
  }
  return f;
}

double merton_closed_form(double q, double gamma, double horizon, double t) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (q < 0.0) throw std::invalid_argument("q must be nonnegative");
  if (t < 0.0 || t > horizon) throw std::invalid_argument("t must lie in [0, T]");
  const double tau = horizon - t;
  const double k = gamma * q / (1.0 - gamma);
  const double u = (k == 0.0) ? 1.0 + tau : std::exp(k * tau) + std::expm1(k * tau) / k;
  return std::pow(u, 1.0 - gamma);
}

std::vector<double> pathwise_certainty(const std::vector<FactorPath>& paths,
                                       const MarketModel& model, double substep) {
  validate(model);
  std::vector<double> out;
  out.reserve(paths.size());
  for (const FactorPath& path : paths) {
    const double sub = resolve_substep(substep, path.t_end - path.t_start, 128.0);
    out.push_back(certainty_value(path, model, path.t_start, sub));
  }
  return out;
}

JensenGapReport jensen_gap(const MarketModel& model, const OuParams& ou, double t, double y,
                           const JensenGapConfig& cfg) {
  validate(model);
  validate(ou);
  if (cfg.n_paths < 100) throw std::invalid_argument("mc.n_paths must be at least 100");
  if (cfg.n_inner < 100) throw std::invalid_argument("inner path count must be at least 100");
  const double T = model.horizon;
  if (t < 0.0 || t > T) throw std::invalid_argument("t must lie in [0, T]");
  if (!(y > 0.0)) throw std::invalid_argument("y must be positive");
  if (t >= T) return {1.0, 0.0, 1.0, 0.0, 0.0};

  const double gamma = model.gamma;
  const double gt = gamma / (1.0 - gamma);
  const double sub = resolve_substep(cfg.substep, T - t, 64.0);
  const bool deterministic = ou.subordinator.family == SubordinatorFamily::Null;

  // Pointwise curvature lattice: by the restart property of the factor,
  //
  //   h - L h = (1-gamma) Int_t^T E[ e^{gamma Int_t^s Q} g(s, Y_s) ] ds,
  //   g(s,v)  = E[f_bar(s,.)^{-gt} | restart at (s,v)] - h(s,v)^{-gt} >= 0,
  //
  // so g is estimated per node from one inner sample (the linear parts of
  // the two means cancel inside the node, leaving pure curvature) and the
  // outer paths only integrate a small nonnegative function.  A
  // deterministic factor has g = 0 and the gap is exactly zero.
  const int lt = std::max(2, cfg.lattice_t);
  const int ly = std::max(2, cfg.lattice_y);
  const double y_lo = y * std::exp(-ou.lambda * (T - t));
  const double y_hi = deterministic ? y + 1.0 : y + 20.0 / ou.subordinator.jump_rate;
  std::vector<double> g_val(static_cast<std::size_t>(lt) * ly, 0.0);
  std::vector<double> g_err(static_cast<std::size_t>(lt) * ly, 0.0);
  if (!deterministic) {
    const std::uint64_t lattice_seed = hash_combine(cfg.seed, 2);
    parallel_chunks(static_cast<long>(lt) * ly, cfg.max_threads, [&](long lo, long hi) {
      std::vector<double> fb(static_cast<std::size_t>(cfg.n_inner));
      std::vector<double> pw(static_cast<std::size_t>(cfg.n_inner));
      for (long node = lo; node < hi; ++node) {
        const int it = static_cast<int>(node / ly);
        const int jy = static_cast<int>(node % ly);
        const double s = t + (T - t) * it / (lt - 1);
        if (s >= T) continue;  // terminal row: f_bar = 1, zero curvature
        const double yv = y_lo + (y_hi - y_lo) * jy / (ly - 1);
        OuParams start = ou;
        start.y0 = yv;
        const std::uint64_t node_seed =
            hash_combine(lattice_seed, static_cast<std::uint64_t>(node));
        for (long i = 0; i < cfg.n_inner; ++i) {
          Rng rng = make_stream(node_seed, static_cast<std::uint64_t>(i));
          FactorPath path = evolve(start, s, T, rng);
          fb[static_cast<std::size_t>(i)] = certainty_value(path, model, s, sub);
          pw[static_cast<std::size_t>(i)] = std::pow(fb[static_cast<std::size_t>(i)], -gt);
        }
        const double n = static_cast<double>(cfg.n_inner);
        const double m1 = pairwise_sum(fb) / n;
        const double mp = pairwise_sum(pw) / n;
        g_val[static_cast<std::size_t>(node)] = mp - std::pow(m1, -gt);
        // Influence-function standard error of the curvature statistic.
        const double slope = gt * std::pow(m1, -gt - 1.0);
        double ss = 0.0;
        for (long i = 0; i < cfg.n_inner; ++i) {
          const double phi = (pw[static_cast<std::size_t>(i)] - mp) +
                             slope * (fb[static_cast<std::size_t>(i)] - m1);
          ss += phi * phi;
        }
        g_err[static_cast<std::size_t>(node)] = std::sqrt(ss / (n * (n - 1.0)));
      }
    });
  }
  const auto lattice_at = [&](const std::vector<double>& field, double s, double yv) {
    double pt = (s - t) / (T - t) * (lt - 1);
    pt = std::clamp(pt, 0.0, static_cast<double>(lt - 1));
    const int i0 = std::min(static_cast<int>(pt), lt - 2);
    const double wt = pt - i0;
    double py = (yv - y_lo) / (y_hi - y_lo) * (ly - 1);
    py = std::clamp(py, 0.0, static_cast<double>(ly - 1));
    const int j0 = std::min(static_cast<int>(py), ly - 2);
    const double wy = py - j0;
    const auto cell = [&](int a, int b) { return field[static_cast<std::size_t>(a) * ly + b]; };
    const double lo_mix = (1.0 - wy) * cell(i0, j0) + wy * cell(i0, j0 + 1);
    const double hi_mix = (1.0 - wy) * cell(i0 + 1, j0) + wy * cell(i0 + 1, j0 + 1);
    return (1.0 - wt) * lo_mix + wt * hi_mix;
  };

  std::vector<double> fbar0(static_cast<std::size_t>(cfg.n_paths));
  std::vector<double> gaps(static_cast<std::size_t>(cfg.n_paths));
  std::vector<double> sens(static_cast<std::size_t>(cfg.n_paths));
  const std::uint64_t outer_seed = hash_combine(cfg.seed, 1);
  parallel_chunks(cfg.n_paths, cfg.max_threads, [&](long lo, long hi) {
    OuParams start = ou;
    start.y0 = y;
    for (long i = lo; i < hi; ++i) {
      Rng rng = make_stream(outer_seed, static_cast<std::uint64_t>(i));
      FactorPath path = evolve(start, t, T, rng);
      PathQuad q = build_quad(path, model, t, T, sub);
      double integral = 0.0;
      double acc = 0.0;
      double acc_err = 0.0;
      for (std::size_t k = 0; k < q.times.size(); ++k) {
        integral += q.weights[k] * std::exp(gt * q.q_prefix[k]);
        if (deterministic) continue;
        const double w = q.weights[k] * std::exp(gamma * q.q_prefix[k]);
        acc += w * lattice_at(g_val, q.times[k], q.yvals[k]);
        acc_err += w * lattice_at(g_err, q.times[k], q.yvals[k]);
      }
      fbar0[static_cast<std::size_t>(i)] =
          std::pow(std::exp(gt * q.q_total) + integral, 1.0 - gamma);
      gaps[static_cast<std::size_t>(i)] = (1.0 - gamma) * acc;
      sens[static_cast<std::size_t>(i)] = (1.0 - gamma) * acc_err;
    }
  });

  const MeanSe mh = mean_se(fbar0);
  const MeanSe mg = mean_se(gaps);
  // Lattice uncertainty propagated as if node errors were fully correlated,
  // an upper bound on its contribution.
  const double stage1 = pairwise_sum(sens) / static_cast<double>(cfg.n_paths);
  JensenGapReport report;
  report.mean_certainty = mh.mean;
  report.se_certainty = mh.se;
  report.gap = mg.mean;
  report.gap_se = std::sqrt(mg.se * mg.se + stage1 * stage1);
  report.operator_mean = mh.mean - mg.mean;
  return report;
}

}  // namespace ouvol
