#include "pirbf/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pirbf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Minimiser of the cubic through (x1, f1, g1) and (x2, f2, g2), clamped to
// [lo, hi]; falls back to the midpoint when the cubic has no real minimiser.
double cubic_interpolate(double x1, double f1, double g1, double x2, double f2, double g2, double lo, double hi) {
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double d2_sq = d1 * d1 - g1 * g2;
  if (d2_sq >= 0.0 && std::isfinite(d2_sq)) {
    const double d2 = std::sqrt(d2_sq);
    const double pos = x1 <= x2 ? x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
                                : x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    if (std::isfinite(pos)) return std::clamp(pos, lo, hi);
  }
  return 0.5 * (lo + hi);
}

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // ∇f(x + αp)ᵀp
  std::vector<double> x;
  std::vector<double> g;
};

struct SearchResult {
  Trial point;
  bool satisfied = false;  // strong Wolfe conditions hold at `point`
};

// Below this bracket width (scaled by ‖p‖∞) further zooming cannot move x.
constexpr double kBracketTolerance = 1e-12;

SearchResult strong_wolfe_search(const std::vector<double>& x, double f0, double slope0,
                                 const std::vector<double>& p, const ObjectiveFn& objective,
                                 const LbfgsConfig& cfg, std::size_t& evals) {
  const std::size_t n = x.size();
  double p_inf = 0.0;
  for (double v : p) p_inf = std::max(p_inf, std::abs(v));

  Trial best{0.0, f0, slope0, {}, {}};
  std::size_t used = 0;
  const auto eval = [&](double alpha) {
    Trial t;
    t.alpha = alpha;
    t.x.resize(n);
    t.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.x[i] = x[i] + alpha * p[i];
    t.f = objective(t.x, t.g);
    ++evals;
    ++used;
    t.slope = dot(t.g, p);
    if (!std::isfinite(t.f) || !std::isfinite(t.slope) || !all_finite(t.g)) {
      t.f = std::numeric_limits<double>::infinity();
      t.slope = std::numeric_limits<double>::quiet_NaN();
    } else if (t.f < best.f) {
      best = t;
    }
    return t;
  };
  const auto armijo = [&](const Trial& t) { return t.f <= f0 + cfg.wolfe_c1 * t.alpha * slope0; };
  const auto curvature = [&](const Trial& t) { return std::abs(t.slope) <= -cfg.wolfe_c2 * slope0; };
  const auto finish = [&](SearchResult r) {
    if (!r.satisfied) r.point = best;
    return r;
  };

  Trial prev{0.0, f0, slope0, {}, {}};
  Trial cur = eval(cfg.lr);
  Trial lo;
  Trial hi;
  bool bracketed = false;

  // Bracketing: grow the step until the interval [prev, cur] must hold a
  // point satisfying both conditions.
  while (true) {
    if (!std::isfinite(cur.f)) {
      if (used >= cfg.max_line_search_evals) return finish({});
      cur = eval(0.5 * (prev.alpha + cur.alpha));
      continue;
    }
    if (!armijo(cur) || (used > 1 && cur.f >= prev.f)) {
      lo = prev;
      hi = cur;
      bracketed = true;
      break;
    }
    if (curvature(cur)) return {cur, true};
    if (cur.slope >= 0.0) {
      lo = cur;
      hi = prev;
      bracketed = true;
      break;
    }
    if (used >= cfg.max_line_search_evals) break;
    const double next = cubic_interpolate(prev.alpha, prev.f, prev.slope, cur.alpha, cur.f, cur.slope,
                                          cur.alpha + 0.01 * (cur.alpha - prev.alpha), cur.alpha * 10.0);
    prev = std::move(cur);
    cur = eval(next);
  }
  if (!bracketed) return finish({});

  // Zoom: lo satisfies Armijo with the lowest f so far, hi bounds the step.
  bool insufficient_progress = false;
  while (used < cfg.max_line_search_evals) {
    const double a = std::min(lo.alpha, hi.alpha);
    const double b = std::max(lo.alpha, hi.alpha);
    if ((b - a) * p_inf < kBracketTolerance) break;
    double t = std::isfinite(hi.f) ? cubic_interpolate(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope, a, b)
                                   : 0.5 * (a + b);
    const double eps = 0.1 * (b - a);
    if (std::min(b - t, t - a) < eps) {
      if (insufficient_progress || t >= b || t <= a) {
        t = std::abs(t - b) < std::abs(t - a) ? b - eps : a + eps;
        insufficient_progress = false;
      } else {
        insufficient_progress = true;
      }
    } else {
      insufficient_progress = false;
    }
    Trial trial = eval(t);
    if (!armijo(trial) || trial.f >= lo.f) {
      hi = std::move(trial);
    } else {
      if (curvature(trial)) return {std::move(trial), true};
      if (trial.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = std::move(trial);
    }
  }
  return finish({});
}

}  // namespace

void validate(const LbfgsConfig& cfg) {
  if (cfg.history == 0) throw std::invalid_argument("lbfgs: history must be at least 1");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("lbfgs: lr must be positive");
  if (!(cfg.wolfe_c1 > 0.0 && cfg.wolfe_c1 < cfg.wolfe_c2 && cfg.wolfe_c2 < 1.0)) {
    throw std::invalid_argument("lbfgs: need 0 < c1 < c2 < 1");
  }
  if (cfg.max_line_search_evals == 0) throw std::invalid_argument("lbfgs: max_line_search_evals must be positive");
  if (cfg.inner_iters == 0) throw std::invalid_argument("lbfgs: inner_iters must be at least 1");
  if (!(cfg.inner_tolerance_change >= 0.0)) throw std::invalid_argument("lbfgs: inner_tolerance_change must be non-negative");
}

OptState make_state(std::vector<double> x0, const ObjectiveFn& objective) {
  OptState s;
  s.x = std::move(x0);
  s.grad.resize(s.x.size());
  s.loss = objective(s.x, s.grad);
  s.evaluations = 1;
  if (!std::isfinite(s.loss) || !all_finite(s.grad)) {
    throw OptimizerError("objective is not finite at the starting point (loss " + std::to_string(s.loss) + ")");
  }
  return s;
}

OptState reset_memory(OptState state) {
  state.memory.clear();
  return state;
}

std::vector<double> lbfgs_direction(const std::deque<CurvaturePair>& memory, std::span<const double> grad) {
  std::vector<double> q(grad.begin(), grad.end());
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    const CurvaturePair& m = memory[i];
    alpha[i] = m.rho * dot(m.s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * m.y[j];
  }
  if (!memory.empty()) {
    const CurvaturePair& last = memory.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const CurvaturePair& m = memory[i];
    const double beta = m.rho * dot(m.y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[i] - beta) * m.s[j];
  }
  for (double& v : q) v = -v;
  return q;
}

OptState lbfgs_iterate(OptState state, const ObjectiveFn& objective, const LbfgsConfig& cfg) {
  if (!std::isfinite(state.loss) || !all_finite(state.grad)) {
    throw OptimizerError("non-finite loss or gradient at iteration " + std::to_string(state.iteration));
  }
  ++state.iteration;
  state.last_search_failed = false;
  if (norm(state.grad) == 0.0) return state;

  std::vector<double> p = lbfgs_direction(state.memory, state.grad);
  double slope = dot(state.grad, p);
  if (!(slope < 0.0)) {
    state.memory.clear();
    p.assign(state.grad.begin(), state.grad.end());
    for (double& v : p) v = -v;
    slope = dot(state.grad, p);
  }

  SearchResult res = strong_wolfe_search(state.x, state.loss, slope, p, objective, cfg, state.evaluations);
  Trial& t = res.point;
  if (!res.satisfied) {
    state.memory.clear();
    state.last_search_failed = true;
    if (t.alpha == 0.0) return state;
  }

  std::vector<double> s(p.size());
  std::vector<double> y(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    s[i] = t.x[i] - state.x[i];
    y[i] = t.g[i] - state.grad[i];
  }
  state.x = std::move(t.x);
  state.grad = std::move(t.g);
  state.loss = t.f;

  if (res.satisfied) {
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm(s) * norm(y)) {
      state.memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      while (state.memory.size() > cfg.history) state.memory.pop_front();
    }
  }
  return state;
}

}  // namespace pirbf
