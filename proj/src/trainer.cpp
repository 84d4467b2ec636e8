#include "pirbf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pirbf/oracle.hpp"
#include "pirbf/parallel.hpp"

namespace pirbf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kStagnationFloor = 1e-14;
constexpr std::size_t kStagnationRun = 10;

double mean_square(std::span<const double> v) {
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
  return pairwise_sum(sq) / static_cast<double>(v.size());
}

// Objective over the flat parameter vector of a network with a fixed layout.
// Breakdowns of the evaluations made during one outer iteration are kept so
// the accepted point's components can be reported without re-evaluating.
class FlatObjective {
 public:
  FlatObjective(const BsProblem& prob, const TrainingSet& ts) : objective_(prob, ts) {}

  void set_layout(const RbfNetwork& net) { layout_ = net; }
  void begin_iteration() { seen_.clear(); }

  double operator()(std::span<const double> x, std::span<double> grad) {
    const RbfNetwork net = unflatten(layout_, x);
    const LossBreakdown lb = objective_.loss_and_gradient(net, grad);
    seen_.push_back({std::vector<double>(x.begin(), x.end()), lb});
    return lb.total;
  }

  [[nodiscard]] std::optional<LossBreakdown> breakdown_at(std::span<const double> x) const {
    for (const auto& [point, lb] : seen_) {
      if (std::equal(point.begin(), point.end(), x.begin(), x.end())) return lb;
    }
    return std::nullopt;
  }

  [[nodiscard]] const Objective& objective() const { return objective_; }

 private:
  Objective objective_;
  RbfNetwork layout_;
  std::vector<std::pair<std::vector<double>, LossBreakdown>> seen_;
};

std::optional<double> probe_rmse(const RbfNetwork& net, const TestProbe* probe, std::vector<double>* predictions) {
  if (probe == nullptr || probe->points.empty()) return std::nullopt;
  std::vector<double> pred = evaluate(net, probe->points);
  const double e = rmse(pred, probe->reference);
  if (predictions != nullptr) *predictions = std::move(pred);
  return e;
}

StageRecord make_stage(const RbfNetwork& net, std::size_t iteration, const TestProbe* probe) {
  StageRecord st;
  st.iteration = iteration;
  st.neurons = net.neurons();
  st.test_rmse = probe_rmse(net, probe, &st.predictions);
  return st;
}

// Runs one outer step and fills the record's loss from the accepted point.
LossBreakdown step(OptState& state, FlatObjective& fobj, const LbfgsConfig& lcfg, const LossBreakdown& previous) {
  fobj.begin_iteration();
  const ObjectiveFn fn = std::ref(fobj);
  for (std::size_t i = 0; i < lcfg.inner_iters; ++i) {
    const double before = state.loss;
    state = lbfgs_iterate(std::move(state), fn, lcfg);
    if (std::abs(before - state.loss) < lcfg.inner_tolerance_change) break;
  }
  return fobj.breakdown_at(state.x).value_or(previous);
}

OptState fresh_state(const RbfNetwork& net, FlatObjective& fobj, LossBreakdown& lb) {
  fobj.set_layout(net);
  fobj.begin_iteration();
  const ObjectiveFn fn = std::ref(fobj);
  OptState state = make_state(flatten(net), fn);
  lb = *fobj.breakdown_at(state.x);
  return state;
}

}  // namespace

std::string_view to_string(CandidateSource source) {
  return source == CandidateSource::Halton ? "halton" : "pseudo_random";
}

CandidateSource candidate_source_from_string(std::string_view name) {
  if (name == "pseudo_random") return CandidateSource::PseudoRandom;
  if (name == "halton") return CandidateSource::Halton;
  throw std::invalid_argument("unknown point source '" + std::string(name) + "' (expected pseudo_random or halton)");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Converged:
      return "converged";
    case StopReason::Stagnation:
      return "stagnation";
    case StopReason::IterationCap:
      return "iteration cap";
  }
  return "unknown";
}

void validate(const AdaptiveConfig& cfg) {
  if (cfg.n0 == 0) throw std::invalid_argument("adaptive.n0 must be positive");
  if (cfg.k == 0) throw std::invalid_argument("adaptive.k must be positive");
  if (cfg.s == 0) throw std::invalid_argument("adaptive.s must be positive");
  if (cfg.m > cfg.s) throw std::invalid_argument("adaptive.m must not exceed adaptive.s");
  if (cfg.w < 2) throw std::invalid_argument("adaptive.w must be at least 2");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("adaptive.epsilon must be positive");
}

PointSet interior_test_points(const BsProblem& prob, std::size_t l, double t, std::uint64_t seed) {
  if (t < 0.0 || t > prob.T) throw std::invalid_argument("test time outside [0, T]");
  RngStream rng(seed, StreamLabel::TestPoints);
  PointSet points(prob.input_dim());
  points.reserve(l);
  std::vector<double> p(prob.input_dim());
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t k = 0; k < prob.d; ++k) {
      double x = 0.0;
      while (!(x > 0.0)) x = rng.uniform() * prob.s_max;
      p[k] = x;
    }
    p[prob.d] = t;
    points.push_back(p);
  }
  return points;
}

std::optional<TestProbe> closed_form_probe(const BsProblem& prob, PointSet points) {
  TestProbe probe;
  probe.reference.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::optional<double> v = closed_form_price(prob, points[i]);
    if (!v) return std::nullopt;
    probe.reference.push_back(*v);
  }
  probe.points = std::move(points);
  return probe;
}

double mapr(std::span<const double> residual_mses, std::size_t w) {
  if (residual_mses.empty()) throw std::invalid_argument("mapr: empty trace");
  if (w == 0) throw std::invalid_argument("mapr: window must be positive");
  const std::size_t n = std::min(w, residual_mses.size());
  return pairwise_sum(residual_mses.subspan(residual_mses.size() - n)) / static_cast<double>(n);
}

bool should_stop(const RunHistory& history, std::size_t w, double epsilon) {
  const auto& rec = history.records;
  if (rec.size() < 2) return false;
  std::vector<double> trace;
  for (const IterationRecord& r : rec) {
    if (!std::isnan(r.candidate_mse)) trace.push_back(r.candidate_mse);
  }
  if (trace.size() < 2 || std::isnan(rec.back().candidate_mse) || std::isnan(rec[rec.size() - 2].candidate_mse)) {
    return false;
  }
  const double now = mapr(trace, w);
  const double before = mapr(std::span<const double>(trace).first(trace.size() - 1), w);
  const double dloss = rec.back().loss.total - rec[rec.size() - 2].loss.total;
  return now - before > 0.0 && std::abs(dloss) < epsilon;
}

RbfNetwork insert_neurons(const RbfNetwork& net, const BsProblem& prob, const PointSet& candidates,
                          std::span<const double> residuals, std::size_t m, NetworkStreams& streams,
                          const InsertOptions& options) {
  if (candidates.size() != residuals.size()) {
    throw std::invalid_argument("insert_neurons: candidate and residual counts differ");
  }
  if (m > candidates.size()) throw std::invalid_argument("insert_neurons: m exceeds the candidate count");
  if (candidates.dim() != net.input_dim() && m > 0) {
    throw std::invalid_argument("insert_neurons: candidate dimension mismatch");
  }
  if (m == 0) return net;

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return residuals[a] * residuals[a] > residuals[b] * residuals[b]; });

  RbfNetwork out = net;
  const std::size_t D = net.input_dim();
  const std::size_t sw = net.shape_width();
  const std::size_t n_new = net.neurons() + m;
  out.centres.reserve(n_new * D);
  out.shapes.reserve(n_new * sw);
  out.weights.reserve(n_new);
  for (std::size_t j = 0; j < m; ++j) {
    const std::span<const double> c = candidates[order[j]];
    out.centres.insert(out.centres.end(), c.begin(), c.end());
  }
  std::vector<double> row(sw);
  for (std::size_t j = 0; j < m; ++j) {
    initial_shapes(prob, net.shape_mode, candidates[order[j]], streams.shapes, row);
    out.shapes.insert(out.shapes.end(), row.begin(), row.end());
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(n_new + 1));
  for (std::size_t j = 0; j < m; ++j) {
    const double w = streams.weights.uniform(-bound, bound);
    out.weights.push_back(options.zero_new_weights ? 0.0 : w);
  }
  return out;
}

TrainerStreams::TrainerStreams(std::uint64_t seed, CandidateSource source)
    : network(seed, source == CandidateSource::Halton),
      candidates(source == CandidateSource::Halton ? UnitCubeSampler(HaltonCursor())
                                                   : UnitCubeSampler(RngStream(seed, StreamLabel::Candidates))) {}

TrainResult train_fixed(RbfNetwork net, const BsProblem& prob, const TrainingSet& ts, const LbfgsConfig& lcfg,
                        std::size_t max_iters, const TrainOptions& options) {
  validate(lcfg);
  check_network(net);
  if (net.d != prob.d) throw std::invalid_argument("train_fixed: network and problem dimensions differ");

  FlatObjective fobj(prob, ts);
  RunHistory history;
  LossBreakdown lb;
  OptState state = fresh_state(net, fobj, lb);

  const auto record = [&](std::size_t it) {
    IterationRecord r;
    r.iteration = it;
    r.loss = lb;
    r.candidate_mse = kNaN;
    r.mapr = kNaN;
    r.neurons = net.neurons();
    r.test_rmse = probe_rmse(net, options.probe, nullptr);
    history.records.push_back(r);
    if (options.progress) options.progress(r);
  };
  record(0);

  std::size_t flat_run = 0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    const double before = lb.total;
    lb = step(state, fobj, lcfg, lb);
    net = unflatten(net, state.x);
    record(it);
    flat_run = std::abs(lb.total - before) < kStagnationFloor ? flat_run + 1 : 0;
    if (flat_run >= kStagnationRun) {
      history.stop = StopReason::Stagnation;
      break;
    }
    const PlateauRule& pr = options.plateau;
    if (pr.window > 0 && it >= pr.window) {
      const double earlier = history.records[it - pr.window].loss.total;
      if (earlier - lb.total <= pr.rel_tol * lb.total) {
        history.stop = StopReason::Converged;
        break;
      }
    }
  }
  history.stages.push_back(make_stage(net, history.iterations(), options.probe));
  return {std::move(net), std::move(history)};
}

TrainResult run_adaptive(RbfNetwork net, const BsProblem& prob, const TrainingSet& ts, const AdaptiveConfig& acfg,
                         const LbfgsConfig& lcfg, TrainerStreams& streams, const TrainOptions& options) {
  validate(acfg);
  validate(lcfg);
  check_network(net);
  if (net.d != prob.d) throw std::invalid_argument("adaptive training: network and problem dimensions differ");

  FlatObjective fobj(prob, ts);
  RunHistory history;
  LossBreakdown lb;
  OptState state = fresh_state(net, fobj, lb);

  {
    IterationRecord r;
    r.loss = lb;
    r.candidate_mse = kNaN;
    r.mapr = kNaN;
    r.neurons = net.neurons();
    r.test_rmse = probe_rmse(net, options.probe, nullptr);
    history.records.push_back(r);
    if (options.progress) options.progress(r);
  }

  std::vector<double> trace;
  PointSet candidates(prob.input_dim());
  std::vector<double> point(prob.input_dim());
  for (std::size_t it = 1; it <= acfg.max_iters; ++it) {
    lb = step(state, fobj, lcfg, lb);
    net = unflatten(net, state.x);

    candidates = PointSet(prob.input_dim());
    candidates.reserve(acfg.s);
    for (std::size_t i = 0; i < acfg.s; ++i) {
      draw_interior_point(prob, streams.candidates, point);
      candidates.push_back(point);
    }
    const std::vector<double> residuals = pde_residuals(net, prob, candidates);
    trace.push_back(mean_square(residuals));

    IterationRecord r;
    r.iteration = it;
    r.loss = lb;
    r.candidate_mse = trace.back();
    r.mapr = mapr(trace, acfg.w);
    r.neurons = net.neurons();
    r.test_rmse = probe_rmse(net, options.probe, nullptr);
    history.records.push_back(r);

    if (it >= acfg.w + 1 && should_stop(history, acfg.w, acfg.epsilon)) {
      history.stop = StopReason::Converged;
      if (options.progress) options.progress(history.records.back());
      break;
    }
    // No insertion on the last capped iteration: the new neurons would never be trained.
    if (it % acfg.k == 0 && acfg.m > 0 && it < acfg.max_iters) {
      history.stages.push_back(make_stage(net, it, options.probe));
      net = insert_neurons(net, prob, candidates, residuals, acfg.m, streams.network, options.insert);
      InsertionEvent ev{it, PointSet(prob.input_dim())};
      for (std::size_t j = net.neurons() - acfg.m; j < net.neurons(); ++j) {
        ev.centres.push_back(std::span<const double>(net.centres.data() + j * net.input_dim(), net.input_dim()));
      }
      history.insertions.push_back(std::move(ev));
      history.records.back().neurons = net.neurons();
      state = fresh_state(net, fobj, lb);
    }
    if (options.progress) options.progress(history.records.back());
  }
  history.stages.push_back(make_stage(net, history.iterations(), options.probe));
  return {std::move(net), std::move(history)};
}

TrainResult train_adaptive(const BsProblem& prob, const TrainingSet& ts, KernelKind kind,
                           const AdaptiveConfig& acfg, const LbfgsConfig& lcfg, TrainerStreams& streams,
                           const InitOptions& init, const TrainOptions& options) {
  validate(acfg);
  RbfNetwork net = init_network(prob, acfg.n0, kind, streams.network, init);
  // Halton candidates continue the sequence after the initial centres.
  if (streams.candidates.is_halton() && streams.network.centres.is_halton()) {
    streams.candidates.advance_to(std::max(streams.candidates.position(), streams.network.centres.position()));
  }
  return run_adaptive(std::move(net), prob, ts, acfg, lcfg, streams, options);
}

TrainResult fine_tune(RbfNetwork net, const BsProblem& new_prob, const TrainingSet& ts, const AdaptiveConfig& acfg,
                      const LbfgsConfig& lcfg, TrainerStreams& streams, const TrainOptions& options) {
  if (net.d != new_prob.d) {
    throw std::invalid_argument("fine_tune: network has " + std::to_string(net.d) + " assets, problem has " +
                                std::to_string(new_prob.d));
  }
  return run_adaptive(std::move(net), new_prob, ts, acfg, lcfg, streams, options);
}

}  // namespace pirbf
