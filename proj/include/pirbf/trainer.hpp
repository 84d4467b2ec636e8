#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pirbf/lbfgs.hpp"
#include "pirbf/network.hpp"
#include "pirbf/problem.hpp"
#include "pirbf/sampling.hpp"

namespace pirbf {

enum class CandidateSource { PseudoRandom, Halton };

std::string_view to_string(CandidateSource source);
CandidateSource candidate_source_from_string(std::string_view name);

struct AdaptiveConfig {
  std::size_t n0 = 650;
  std::size_t k = 100;  // insertion period
  std::size_t m = 50;   // neurons per insertion
  std::size_t s = 1000;  // candidate points per iteration
  std::size_t w = 128;  // MAPR window
  double epsilon = 1e-6;
  std::size_t max_iters = 5000;
  CandidateSource source = CandidateSource::PseudoRandom;
};

void validate(const AdaptiveConfig& cfg);

/// Points with reference prices, scored after every iteration.
struct TestProbe {
  PointSet points;
  std::vector<double> reference;
};

/// l points uniform over (0, s_max)^d at time t, drawn from the TestPoints stream.
PointSet interior_test_points(const BsProblem& prob, std::size_t l, double t, std::uint64_t seed);

/// Probe priced by closed_form_price; nullopt when the problem has no closed form.
std::optional<TestProbe> closed_form_probe(const BsProblem& prob, PointSet points);

struct IterationRecord {
  std::size_t iteration = 0;
  LossBreakdown loss;
  double candidate_mse = 0.0;  // NaN when no candidates were drawn
  double mapr = 0.0;           // NaN when no candidates were drawn
  std::size_t neurons = 0;     // after any insertion at this iteration
  std::optional<double> test_rmse;
};

struct InsertionEvent {
  std::size_t iteration = 0;
  PointSet centres;
};

/// Snapshot before each insertion and at the end of a run.
struct StageRecord {
  std::size_t iteration = 0;
  std::size_t neurons = 0;
  std::optional<double> test_rmse;
  std::vector<double> predictions;  // at the probe points
};

enum class StopReason { Converged, Stagnation, IterationCap };

std::string_view to_string(StopReason reason);

struct RunHistory {
  std::vector<IterationRecord> records;  // records[0] is the starting network
  std::vector<InsertionEvent> insertions;
  std::vector<StageRecord> stages;
  StopReason stop = StopReason::IterationCap;

  [[nodiscard]] std::size_t iterations() const { return records.empty() ? 0 : records.back().iteration; }
};

/// Mean of the last min(w, n) entries.
double mapr(std::span<const double> residual_mses, std::size_t w);

/// ΔMAPR-w > 0 and |Δloss| < epsilon between the last two records, with MAPR-w
/// recomputed from the candidate_mse trace. False with fewer than two records.
bool should_stop(const RunHistory& history, std::size_t w, double epsilon);

struct InsertOptions {
  bool zero_new_weights = false;  // test hook: appended neurons contribute nothing
};

/// Appends m neurons centred at the candidates with the largest squared
/// residuals (ties to the lower index). Existing parameters are kept; new shapes
/// follow the initialization rule at the new centres, new weights are
/// Xavier-uniform with bound √(6/(N+m+1)).
RbfNetwork insert_neurons(const RbfNetwork& net, const BsProblem& prob, const PointSet& candidates,
                          std::span<const double> residuals, std::size_t m, NetworkStreams& streams,
                          const InsertOptions& options = {});

/// Every random source a training run draws from after the training set.
struct TrainerStreams {
  NetworkStreams network;
  UnitCubeSampler candidates;

  /// Halton mode takes initial centres and candidates from one Halton sequence.
  explicit TrainerStreams(std::uint64_t seed, CandidateSource source = CandidateSource::PseudoRandom);
};

struct TrainResult {
  RbfNetwork net;
  RunHistory history;
};

using ProgressFn = std::function<void(const IterationRecord&)>;

/// Fixed runs stop once the loss fell by less than rel_tol (relative to the
/// current loss) over the last `window` iterations. window = 0 disables it.
struct PlateauRule {
  std::size_t window = 0;
  double rel_tol = 0.0;
};

struct TrainOptions {
  const TestProbe* probe = nullptr;
  ProgressFn progress;
  InsertOptions insert;
  PlateauRule plateau;  // fixed runs only
};

/// Plain L-BFGS on a fixed network until max_iters, until |Δloss| < 1e-14 for
/// 10 consecutive iterations, or until the plateau rule fires (Converged).
TrainResult train_fixed(RbfNetwork net, const BsProblem& prob, const TrainingSet& ts, const LbfgsConfig& lcfg,
                        std::size_t max_iters, const TrainOptions& options = {});

/// Adaptive loop from a given network: one L-BFGS step, s fresh candidates,
/// stopping test, and every k iterations an insertion of m neurons followed by
/// a fresh optimizer state. The stopping test is armed once the MAPR window
/// is full (iteration ≥ w + 1).
TrainResult run_adaptive(RbfNetwork net, const BsProblem& prob, const TrainingSet& ts, const AdaptiveConfig& acfg,
                         const LbfgsConfig& lcfg, TrainerStreams& streams, const TrainOptions& options = {});

/// init_network with n0 neurons from `streams`, then run_adaptive.
TrainResult train_adaptive(const BsProblem& prob, const TrainingSet& ts, KernelKind kind,
                           const AdaptiveConfig& acfg, const LbfgsConfig& lcfg, TrainerStreams& streams,
                           const InitOptions& init = {}, const TrainOptions& options = {});

/// Resumes adaptive training of a trained network on new problem parameters;
/// the insertion schedule restarts at iteration 0.
TrainResult fine_tune(RbfNetwork net, const BsProblem& new_prob, const TrainingSet& ts, const AdaptiveConfig& acfg,
                      const LbfgsConfig& lcfg, TrainerStreams& streams, const TrainOptions& options = {});

}  // namespace pirbf
