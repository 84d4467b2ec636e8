#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pirbf {

struct LbfgsConfig {
  std::size_t history = 10;
  double lr = 1.0;  // initial trial step of every line search
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  std::size_t max_line_search_evals = 25;
  std::size_t max_iters = 5000;
  /// Quasi-Newton updates per counted iteration, as in a PyTorch LBFGS step()
  /// with max_iter > 1. The inner loop also ends once |Δloss| between updates
  /// falls below inner_tolerance_change.
  std::size_t inner_iters = 1;
  double inner_tolerance_change = 1e-9;
};

void validate(const LbfgsConfig& cfg);

/// Returns f(x) and writes ∇f(x) into the second argument.
using ObjectiveFn = std::function<double(std::span<const double>, std::span<double>)>;

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;  // 1 / sᵀy
};

struct OptState {
  std::vector<double> x;
  std::vector<double> grad;
  double loss = 0.0;
  std::deque<CurvaturePair> memory;
  std::size_t iteration = 0;
  std::size_t evaluations = 0;
  bool last_search_failed = false;
};

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluates the objective at x0 to seed a fresh state with empty memory.
OptState make_state(std::vector<double> x0, const ObjectiveFn& objective);

/// One outer L-BFGS iteration: two-loop direction (steepest descent with empty
/// memory), strong-Wolfe bracketing/zoom line search from α = lr. When the
/// search runs out of evaluations the lowest point seen is kept (or none, if
/// nothing beat the start) and the memory is cleared. The loss never increases.
OptState lbfgs_iterate(OptState state, const ObjectiveFn& objective, const LbfgsConfig& cfg);

OptState reset_memory(OptState state);

/// Two-loop recursion: −H∇f with H₀ = γI, γ = sᵀy/yᵀy of the newest pair.
std::vector<double> lbfgs_direction(const std::deque<CurvaturePair>& memory, std::span<const double> grad);

}  // namespace pirbf
