#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pirbf/kernels.hpp"
#include "pirbf/problem.hpp"
#include "pirbf/sampling.hpp"

namespace pirbf {

enum class ShapeMode { Scalar, PerDimension };

std::string_view to_string(ShapeMode mode);
ShapeMode shape_mode_from_string(std::string_view name);

/// Single-hidden-layer RBF network over (S_1, …, S_d, t):
///   V̂(x) = Σ_n W_n φ(Σ_k C_kn² (x_k − x̄_kn)²) + bias.
/// Shapes enter squared, so their sign is irrelevant. Centres are not tied to
/// the domain.
struct RbfNetwork {
  std::size_t d = 1;
  KernelKind kind = KernelKind::Gaussian;
  ShapeMode shape_mode = ShapeMode::Scalar;
  std::vector<double> centres;  // N × (d+1)
  std::vector<double> shapes;   // N × (d+1), or N in scalar mode
  std::vector<double> weights;  // N
  double bias = 0.0;

  [[nodiscard]] std::size_t input_dim() const { return d + 1; }
  [[nodiscard]] std::size_t neurons() const { return weights.size(); }
  [[nodiscard]] std::size_t shape_width() const { return shape_mode == ShapeMode::Scalar ? 1 : d + 1; }
  [[nodiscard]] std::size_t param_count() const {
    return neurons() * (input_dim() + shape_width() + 1) + 1;
  }

  friend bool operator==(const RbfNetwork&, const RbfNetwork&) = default;
};

/// Throws std::invalid_argument if array sizes disagree, N = 0 or any entry is non-finite.
void check_network(const RbfNetwork& net);

/// Bitwise equality of every parameter (distinguishes −0.0 from 0.0).
bool bitwise_equal(const RbfNetwork& a, const RbfNetwork& b);

/// Flat parameter layout: centres, shapes, weights, bias.
using ParamVector = std::vector<double>;

ParamVector flatten(const RbfNetwork& net);
RbfNetwork unflatten(const RbfNetwork& layout, std::span<const double> params);

struct LossBreakdown {
  double pde = 0.0;
  double terminal = 0.0;
  double boundary = 0.0;
  double total = 0.0;
};

double evaluate(const RbfNetwork& net, std::span<const double> point);
std::vector<double> evaluate(const RbfNetwork& net, const PointSet& points);

/// 𝓛V̂ at a point, with every derivative taken analytically.
double pde_residual(const RbfNetwork& net, const BsProblem& prob, std::span<const double> point);
std::vector<double> pde_residuals(const RbfNetwork& net, const BsProblem& prob, const PointSet& points);

/// Loss and exact gradient over a fixed training set. Point data, operator
/// coefficients and Dirichlet targets are prepared once. Per-point sums run in
/// neuron order and per-parameter sums in point order, so results do not
/// depend on the worker count.
class Objective {
 public:
  Objective(const BsProblem& prob, const TrainingSet& ts);

  [[nodiscard]] LossBreakdown loss(const RbfNetwork& net) const;
  /// Writes ∂total/∂θ in flatten() order into `grad`.
  LossBreakdown loss_and_gradient(const RbfNetwork& net, std::span<double> grad) const;

  [[nodiscard]] const BsProblem& problem() const { return prob_; }

  struct Block {
    std::size_t count = 0;
    std::vector<double> x;       // dimension-major: x[k * count + p]
    std::vector<double> second;  // interior only: d*d arrays of ½ρσσSS
    std::vector<double> first;   // interior only: d arrays of r S
    std::vector<double> target;  // terminal/boundary only
  };

 private:
  BsProblem prob_;
  Block interior_;
  Block terminal_;
  Block boundary_;
};

LossBreakdown loss(const RbfNetwork& net, const BsProblem& prob, const TrainingSet& ts);
ParamVector loss_gradient(const RbfNetwork& net, const BsProblem& prob, const TrainingSet& ts);

/// Random streams consumed by initialization and neuron insertion.
struct NetworkStreams {
  UnitCubeSampler centres;
  RngStream shapes;
  RngStream weights;

  /// Pseudo-random centres, or Halton centres continuing from `halton_skip`.
  explicit NetworkStreams(std::uint64_t seed, bool halton_centres = false, std::uint64_t halton_skip = 0);
};

struct InitOptions {
  /// Defaults to Scalar for d = 1 and PerDimension otherwise.
  std::optional<ShapeMode> shape_mode;
  /// Replaces the drawn/formula shapes with one constant (ablation).
  std::optional<double> uniform_shape;
};

/// Per-dimension shape C = 1/√((hi − c)³ + c³), largest at the midpoint of [0, hi].
double midpoint_shape(double centre, double hi);

/// Initial shape row for a neuron centred at `centre` (scalar mode draws U[0,1)).
void initial_shapes(const BsProblem& prob, ShapeMode mode, std::span<const double> centre, RngStream& shapes,
                    std::span<double> out);

/// Centres uniform over [0,s_max]^d × [0,T]; shapes by mode; weights and bias
/// Xavier-uniform with bound √(6/(N+1)).
RbfNetwork init_network(const BsProblem& prob, std::size_t n, KernelKind kind, NetworkStreams& streams,
                        const InitOptions& options = {});

}  // namespace pirbf
