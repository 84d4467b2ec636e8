#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pirbf {

struct PutPayoff {
  double strike;
};
struct ExchangePayoff {};
struct BasketCallPayoff {
  double strike;
  std::vector<double> weights;
};
using PayoffSpec = std::variant<PutPayoff, ExchangePayoff, BasketCallPayoff>;

/// Dirichlet data on the truncated spatial boundary.
enum class BoundaryRule {
  Put1D,           // g(0,t) = K e^{-r(T-t)}, g(S_max,t) = 0
  Exchange2D,      // zero faces 0 / S1, far faces by the Margrabe formula
  BasketAllFaces,  // g = max(Σ α_i S_i − K e^{-r(T-t)}, 0) on every face
};

/// A d-asset Black-Scholes terminal-boundary value problem on (0, s_max)^d × [0, T].
/// Aggregate so that tests can build degenerate instances; presets and the config
/// loader always pass through validate().
struct BsProblem {
  std::string name;
  std::size_t d = 1;
  std::vector<double> sigma;
  std::vector<double> rho;  // d × d row-major
  double r = 0.0;
  double T = 1.0;
  double s_max = 1.0;
  PayoffSpec payoff;
  BoundaryRule boundary = BoundaryRule::Put1D;

  [[nodiscard]] double correlation(std::size_t i, std::size_t j) const { return rho[i * d + j]; }
  [[nodiscard]] std::size_t input_dim() const { return d + 1; }
};

/// Throws std::invalid_argument naming the offending field.
void validate(const BsProblem& prob);

BsProblem make_put_1d();
BsProblem make_exchange_2d();
BsProblem make_basket_4d();

/// Preset by name: put1d, exchange2d, basket4d.
BsProblem make_preset(std::string_view name);

double payoff_value(const BsProblem& prob, std::span<const double> S);

/// `point` is (S_1, …, S_d, t); at least one S_i must equal 0 or s_max exactly.
double boundary_value(const BsProblem& prob, std::span<const double> point);

/// Coefficients of 𝓛 = ∂_t + Σ_ij second_ij ∂²_ij + Σ_i first_i ∂_i + zeroth.
struct OperatorCoeffs {
  std::size_t d = 0;
  std::vector<double> second;  // d × d, symmetric, ½ ρ_ij σ_i σ_j S_i S_j
  std::vector<double> first;   // r S_i
  double zeroth = 0.0;         // −r
};

OperatorCoeffs operator_coeffs(const BsProblem& prob, std::span<const double> point);

/// Applies 𝓛 to explicit derivative data: dt, grad (d), hess (d × d row-major) and value.
double apply_operator(const OperatorCoeffs& c, double value, double dt, std::span<const double> grad,
                      std::span<const double> hess);

}  // namespace pirbf
