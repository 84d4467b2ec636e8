#include "pirbf/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pirbf/oracle.hpp"

namespace pirbf {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw std::invalid_argument("problem: " + what); }

double basket_sum(const BasketCallPayoff& basket, std::span<const double> S) {
  double sum = 0.0;
  for (std::size_t i = 0; i < basket.weights.size(); ++i) sum += basket.weights[i] * S[i];
  return sum;
}

}  // namespace

void validate(const BsProblem& prob) {
  const std::size_t d = prob.d;
  if (d == 0) invalid("d must be at least 1");
  if (prob.sigma.size() != d) invalid("sigma must have d entries");
  if (prob.rho.size() != d * d) invalid("rho must be d x d");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(prob.sigma[i] > 0.0) || !std::isfinite(prob.sigma[i])) {
      invalid("sigma[" + std::to_string(i) + "] must be positive");
    }
  }
  if (!(prob.r >= 0.0) || !std::isfinite(prob.r)) invalid("r must be non-negative");
  if (!(prob.T > 0.0) || !std::isfinite(prob.T)) invalid("T must be positive");
  if (!(prob.s_max > 0.0) || !std::isfinite(prob.s_max)) invalid("s_max must be positive");
  for (std::size_t i = 0; i < d; ++i) {
    if (prob.correlation(i, i) != 1.0) invalid("rho diagonal must be 1");
    for (std::size_t j = 0; j < d; ++j) {
      const double c = prob.correlation(i, j);
      if (c != prob.correlation(j, i)) invalid("rho must be symmetric");
      if (!(std::abs(c) <= 1.0)) invalid("rho entries must lie in [-1, 1]");
    }
  }
  try {
    (void)cholesky_lower(prob.rho, d);
  } catch (const std::domain_error& e) {
    invalid(std::string("rho is not positive definite: ") + e.what());
  }

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PutPayoff>) {
          if (d != 1) invalid("put payoff needs d = 1");
          if (!(p.strike > 0.0)) invalid("strike must be positive");
        } else if constexpr (std::is_same_v<P, ExchangePayoff>) {
          if (d != 2) invalid("exchange payoff needs d = 2");
        } else {
          if (!(p.strike > 0.0)) invalid("strike must be positive");
          if (p.weights.size() != d) invalid("basket weights must have d entries");
          for (double a : p.weights) {
            if (!(a >= 0.0)) invalid("basket weights must be non-negative");
          }
        }
      },
      prob.payoff);

  const bool rule_ok = (prob.boundary == BoundaryRule::Put1D && std::holds_alternative<PutPayoff>(prob.payoff)) ||
                       (prob.boundary == BoundaryRule::Exchange2D &&
                        std::holds_alternative<ExchangePayoff>(prob.payoff)) ||
                       (prob.boundary == BoundaryRule::BasketAllFaces &&
                        std::holds_alternative<BasketCallPayoff>(prob.payoff));
  if (!rule_ok) invalid("boundary rule does not match payoff");
}

BsProblem make_put_1d() {
  BsProblem p;
  p.name = "put1d";
  p.d = 1;
  p.sigma = {0.2};
  p.rho = {1.0};
  p.r = 0.05;
  p.T = 0.5;
  p.s_max = 30.0;
  p.payoff = PutPayoff{10.0};
  p.boundary = BoundaryRule::Put1D;
  validate(p);
  return p;
}

BsProblem make_exchange_2d() {
  BsProblem p;
  p.name = "exchange2d";
  p.d = 2;
  p.sigma = {0.2, 0.2};
  p.rho = {1.0, 0.5, 0.5, 1.0};
  p.r = 0.05;
  p.T = 1.0;
  p.s_max = 40.0;
  p.payoff = ExchangePayoff{};
  p.boundary = BoundaryRule::Exchange2D;
  validate(p);
  return p;
}

BsProblem make_basket_4d() {
  BsProblem p;
  p.name = "basket4d";
  p.d = 4;
  p.sigma = {0.4, 0.25, 0.3, 0.4};
  // clang-format off
  p.rho = { 1.0,  0.1, -0.4,  0.2,
            0.1,  1.0,  0.3, -0.1,
           -0.4,  0.3,  1.0,  0.0,
            0.2, -0.1,  0.0,  1.0};
  // clang-format on
  p.r = 0.05;
  p.T = 1.0;
  p.s_max = 4.0;
  p.payoff = BasketCallPayoff{1.0, {0.25, 0.25, 0.25, 0.25}};
  p.boundary = BoundaryRule::BasketAllFaces;
  validate(p);
  return p;
}

BsProblem make_preset(std::string_view name) {
  if (name == "put1d") return make_put_1d();
  if (name == "exchange2d") return make_exchange_2d();
  if (name == "basket4d") return make_basket_4d();
  throw std::invalid_argument("unknown problem preset '" + std::string(name) +
                              "' (expected put1d, exchange2d or basket4d)");
}

double payoff_value(const BsProblem& prob, std::span<const double> S) {
  if (S.size() < prob.d) throw std::invalid_argument("payoff_value: point has too few coordinates");
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PutPayoff>) {
          return std::max(p.strike - S[0], 0.0);
        } else if constexpr (std::is_same_v<P, ExchangePayoff>) {
          return std::max(S[0] - S[1], 0.0);
        } else {
          return std::max(basket_sum(p, S) - p.strike, 0.0);
        }
      },
      prob.payoff);
}

double boundary_value(const BsProblem& prob, std::span<const double> point) {
  const std::size_t d = prob.d;
  if (point.size() != d + 1) throw std::invalid_argument("boundary_value: point dimension mismatch");
  const double t = point[d];
  const auto on_zero = [&](std::size_t i) { return point[i] == 0.0; };
  const auto on_far = [&](std::size_t i) { return point[i] == prob.s_max; };
  bool on_boundary = false;
  for (std::size_t i = 0; i < d; ++i) on_boundary = on_boundary || on_zero(i) || on_far(i);
  if (!on_boundary) throw std::invalid_argument("boundary_value: point is not on the spatial boundary");

  switch (prob.boundary) {
    case BoundaryRule::Put1D: {
      const double K = std::get<PutPayoff>(prob.payoff).strike;
      return on_zero(0) ? K * std::exp(-prob.r * (prob.T - t)) : 0.0;
    }
    case BoundaryRule::Exchange2D: {
      if (on_zero(0)) return 0.0;
      if (on_zero(1)) return point[0];
      return margrabe_exact(point[0], point[1], t, prob);
    }
    case BoundaryRule::BasketAllFaces: {
      const auto& basket = std::get<BasketCallPayoff>(prob.payoff);
      return std::max(basket_sum(basket, point) - basket.strike * std::exp(-prob.r * (prob.T - t)), 0.0);
    }
  }
  throw std::invalid_argument("boundary_value: unknown boundary rule");
}

OperatorCoeffs operator_coeffs(const BsProblem& prob, std::span<const double> point) {
  const std::size_t d = prob.d;
  OperatorCoeffs c;
  c.d = d;
  c.second.resize(d * d);
  c.first.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      c.second[i * d + j] =
          0.5 * prob.correlation(i, j) * prob.sigma[i] * prob.sigma[j] * point[i] * point[j];
    }
    c.first[i] = prob.r * point[i];
  }
  c.zeroth = -prob.r;
  return c;
}

double apply_operator(const OperatorCoeffs& c, double value, double dt, std::span<const double> grad,
                      std::span<const double> hess) {
  double acc = dt + c.zeroth * value;
  for (std::size_t i = 0; i < c.d; ++i) {
    acc += c.first[i] * grad[i];
    for (std::size_t j = 0; j < c.d; ++j) acc += c.second[i * c.d + j] * hess[i * c.d + j];
  }
  return acc;
}

}  // namespace pirbf
