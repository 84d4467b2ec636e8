#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pirbf {

struct BsProblem;

/// Standard normal CDF via erfc, accurate to ~1e-16 absolute.
double norm_cdf(double x);

/// European put under Black-Scholes, valued at time t for expiry T.
double bs_put_exact(double S, double t, double K, double r, double sigma, double T);

/// Margrabe price of the option to exchange asset 2 for asset 1.
double margrabe_exact(double S1, double S2, double t, double sigma1, double sigma2, double rho12, double T);
double margrabe_exact(double S1, double S2, double t, const BsProblem& prob);

/// Closed-form price at (S_1, …, S_d, t) for the put and exchange problems;
/// nullopt for problems without one.
std::optional<double> closed_form_price(const BsProblem& prob, std::span<const double> point);

/// Lower-triangular L with L Lᵀ = a (n × n row-major). Throws std::domain_error
/// naming the pivot when one falls to 1e-12 or below.
std::vector<double> cholesky_lower(std::span<const double> a, std::size_t n);

struct McConfig {
  std::size_t n_paths = 1'000'000;
  std::uint64_t seed = 0;
  bool antithetic = true;
};

struct McEstimate {
  double price;
  double std_err;
};

/// Discounted expected payoff under correlated GBM, sampled exactly at T.
/// Paths are generated in fixed-size batches, each on its own MonteCarlo
/// substream, so the estimate does not depend on the thread count.
McEstimate mc_price(const BsProblem& prob, std::span<const double> S0, const McConfig& cfg);

std::vector<double> pae(std::span<const double> predicted, std::span<const double> reference);
double rmse(std::span<const double> predicted, std::span<const double> reference);

}  // namespace pirbf
