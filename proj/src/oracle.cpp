#include "pirbf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pirbf/parallel.hpp"
#include "pirbf/problem.hpp"
#include "pirbf/sampling.hpp"

namespace pirbf {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double bs_put_exact(double S, double t, double K, double r, double sigma, double T) {
  if (!(sigma > 0.0)) throw std::invalid_argument("bs_put_exact: sigma must be positive");
  if (t > T) throw std::invalid_argument("bs_put_exact: t exceeds T");
  if (S < 0.0) throw std::invalid_argument("bs_put_exact: negative price");
  const double tau = T - t;
  const double discounted_strike = K * std::exp(-r * tau);
  if (tau == 0.0) return std::max(K - S, 0.0);
  if (S == 0.0) return discounted_strike;
  const double vol = sigma * std::sqrt(tau);
  const double d1 = (std::log(S / K) + (r + 0.5 * sigma * sigma) * tau) / vol;
  const double d2 = d1 - vol;
  return discounted_strike * norm_cdf(-d2) - S * norm_cdf(-d1);
}

double margrabe_exact(double S1, double S2, double t, double sigma1, double sigma2, double rho12, double T) {
  if (S1 < 0.0 || S2 < 0.0) throw std::invalid_argument("margrabe_exact: negative price");
  if (t > T) throw std::invalid_argument("margrabe_exact: t exceeds T");
  if (S2 == 0.0) return S1;
  if (S1 == 0.0) return 0.0;
  const double tau = T - t;
  const double var = sigma1 * sigma1 + sigma2 * sigma2 - 2.0 * rho12 * sigma1 * sigma2;
  // Both assets drift at r under the pricing measure, so with zero relative
  // volatility the ratio is frozen and the value is the intrinsic spread.
  if (tau == 0.0 || !(var > 0.0)) return std::max(S1 - S2, 0.0);
  const double vol = std::sqrt(var * tau);
  const double d1 = (std::log(S1 / S2) + 0.5 * var * tau) / vol;
  const double d2 = d1 - vol;
  return S1 * norm_cdf(d1) - S2 * norm_cdf(d2);
}

double margrabe_exact(double S1, double S2, double t, const BsProblem& prob) {
  if (prob.d != 2) throw std::invalid_argument("margrabe_exact: problem must have two assets");
  return margrabe_exact(S1, S2, t, prob.sigma[0], prob.sigma[1], prob.correlation(0, 1), prob.T);
}

std::optional<double> closed_form_price(const BsProblem& prob, std::span<const double> point) {
  if (point.size() != prob.d + 1) throw std::invalid_argument("closed_form_price: point dimension mismatch");
  const double t = point[prob.d];
  if (const auto* put = std::get_if<PutPayoff>(&prob.payoff); put && prob.d == 1) {
    return bs_put_exact(point[0], t, put->strike, prob.r, prob.sigma[0], prob.T);
  }
  if (std::holds_alternative<ExchangePayoff>(prob.payoff) && prob.d == 2) {
    return margrabe_exact(point[0], point[1], t, prob);
  }
  return std::nullopt;
}

std::vector<double> cholesky_lower(std::span<const double> a, std::size_t n) {
  if (a.size() != n * n) throw std::invalid_argument("cholesky_lower: matrix is not n x n");
  std::vector<double> L(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) pivot -= L[j * n + k] * L[j * n + k];
    if (!(pivot > 1e-12)) {
      throw std::domain_error("cholesky_lower: pivot " + std::to_string(j) + " is " + std::to_string(pivot) +
                              " (matrix not positive definite)");
    }
    const double diag = std::sqrt(pivot);
    L[j * n + j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= L[i * n + k] * L[j * n + k];
      L[i * n + j] = v / diag;
    }
  }
  return L;
}

namespace {

constexpr std::size_t kMcBatch = 1 << 16;

// Welford accumulator; merging uses Chan's update so identical samples keep a
// zero variance exactly.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * (o.count / total);
    m2 += o.m2 + delta * delta * (count * o.count / total);
    count = total;
  }
};

}  // namespace

McEstimate mc_price(const BsProblem& prob, std::span<const double> S0, const McConfig& cfg) {
  const std::size_t d = prob.d;
  if (S0.size() != d) throw std::invalid_argument("mc_price: spot vector dimension mismatch");
  for (double s : S0) {
    if (s < 0.0) throw std::invalid_argument("mc_price: negative spot price");
  }
  if (cfg.n_paths < 2) throw std::invalid_argument("mc_price: need at least two paths");
  const std::vector<double> L = cholesky_lower(prob.rho, d);

  const double T = prob.T;
  const double discount = std::exp(-prob.r * T);
  std::vector<double> drift(d);
  std::vector<double> vol(d);
  for (std::size_t i = 0; i < d; ++i) {
    drift[i] = (prob.r - 0.5 * prob.sigma[i] * prob.sigma[i]) * T;
    vol[i] = prob.sigma[i] * std::sqrt(T);
  }

  // With antithetics one sample is the mean of a ± pair.
  const std::size_t samples = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
  const std::size_t batches = (samples + kMcBatch - 1) / kMcBatch;
  std::vector<Moments> partial(batches);

  parallel_for(batches, [&](std::size_t begin, std::size_t end) {
    std::vector<double> z(d);
    std::vector<double> w(d);
    std::vector<double> ST(d);
    const auto discounted_payoff = [&](double sign) {
      for (std::size_t i = 0; i < d; ++i) ST[i] = S0[i] * std::exp(drift[i] + vol[i] * sign * w[i]);
      return discount * payoff_value(prob, ST);
    };
    for (std::size_t b = begin; b < end; ++b) {
      RngStream rng(cfg.seed, StreamLabel::MonteCarlo, b);
      const std::size_t n = std::min(kMcBatch, samples - b * kMcBatch);
      Moments m;
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
        for (std::size_t i = 0; i < d; ++i) {
          double acc = 0.0;
          for (std::size_t k = 0; k <= i; ++k) acc += L[i * d + k] * z[k];
          w[i] = acc;
        }
        const double x = cfg.antithetic ? 0.5 * (discounted_payoff(1.0) + discounted_payoff(-1.0))
                                        : discounted_payoff(1.0);
        m.add(x);
      }
      partial[b] = m;
    }
  });

  Moments total;
  for (const Moments& m : partial) total.merge(m);
  const double variance = total.count > 1.0 ? total.m2 / (total.count - 1.0) : 0.0;
  return {total.mean, std::sqrt(variance / total.count)};
}

std::vector<double> pae(std::span<const double> predicted, std::span<const double> reference) {
  if (predicted.size() != reference.size()) throw std::invalid_argument("pae: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("pae: empty input");
  std::vector<double> out(predicted.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(predicted[i] - reference[i]);
  return out;
}

double rmse(std::span<const double> predicted, std::span<const double> reference) {
  if (predicted.size() != reference.size()) throw std::invalid_argument("rmse: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("rmse: empty input");
  std::vector<double> sq(predicted.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double e = predicted[i] - reference[i];
    sq[i] = e * e;
  }
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

}  // namespace pirbf
