#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace pirbf {

/// Radial profile φ(u) of the scaled squared distance u = Σ C_i² (x_i − x̄_i)².
/// All kinds satisfy φ(0) = 1 and are strictly decreasing on u ≥ 0.
enum class KernelKind { Gaussian, InverseQuadratic, InverseMultiquadric };

std::string_view to_string(KernelKind kind);
KernelKind kernel_from_string(std::string_view name);

double kernel_value(KernelKind kind, double u);
double kernel_d1(KernelKind kind, double u);
double kernel_d2(KernelKind kind, double u);
double kernel_d3(KernelKind kind, double u);

/// φ and its first three u-derivatives at one point.
struct KernelJet {
  double f;
  double d1;
  double d2;
  double d3;
};

namespace detail {

/// e^{-u} for u ≥ 0 without branches, so loops calling it vectorize. Relative
/// error is within a few ulp of std::exp for u ≤ 708; beyond that the result
/// is clamped to e^{-708} ≈ 3e-308.
inline double exp_neg(double u) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShift = 0x1.8p52;  // adding it rounds to an integer held in the low mantissa bits
  const double x = -u > -708.0 ? -u : -708.0;
  const double t = x * kLog2e + kShift;
  const double n = t - kShift;
  const double r = (x - n * kLn2Hi) - n * kLn2Lo;
  // Taylor series of e^r on |r| ≤ ln2/2; the r^14 term is below 1e-17.
  double p = 1.0 / 6227020800.0;
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  const std::uint64_t scale = (std::bit_cast<std::uint64_t>(t) - std::bit_cast<std::uint64_t>(kShift)) << 52;
  return std::bit_cast<double>(std::bit_cast<std::uint64_t>(p) + scale);
}

// Unchecked evaluation for the hot loops; u must be finite and non-negative.
template <KernelKind K>
inline KernelJet kernel_jet(double u) {
  if constexpr (K == KernelKind::Gaussian) {
    const double e = exp_neg(u);
    return {e, -e, e, -e};
  } else if constexpr (K == KernelKind::InverseQuadratic) {
    const double q = 1.0 / (1.0 + u);
    const double q2 = q * q;
    return {q, -q2, 2.0 * q2 * q, -6.0 * q2 * q2};
  } else {
    const double q = 1.0 / (1.0 + u);
    const double s = std::sqrt(q);
    const double sq = s * q;
    return {s, -0.5 * sq, 0.75 * sq * q, -1.875 * sq * q * q};
  }
}

}  // namespace detail

KernelJet kernel_jet(KernelKind kind, double u);

}  // namespace pirbf
