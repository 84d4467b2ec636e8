#include "pirbf/kernels.hpp"

#include <stdexcept>
#include <string>

namespace pirbf {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Gaussian:
      return "gaussian";
    case KernelKind::InverseQuadratic:
      return "inverse_quadratic";
    case KernelKind::InverseMultiquadric:
      return "inverse_multiquadric";
  }
  return "unknown";
}

KernelKind kernel_from_string(std::string_view name) {
  if (name == "gaussian") return KernelKind::Gaussian;
  if (name == "inverse_quadratic") return KernelKind::InverseQuadratic;
  if (name == "inverse_multiquadric") return KernelKind::InverseMultiquadric;
  throw std::invalid_argument("unknown kernel '" + std::string(name) +
                              "' (expected gaussian, inverse_quadratic or inverse_multiquadric)");
}

KernelJet kernel_jet(KernelKind kind, double u) {
  if (!std::isfinite(u) || u < 0.0) {
    throw std::domain_error("kernel argument must be finite and non-negative, got " +
                            std::to_string(u));
  }
  switch (kind) {
    case KernelKind::Gaussian:
      return detail::kernel_jet<KernelKind::Gaussian>(u);
    case KernelKind::InverseQuadratic:
      return detail::kernel_jet<KernelKind::InverseQuadratic>(u);
    case KernelKind::InverseMultiquadric:
      return detail::kernel_jet<KernelKind::InverseMultiquadric>(u);
  }
  throw std::invalid_argument("invalid kernel kind");
}

double kernel_value(KernelKind kind, double u) { return kernel_jet(kind, u).f; }
double kernel_d1(KernelKind kind, double u) { return kernel_jet(kind, u).d1; }
double kernel_d2(KernelKind kind, double u) { return kernel_jet(kind, u).d2; }
double kernel_d3(KernelKind kind, double u) { return kernel_jet(kind, u).d3; }

}  // namespace pirbf
