#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pirbf/kernels.hpp"
#include "pirbf/lbfgs.hpp"
#include "pirbf/network.hpp"
#include "pirbf/problem.hpp"
#include "pirbf/trainer.hpp"

namespace pirbf {

/// Schema or value error in a run configuration; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TrainMode { Fixed, Adaptive };

std::string_view to_string(TrainMode mode);

struct TestConfig {
  std::size_t points = 500;
  double time = 0.0;
  /// "exchange" or "basket" replaces the random points with the fixed table points.
  std::string table;
};

struct RunConfig {
  std::string preset;
  BsProblem problem;
  KernelKind kernel = KernelKind::Gaussian;
  std::size_t neurons = 1200;  // fixed mode
  std::optional<ShapeMode> shape_mode;
  std::optional<double> uniform_shape;
  TrainMode mode = TrainMode::Fixed;
  std::size_t m_interior = 1600;
  std::size_t m_terminal = 400;
  std::size_t m_boundary = 800;
  CandidateSource point_source = CandidateSource::PseudoRandom;
  std::size_t max_iters = 2000;  // fixed mode
  PlateauRule plateau;
  std::uint64_t seed = 1;
  AdaptiveConfig adaptive;
  LbfgsConfig lbfgs;
  TestConfig test;
  std::string output_dir = "out";
};

/// Parses a TOML document. Unknown sections or keys are errors.
RunConfig parse_config(std::string_view toml_text);
RunConfig load_config(const std::string& path);

/// Checks every cross-field constraint; throws ConfigError.
void validate(const RunConfig& cfg);

/// Training set implied by the configuration (points depend on the seed only).
TrainingSet make_training_set(const RunConfig& cfg);

/// Initialization options implied by the configuration.
InitOptions init_options(const RunConfig& cfg);

/// Points of the fixed comparison tables at time t: 11 points S₁ = 20,
/// S₂ = 0, 4, …, 40 for the exchange option; (1,1,1,1) and its eight ±0.1
/// neighbours for the basket.
PointSet table_points(std::string_view table, double t);

}  // namespace pirbf
