#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace pirbf {

struct BsProblem;

/// Purpose tag of a random stream. Mixed into the seed so that streams sharing a
/// seed are independent.
enum class StreamLabel : std::uint64_t {
  Centres = 1,
  TrainingPoints = 2,
  Shapes = 3,
  Weights = 4,
  Candidates = 5,
  TestPoints = 6,
  MonteCarlo = 7,
};

std::string_view to_string(StreamLabel label);

/// Deterministic random stream: std::mt19937_64 keyed by SplitMix64(seed, label,
/// substream). Uniforms take the top 53 bits of one engine word; normals use the
/// Boost ziggurat. The position counts engine words, so a stream is restored
/// exactly by replaying `position()` words.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, StreamLabel label, std::uint64_t substream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] StreamLabel label() const { return label_; }
  [[nodiscard]] std::uint64_t substream() const { return substream_; }
  [[nodiscard]] std::uint64_t position() const { return position_; }
  void advance_to(std::uint64_t position);

 private:
  std::uint64_t seed_;
  StreamLabel label_;
  std::uint64_t substream_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
};

/// Row-major list of points of a fixed dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> coords);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  [[nodiscard]] bool empty() const { return coords_.empty(); }
  [[nodiscard]] std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  [[nodiscard]] std::span<double> operator[](std::size_t i) { return {coords_.data() + i * dim_, dim_}; }
  [[nodiscard]] const std::vector<double>& coords() const { return coords_; }

  void push_back(std::span<const double> point);
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

inline constexpr std::size_t kMaxHaltonDims = 16;

/// Radical inverse of `index` in base `base`.
double radical_inverse(std::uint64_t index, std::uint32_t base);

/// Points skip+1 … skip+n of the Halton sequence, dimension j using the j-th prime.
PointSet halton(std::size_t n, std::size_t dims, std::uint64_t skip = 0);

/// Stateful Halton source: each draw consumes one sequence index.
class HaltonCursor {
 public:
  explicit HaltonCursor(std::uint64_t skip = 0) : next_index_(skip + 1) {}
  void next(std::span<double> out);
  [[nodiscard]] std::uint64_t next_index() const { return next_index_; }
  void seek(std::uint64_t next_index) { next_index_ = next_index; }

 private:
  std::uint64_t next_index_;
};

/// A source of points in the open-ish unit cube, pseudo-random or Halton.
class UnitCubeSampler {
 public:
  explicit UnitCubeSampler(RngStream rng) : impl_(std::move(rng)) {}
  explicit UnitCubeSampler(HaltonCursor cursor) : impl_(cursor) {}

  /// Fills `out` with one point of dimension out.size().
  void next(std::span<double> out);
  [[nodiscard]] bool is_halton() const { return std::holds_alternative<HaltonCursor>(impl_); }
  /// Engine words consumed (pseudo-random) or next sequence index (Halton).
  [[nodiscard]] std::uint64_t position() const;
  /// Restores a position previously returned by position().
  void advance_to(std::uint64_t position);

 private:
  std::variant<RngStream, HaltonCursor> impl_;
};

PointSet sample_uniform_box(std::size_t n, std::span<const double> lo, std::span<const double> hi,
                            RngStream& rng);

/// Partitioned collocation points: interior Ω × (0,T), terminal Ω × {T} and
/// spatial boundary ∂Ω × (0,T).
struct TrainingSet {
  PointSet interior;
  PointSet terminal;
  PointSet boundary;

  [[nodiscard]] std::size_t total() const { return interior.size() + terminal.size() + boundary.size(); }
  friend bool operator==(const TrainingSet&, const TrainingSet&) = default;
};

struct PseudoRandomPoints {
  std::uint64_t seed;
};
struct HaltonPoints {
  std::uint64_t skip = 0;
};
using PointSourceSpec = std::variant<PseudoRandomPoints, HaltonPoints>;

/// Boundary points go round-robin over the 2d spatial faces (face = index mod 2d,
/// face f pins S_{f/2} to 0 when f is even and to s_max when odd).
TrainingSet build_training_set(const BsProblem& prob, std::size_t m_interior, std::size_t m_terminal,
                               std::size_t m_boundary, const PointSourceSpec& source);

/// Draws one point of Ω × (0,T) with every coordinate strictly inside.
void draw_interior_point(const BsProblem& prob, UnitCubeSampler& sampler, std::span<double> out);

}  // namespace pirbf
