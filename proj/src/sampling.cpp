#include "pirbf/sampling.hpp"

#include <array>
#include <boost/random/normal_distribution.hpp>
#include <stdexcept>
#include <string>

#include "pirbf/problem.hpp"

namespace pirbf {

namespace {

constexpr std::array<std::uint32_t, kMaxHaltonDims> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                                                23, 29, 31, 37, 41, 43, 47, 53};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, StreamLabel label, std::uint64_t substream) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ (static_cast<std::uint64_t>(label) * 0xD1B54A32D192ED03ULL));
  key = splitmix64(key ^ (substream * 0xAEF17502108EF2D9ULL));
  return key;
}

}  // namespace

std::string_view to_string(StreamLabel label) {
  switch (label) {
    case StreamLabel::Centres:
      return "centres";
    case StreamLabel::TrainingPoints:
      return "training_points";
    case StreamLabel::Shapes:
      return "shapes";
    case StreamLabel::Weights:
      return "weights";
    case StreamLabel::Candidates:
      return "candidates";
    case StreamLabel::TestPoints:
      return "test_points";
    case StreamLabel::MonteCarlo:
      return "monte_carlo";
  }
  return "unknown";
}

RngStream::RngStream(std::uint64_t seed, StreamLabel label, std::uint64_t substream)
    : seed_(seed), label_(label), substream_(substream), engine_(stream_key(seed, label, substream)) {}

RngStream::result_type RngStream::operator()() {
  ++position_;
  return engine_();
}

double RngStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  boost::random::normal_distribution<double> dist;
  return dist(*this);
}

void RngStream::advance_to(std::uint64_t position) {
  if (position < position_) {
    engine_.seed(stream_key(seed_, label_, substream_));
    position_ = 0;
  }
  engine_.discard(position - position_);
  position_ = position;
}

PointSet::PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0 || coords_.size() % dim_ != 0) {
    throw std::invalid_argument("point coordinates do not divide into rows of dimension " +
                                std::to_string(dim_));
  }
}

void PointSet::push_back(std::span<const double> point) {
  if (point.size() != dim_) {
    throw std::invalid_argument("point has dimension " + std::to_string(point.size()) + ", expected " +
                                std::to_string(dim_));
  }
  coords_.insert(coords_.end(), point.begin(), point.end());
}

double radical_inverse(std::uint64_t index, std::uint32_t base) {
  const double inv_base = 1.0 / base;
  double scale = inv_base;
  double result = 0.0;
  while (index > 0) {
    result += static_cast<double>(index % base) * scale;
    index /= base;
    scale *= inv_base;
  }
  return result;
}

void HaltonCursor::next(std::span<double> out) {
  if (out.size() > kMaxHaltonDims) {
    throw std::out_of_range("Halton sequence supports at most 16 dimensions");
  }
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = radical_inverse(next_index_, kPrimes[j]);
  ++next_index_;
}

PointSet halton(std::size_t n, std::size_t dims, std::uint64_t skip) {
  if (dims == 0 || dims > kMaxHaltonDims) {
    throw std::out_of_range("Halton dimension must be in [1, 16], got " + std::to_string(dims));
  }
  PointSet points(dims);
  points.reserve(n);
  HaltonCursor cursor(skip);
  std::vector<double> p(dims);
  for (std::size_t i = 0; i < n; ++i) {
    cursor.next(p);
    points.push_back(p);
  }
  return points;
}

void UnitCubeSampler::next(std::span<double> out) {
  if (auto* rng = std::get_if<RngStream>(&impl_)) {
    for (double& x : out) x = rng->uniform();
  } else {
    std::get<HaltonCursor>(impl_).next(out);
  }
}

std::uint64_t UnitCubeSampler::position() const {
  if (const auto* rng = std::get_if<RngStream>(&impl_)) return rng->position();
  return std::get<HaltonCursor>(impl_).next_index();
}

void UnitCubeSampler::advance_to(std::uint64_t position) {
  if (auto* rng = std::get_if<RngStream>(&impl_)) {
    rng->advance_to(position);
  } else {
    std::get<HaltonCursor>(impl_).seek(position);
  }
}

PointSet sample_uniform_box(std::size_t n, std::span<const double> lo, std::span<const double> hi,
                            RngStream& rng) {
  if (lo.size() != hi.size() || lo.empty()) {
    throw std::invalid_argument("box bounds must be non-empty and of equal dimension");
  }
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (!(lo[j] < hi[j])) {
      throw std::invalid_argument("degenerate box in dimension " + std::to_string(j));
    }
  }
  PointSet points(lo.size());
  points.reserve(n);
  std::vector<double> p(lo.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = rng.uniform(lo[j], hi[j]);
    points.push_back(p);
  }
  return points;
}

namespace {

// Rejection keeps every coordinate strictly inside (0, hi).
double draw_open(UnitCubeSampler& sampler, double hi) {
  for (;;) {
    double u = 0.0;
    sampler.next({&u, 1});
    const double x = u * hi;
    if (x > 0.0 && x < hi) return x;
  }
}

}  // namespace

void draw_interior_point(const BsProblem& prob, UnitCubeSampler& sampler, std::span<double> out) {
  const std::size_t d = prob.d;
  if (sampler.is_halton()) {
    // One sequence index per point; Halton coordinates of index ≥ 1 lie in (0, 1).
    std::vector<double> u(d + 1);
    sampler.next(u);
    for (std::size_t j = 0; j < d; ++j) out[j] = u[j] * prob.s_max;
    out[d] = u[d] * prob.T;
    return;
  }
  for (std::size_t j = 0; j < d; ++j) out[j] = draw_open(sampler, prob.s_max);
  out[d] = draw_open(sampler, prob.T);
}

TrainingSet build_training_set(const BsProblem& prob, std::size_t m_interior, std::size_t m_terminal,
                               std::size_t m_boundary, const PointSourceSpec& source) {
  if (m_interior == 0 || m_terminal == 0 || m_boundary == 0) {
    throw std::invalid_argument("every training partition needs at least one point");
  }
  UnitCubeSampler sampler =
      std::holds_alternative<PseudoRandomPoints>(source)
          ? UnitCubeSampler(RngStream(std::get<PseudoRandomPoints>(source).seed, StreamLabel::TrainingPoints))
          : UnitCubeSampler(HaltonCursor(std::get<HaltonPoints>(source).skip));

  const std::size_t d = prob.d;
  const std::size_t dim = d + 1;
  TrainingSet ts{PointSet(dim), PointSet(dim), PointSet(dim)};
  std::vector<double> p(dim);
  std::vector<double> u(d);

  ts.interior.reserve(m_interior);
  for (std::size_t i = 0; i < m_interior; ++i) {
    draw_interior_point(prob, sampler, p);
    ts.interior.push_back(p);
  }

  ts.terminal.reserve(m_terminal);
  for (std::size_t i = 0; i < m_terminal; ++i) {
    sampler.next(u);
    for (std::size_t j = 0; j < d; ++j) p[j] = u[j] * prob.s_max;
    p[d] = prob.T;
    ts.terminal.push_back(p);
  }

  ts.boundary.reserve(m_boundary);
  const std::size_t faces = 2 * d;
  for (std::size_t i = 0; i < m_boundary; ++i) {
    const std::size_t face = i % faces;
    const std::size_t pinned = face / 2;
    // d free coordinates: the other d−1 prices, then time.
    for (;;) {
      sampler.next(u);
      std::size_t k = 0;
      for (std::size_t j = 0; j < d; ++j) {
        if (j == pinned) continue;
        p[j] = u[k++] * prob.s_max;
      }
      p[d] = u[k] * prob.T;
      if (p[d] > 0.0 && p[d] < prob.T) break;
    }
    p[pinned] = (face % 2 == 0) ? 0.0 : prob.s_max;
    ts.boundary.push_back(p);
  }
  return ts;
}

}  // namespace pirbf
