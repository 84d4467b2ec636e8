#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pirbf/config.hpp"
#include "pirbf/network.hpp"
#include "pirbf/trainer.hpp"

namespace pirbf {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HistorySummary {
  std::size_t iterations = 0;
  std::string stop_reason;
  double final_loss = 0.0;
  std::optional<double> final_test_rmse;
  std::size_t neurons = 0;
};

/// Stream positions (engine words, or next Halton index) after the run.
struct StreamPositions {
  std::uint64_t centres = 0;
  std::uint64_t shapes = 0;
  std::uint64_t weights = 0;
  std::uint64_t candidates = 0;
};

struct Checkpoint {
  RunConfig config;
  RbfNetwork net;
  HistorySummary history;
  StreamPositions rng;
};

HistorySummary summarize(const RunHistory& history, const RbfNetwork& net);
StreamPositions positions(const TrainerStreams& streams);

/// Streams for `cfg` advanced to the saved positions.
TrainerStreams restore_streams(const RunConfig& cfg, const StreamPositions& pos);

/// Base64 (standard alphabet, padded) of the little-endian IEEE-754 bytes.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const std::string& text);

std::string serialize(const Checkpoint& ck);
Checkpoint deserialize(const std::string& text);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pirbf
