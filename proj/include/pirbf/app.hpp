#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pirbf/checkpoint.hpp"
#include "pirbf/config.hpp"
#include "pirbf/oracle.hpp"
#include "pirbf/trainer.hpp"

namespace pirbf {

/// "%.17g", which round-trips every finite double.
std::string format_double(double v);

/// Comma-separated file with a header row and '\n' line endings. Empty
/// optionals become empty fields.
class CsvWriter {
 public:
  using Field = std::variant<double, std::size_t, std::string, std::optional<double>>;

  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<Field>& fields);

 private:
  std::string path_;
  std::size_t columns_;
  std::FILE* file_;
};

/// Mean after discarding the floor(fraction·n) samples farthest from the
/// median (ties broken towards the later sample).
double trimmed_mean(std::vector<double> values, double fraction = 0.25);

/// Reference prices for the configured test points: closed form where one
/// exists, Monte Carlo (10⁶ paths) for table points without one, none otherwise.
std::optional<TestProbe> make_probe(const RunConfig& cfg);

struct RunOutcome {
  Checkpoint checkpoint;
  RunHistory history;
  std::optional<TestProbe> probe;
  double wall_seconds = 0.0;
};

struct RunHooks {
  ProgressFn progress;
  bool write_files = true;
};

/// Trains per the configuration and, with write_files, writes checkpoint.json,
/// history.csv, test_points.csv, stages.csv and summary.json into out_dir.
RunOutcome run_training(const RunConfig& cfg, const std::string& out_dir, const RunHooks& hooks = {});

/// Problem parameters a fine-tune may change. Anything else is structural.
struct ProblemOverrides {
  std::optional<std::vector<double>> sigma;
  std::optional<double> r;
  struct RhoEntry {
    std::size_t i;
    std::size_t j;
    double value;
  };
  std::vector<RhoEntry> rho;
};

/// Applies overrides to a copy of `prob`; ConfigError on a structural change.
BsProblem apply_overrides(const BsProblem& prob, const ProblemOverrides& ov);

/// Resumes adaptive training of a checkpoint against overridden parameters.
RunOutcome run_fine_tune(const Checkpoint& ck, const ProblemOverrides& ov, const std::string& out_dir,
                         const RunHooks& hooks = {});

struct SweepRow {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double final_rmse = 0.0;
  std::string error;  // empty on success
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double trimmed_iterations = 0.0;
  double trimmed_rmse = 0.0;
};

/// One run per seed in out_dir/seed_<s>; writes sweep.csv and sweep_summary.csv.
SweepResult run_sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                      const RunHooks& hooks = {});

enum class PriceMode { ClosedForm, MonteCarlo, Network };

struct PricedPoint {
  std::vector<double> point;
  double value = 0.0;
  std::optional<double> std_err;
  std::optional<double> reference;
  std::optional<double> pae;
};

struct PriceRequest {
  PriceMode mode = PriceMode::ClosedForm;
  BsProblem problem;
  PointSet points;
  const RbfNetwork* net = nullptr;  // network mode
  PriceMode reference = PriceMode::ClosedForm;  // network mode
  McConfig mc;
};

/// Prices every point; network mode also fills the reference and PAE columns.
std::vector<PricedPoint> price_points(const PriceRequest& req);

/// table.csv: coordinates, value, std_err, reference, pae (plus an rmse line on
/// stdout, not in the file).
void write_price_table(const std::vector<PricedPoint>& rows, std::size_t d, const std::string& path);

/// One axis of a surface grid: a range with n ≥ 1 points, or a fixed value.
struct AxisSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 1;
};

struct GridSpec {
  std::vector<AxisSpec> axes;        // d + 1 entries (prices, then time)
  bool diagonal = false;             // all price axes share axes[0]'s values
};

/// Grid points in row-major order (last axis fastest).
PointSet grid_points(const GridSpec& spec, std::size_t d);

/// surface.csv rows: coordinates, predicted, and reference/pae when a closed
/// form exists. Returns the number of points outside the training domain.
std::size_t export_surface(const RbfNetwork& net, const BsProblem& prob, const GridSpec& spec,
                           const std::string& path);

}  // namespace pirbf
