#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "pirbf/app.hpp"

using namespace pirbf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pirbf_app_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig tiny(const char* mode) {
  std::string toml = R"([problem]
preset = "put1d"
[network]
neurons = 15
[training]
interior = 60
terminal = 20
boundary = 20
max_iters = 6
[adaptive]
n0 = 10
k = 3
m = 2
s = 4
w = 4
epsilon = 1e-3
max_iters = 12
[test]
points = 25
)";
  RunConfig c = parse_config(toml);
  c.mode = std::string(mode) == "adaptive" ? TrainMode::Adaptive : TrainMode::Fixed;
  return c;
}

}  // namespace

TEST(App, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(App, CsvWriter) {
  const fs::path dir = scratch("csv");
  {
    CsvWriter w((dir / "a.csv").string(), {"x", "n", "s", "o"});
    w.row({0.5, std::size_t{3}, std::string("ok"), std::optional<double>{}});
    w.row({1.0 / 3.0, std::size_t{0}, std::string(""), std::optional<double>{2.0}});
    EXPECT_THROW(w.row({1.0}), std::logic_error);
  }
  EXPECT_EQ(slurp(dir / "a.csv"), "x,n,s,o\n0.5,3,ok,\n0.33333333333333331,0,,2\n");
  fs::remove_all(dir);
}

TEST(App, TrimmedMean) {
  EXPECT_EQ(trimmed_mean({1, 2, 3, 100}), 2.0);
  EXPECT_EQ(trimmed_mean({5}), 5.0);
  EXPECT_EQ(trimmed_mean({4, 4, 4, 4}, 0.5), 4.0);
  EXPECT_NEAR(trimmed_mean({1, 2, 3, 4, 5, 6, 7, 8}), 4.5, 1e-15);
  EXPECT_EQ(trimmed_mean({1, 2, 3, 100}, 0.0), 26.5);
}

TEST(App, GridPoints) {
  GridSpec one{{{0.5, 0.5, 1}, {0.1, 0.1, 1}}, false};
  const PointSet a = grid_points(one, 1);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0][0], 0.5);
  EXPECT_EQ(a[0][1], 0.1);

  GridSpec rect{{{0, 10, 3}, {0, 4, 2}, {0.0, 0.0, 1}}, false};
  const PointSet b = grid_points(rect, 2);
  ASSERT_EQ(b.size(), 6u);
  EXPECT_EQ(b[0][1], 0.0);
  EXPECT_EQ(b[1][1], 4.0);  // last price axis varies fastest ahead of the time axis
  EXPECT_EQ(b[2][0], 5.0);
  EXPECT_EQ(b[5][0], 10.0);

  GridSpec diag{{{0, 4, 5}, {0, 4, 5}, {0, 4, 5}, {0, 4, 5}, {0.0, 0.0, 1}}, true};
  const PointSet c = grid_points(diag, 4);
  ASSERT_EQ(c.size(), 5u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i][0], static_cast<double>(i));
    EXPECT_EQ(c[i][3], c[i][0]);
    EXPECT_EQ(c[i][4], 0.0);
  }
}

TEST(App, TrainingRunIsReproducible) {
  const RunConfig cfg = tiny("fixed");
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  const RunOutcome oa = run_training(cfg, a.string());
  run_training(cfg, b.string());
  for (const char* f : {"history.csv", "test_points.csv", "checkpoint.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_TRUE(fs::exists(a / "summary.json"));
  EXPECT_EQ(oa.history.iterations(), 6u);
  EXPECT_EQ(oa.checkpoint.history.iterations, 6u);
  ASSERT_TRUE(oa.probe.has_value());
  EXPECT_EQ(oa.probe->points.size(), 25u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(App, AdaptiveRunWritesStages) {
  const RunConfig cfg = tiny("adaptive");
  const fs::path dir = scratch("adaptive");
  const RunOutcome o = run_training(cfg, dir.string());
  EXPECT_TRUE(fs::exists(dir / "stages.csv"));
  EXPECT_TRUE(fs::exists(dir / "insertions.csv"));
  EXPECT_GE(o.checkpoint.net.neurons(), 10u);
  EXPECT_EQ(o.checkpoint.net.neurons(), o.history.records.back().neurons);
  fs::remove_all(dir);
}

TEST(App, SweepMatchesSingleRuns) {
  const RunConfig cfg = tiny("fixed");
  const fs::path dir = scratch("sweep");
  const SweepResult res = run_sweep(cfg, {4}, dir.string());
  ASSERT_EQ(res.rows.size(), 1u);
  EXPECT_TRUE(res.rows[0].error.empty());
  RunConfig one = cfg;
  one.seed = 4;
  const RunOutcome o = run_training(one, "", {nullptr, false});
  EXPECT_EQ(res.rows[0].final_rmse, *o.checkpoint.history.final_test_rmse);
  EXPECT_EQ(res.trimmed_rmse, res.rows[0].final_rmse);
  EXPECT_EQ(res.trimmed_iterations, static_cast<double>(res.rows[0].iterations));
  EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "sweep_summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "seed_4" / "history.csv"));
  fs::remove_all(dir);
}

TEST(App, OverridesRejectStructuralChanges) {
  const BsProblem p = make_exchange_2d();
  ProblemOverrides ov;
  ov.sigma = std::vector<double>{0.3, 0.3, 0.3};
  EXPECT_THROW(apply_overrides(p, ov), ConfigError);
  ov = {};
  ov.rho.push_back({0, 2, 0.1});
  EXPECT_THROW(apply_overrides(p, ov), ConfigError);
  ov = {};
  ov.rho.push_back({1, 1, 0.5});
  EXPECT_THROW(apply_overrides(p, ov), ConfigError);
  ov = {};
  ov.sigma = std::vector<double>{0.25, 0.35};
  ov.r = 0.01;
  ov.rho.push_back({0, 1, 0.2});
  const BsProblem q = apply_overrides(p, ov);
  EXPECT_EQ(q.sigma, *ov.sigma);
  EXPECT_EQ(q.r, 0.01);
  EXPECT_EQ(q.correlation(0, 1), 0.2);
  EXPECT_EQ(q.correlation(1, 0), 0.2);
  EXPECT_EQ(q.d, p.d);
}

TEST(App, FineTuneWithoutOverridesResumes) {
  const RunConfig cfg = tiny("adaptive");
  const RunOutcome base = run_training(cfg, "", {nullptr, false});
  const fs::path dir = scratch("finetune");
  const RunOutcome ft = run_fine_tune(base.checkpoint, {}, dir.string());
  EXPECT_GE(ft.checkpoint.net.neurons(), base.checkpoint.net.neurons());
  EXPECT_LE(ft.history.records.back().loss.total, base.history.records.back().loss.total * (1 + 1e-12));
  EXPECT_TRUE(fs::exists(dir / "checkpoint.json"));
  fs::remove_all(dir);
}

TEST(App, PriceAndSurface) {
  PriceRequest req;
  req.problem = make_put_1d();
  const double pt[2] = {0.0, 0.0};
  req.points = PointSet(2);
  req.points.push_back(pt);
  const auto rows = price_points(req);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].value, 9.753099120283327, 1e-12);
  EXPECT_FALSE(rows[0].std_err.has_value());

  const RunConfig cfg = tiny("fixed");
  const RunOutcome o = run_training(cfg, "", {nullptr, false});
  const fs::path dir = scratch("surface");
  GridSpec g{{{0, 30, 4}, {0, 0.5, 3}}, false};
  EXPECT_EQ(export_surface(o.checkpoint.net, cfg.problem, g, (dir / "s.csv").string()), 0u);
  GridSpec out{{{0, 40, 3}, {0.0, 0.0, 1}}, false};
  EXPECT_EQ(export_surface(o.checkpoint.net, cfg.problem, out, (dir / "o.csv").string()), 1u);
  const std::string text = slurp(dir / "s.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 13);
  fs::remove_all(dir);
}
