#include <string>

#include <gtest/gtest.h>

#include "pirbf/config.hpp"

using namespace pirbf;

namespace {

std::string path(const char* name) { return std::string(PIRBF_CONFIG_DIR) + "/" + name; }

void expect_error_naming(const std::string& toml, const std::string& field) {
  try {
    parse_config(toml);
    FAIL() << "expected ConfigError for " << field;
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Config, ShippedFilesParse) {
  for (const char* name : {"put1d_fixed.toml", "put1d_adaptive.toml", "put1d_halton.toml", "put1d_unit_shapes.toml",
                           "exchange2d.toml", "basket4d.toml", "basket4d_scaled.toml"}) {
    EXPECT_NO_THROW(load_config(path(name))) << name;
  }
  const RunConfig f = load_config(path("put1d_fixed.toml"));
  EXPECT_EQ(f.mode, TrainMode::Fixed);
  EXPECT_EQ(f.neurons, 1200u);
  EXPECT_EQ(f.problem.d, 1u);
  EXPECT_EQ(f.m_interior + f.m_terminal + f.m_boundary, 2800u);

  const RunConfig a = load_config(path("put1d_adaptive.toml"));
  EXPECT_EQ(a.mode, TrainMode::Adaptive);
  EXPECT_EQ(a.adaptive.n0, 650u);
  EXPECT_EQ(a.adaptive.k, 100u);
  EXPECT_EQ(a.adaptive.m, 50u);
  EXPECT_EQ(a.adaptive.s, 1000u);
  EXPECT_EQ(a.adaptive.w, 128u);
  EXPECT_EQ(a.adaptive.epsilon, 1e-6);

  const RunConfig b = load_config(path("basket4d.toml"));
  EXPECT_EQ(b.problem.d, 4u);
  EXPECT_EQ(b.adaptive.n0, 3500u);
  EXPECT_EQ(b.lbfgs.lr, 0.5);
  EXPECT_EQ(b.test.table, "basket");

  EXPECT_EQ(load_config(path("put1d_halton.toml")).adaptive.source, CandidateSource::Halton);
  EXPECT_EQ(a.lbfgs.inner_iters, 20u);
  EXPECT_EQ(b.lbfgs.inner_iters, 1u);
}

TEST(Config, MinimalDocumentUsesDefaults) {
  const RunConfig c = parse_config("[problem]\npreset = \"exchange2d\"\n");
  EXPECT_EQ(c.problem.d, 2u);
  EXPECT_EQ(c.kernel, KernelKind::Gaussian);
  EXPECT_EQ(c.mode, TrainMode::Fixed);
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, ErrorsNameTheField) {
  expect_error_naming("[problem]\npreset = \"put1d\"\n[network]\nkernel = \"sinc\"\n", "network.kernel");
  expect_error_naming("[problem]\npreset = \"put1d\"\n[network]\nwidth = 3\n", "network.width");
  expect_error_naming("[problem]\npreset = \"put1d\"\n[solver]\nx = 1\n", "solver");
  expect_error_naming("[problem]\npreset = \"put1d\"\n[training]\ninterior = -5\n", "training.interior");
  expect_error_naming("[problem]\npreset = \"put1d\"\n[training]\nmode = \"greedy\"\n", "training.mode");
  expect_error_naming("[problem]\npreset = \"put1d\"\n[lbfgs]\nlr = \"fast\"\n", "lbfgs.lr");
  expect_error_naming("[problem]\npreset = \"put1d\"\nsigma = [0.2, 0.3]\n", "problem.sigma");
  expect_error_naming("[network]\nkernel = \"gaussian\"\n", "problem.preset");
  expect_error_naming("[problem]\npreset = \"put1d\"\n[test]\ntable = \"exchange\"\n", "test.table");
  expect_error_naming("[problem]\npreset = \"put1d\"\n[test]\ntime = 2.0\n", "test.time");
  expect_error_naming("[problem\n", "config");
  expect_error_naming("[problem]\npreset = \"put1d\"\n[lbfgs]\ninner_iters = 0\n", "inner_iters");
}

TEST(Config, ProblemOverridesInFile) {
  const RunConfig c = parse_config("[problem]\npreset = \"exchange2d\"\nsigma = [0.3, 0.4]\nr = 0.02\n");
  EXPECT_EQ(c.problem.sigma, (std::vector<double>{0.3, 0.4}));
  EXPECT_EQ(c.problem.r, 0.02);
}

TEST(Config, TablePoints) {
  const PointSet ex = table_points("exchange", 0.0);
  ASSERT_EQ(ex.size(), 11u);
  EXPECT_EQ(ex[0][1], 0.0);
  EXPECT_EQ(ex[10][1], 40.0);
  EXPECT_EQ(ex[5][0], 20.0);
  const PointSet bk = table_points("basket", 0.25);
  ASSERT_EQ(bk.size(), 9u);
  EXPECT_EQ(bk[0][0], 1.0);
  EXPECT_EQ(bk[0][4], 0.25);
  EXPECT_THROW(table_points("cube", 0.0), std::invalid_argument);
}

TEST(Config, TrainingSetDependsOnSeed) {
  RunConfig c = load_config(path("put1d_fixed.toml"));
  const TrainingSet a = make_training_set(c);
  EXPECT_EQ(a.total(), 2800u);
  EXPECT_EQ(a, make_training_set(c));
  c.seed = 2;
  EXPECT_FALSE(a == make_training_set(c));
}
