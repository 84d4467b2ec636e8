#include "pirbf/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace pirbf {

namespace {

// Typed access to one [section] with the key names needed for diagnostics.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  void allow(std::initializer_list<std::string_view> keys) const {
    if (table_ == nullptr) return;
    const std::set<std::string_view> allowed(keys);
    for (const auto& [key, node] : *table_) {
      if (!allowed.contains(key.str())) throw ConfigError(field(key.str()) + ": unknown key");
    }
  }

  [[nodiscard]] std::string field(std::string_view key) const { return name_ + "." + std::string(key); }

  [[nodiscard]] const toml::node* node(std::string_view key) const {
    return table_ == nullptr ? nullptr : table_->get(key);
  }

  [[nodiscard]] std::optional<double> real(std::string_view key) const {
    const toml::node* n = node(key);
    if (n == nullptr) return std::nullopt;
    if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
    throw ConfigError(field(key) + ": expected a number");
  }

  [[nodiscard]] std::optional<std::size_t> count(std::string_view key) const {
    const toml::node* n = node(key);
    if (n == nullptr) return std::nullopt;
    const auto v = n->value<std::int64_t>();
    if (!n->is_integer() || !v || *v < 0) throw ConfigError(field(key) + ": expected a non-negative integer");
    return static_cast<std::size_t>(*v);
  }

  [[nodiscard]] std::optional<std::string> text(std::string_view key) const {
    const toml::node* n = node(key);
    if (n == nullptr) return std::nullopt;
    if (!n->is_string()) throw ConfigError(field(key) + ": expected a string");
    return *n->value<std::string>();
  }

  [[nodiscard]] std::optional<std::vector<double>> reals(std::string_view key) const {
    const toml::node* n = node(key);
    if (n == nullptr) return std::nullopt;
    const toml::array* arr = n->as_array();
    if (arr == nullptr) throw ConfigError(field(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const toml::node& e : *arr) {
      const auto v = e.value<double>();
      if (!v || !(e.is_floating_point() || e.is_integer())) {
        throw ConfigError(field(key) + ": expected an array of numbers");
      }
      out.push_back(*v);
    }
    return out;
  }

  [[nodiscard]] std::optional<std::vector<std::vector<double>>> matrix(std::string_view key) const {
    const toml::node* n = node(key);
    if (n == nullptr) return std::nullopt;
    const toml::array* arr = n->as_array();
    if (arr == nullptr) throw ConfigError(field(key) + ": expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (const toml::node& row : *arr) {
      const toml::array* r = row.as_array();
      if (r == nullptr) throw ConfigError(field(key) + ": expected an array of arrays");
      std::vector<double> values;
      for (const toml::node& e : *r) {
        const auto v = e.value<double>();
        if (!v || !(e.is_floating_point() || e.is_integer())) throw ConfigError(field(key) + ": non-numeric entry");
        values.push_back(*v);
      }
      out.push_back(std::move(values));
    }
    return out;
  }

 private:
  const toml::table* table_;
  std::string name_;
};

template <class F>
auto translate(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

void read_problem(const Section& sec, RunConfig& cfg) {
  sec.allow({"preset", "sigma", "r", "rho", "T", "s_max", "strike", "weights"});
  const auto preset = sec.text("preset");
  if (!preset) throw ConfigError("problem.preset: required");
  cfg.preset = *preset;
  cfg.problem = translate(sec.field("preset"), [&] { return make_preset(*preset); });
  BsProblem& p = cfg.problem;
  if (auto v = sec.reals("sigma")) {
    if (v->size() != p.d) {
      throw ConfigError(sec.field("sigma") + ": expected " + std::to_string(p.d) + " entries for preset " + *preset);
    }
    p.sigma = *v;
  }
  if (auto v = sec.real("r")) p.r = *v;
  if (auto v = sec.matrix("rho")) {
    if (v->size() != p.d) throw ConfigError(sec.field("rho") + ": expected a " + std::to_string(p.d) + "x" + std::to_string(p.d) + " matrix");
    std::vector<double> flat;
    for (const auto& row : *v) {
      if (row.size() != p.d) throw ConfigError(sec.field("rho") + ": ragged matrix");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    p.rho = std::move(flat);
  }
  if (auto v = sec.real("T")) p.T = *v;
  if (auto v = sec.real("s_max")) p.s_max = *v;
  if (auto v = sec.real("strike")) {
    if (auto* put = std::get_if<PutPayoff>(&p.payoff)) {
      put->strike = *v;
    } else if (auto* basket = std::get_if<BasketCallPayoff>(&p.payoff)) {
      basket->strike = *v;
    } else {
      throw ConfigError(sec.field("strike") + ": payoff of preset " + *preset + " has no strike");
    }
  }
  if (auto v = sec.reals("weights")) {
    auto* basket = std::get_if<BasketCallPayoff>(&p.payoff);
    if (basket == nullptr) throw ConfigError(sec.field("weights") + ": only basket payoffs have weights");
    basket->weights = *v;
  }
  translate("problem", [&] {
    validate(p);
    return 0;
  });
}

void read_network(const Section& sec, RunConfig& cfg) {
  sec.allow({"kernel", "neurons", "shape_mode", "uniform_shape"});
  if (auto v = sec.text("kernel")) cfg.kernel = translate(sec.field("kernel"), [&] { return kernel_from_string(*v); });
  if (auto v = sec.count("neurons")) cfg.neurons = *v;
  if (auto v = sec.text("shape_mode")) {
    cfg.shape_mode = translate(sec.field("shape_mode"), [&] { return shape_mode_from_string(*v); });
  }
  if (auto v = sec.real("uniform_shape")) cfg.uniform_shape = *v;
}

void read_training(const Section& sec, RunConfig& cfg) {
  sec.allow({"mode", "interior", "terminal", "boundary", "point_source", "max_iters", "seed", "plateau_window",
             "plateau_rel_tol"});
  if (auto v = sec.text("mode")) {
    if (*v == "fixed") {
      cfg.mode = TrainMode::Fixed;
    } else if (*v == "adaptive") {
      cfg.mode = TrainMode::Adaptive;
    } else {
      throw ConfigError(sec.field("mode") + ": expected fixed or adaptive, got '" + *v + "'");
    }
  }
  if (auto v = sec.count("interior")) cfg.m_interior = *v;
  if (auto v = sec.count("terminal")) cfg.m_terminal = *v;
  if (auto v = sec.count("boundary")) cfg.m_boundary = *v;
  if (auto v = sec.text("point_source")) {
    cfg.point_source = translate(sec.field("point_source"), [&] { return candidate_source_from_string(*v); });
  }
  if (auto v = sec.count("max_iters")) cfg.max_iters = *v;
  if (auto v = sec.count("seed")) cfg.seed = *v;
  if (auto v = sec.count("plateau_window")) cfg.plateau.window = *v;
  if (auto v = sec.real("plateau_rel_tol")) cfg.plateau.rel_tol = *v;
}

void read_adaptive(const Section& sec, RunConfig& cfg) {
  sec.allow({"n0", "k", "m", "s", "w", "epsilon", "max_iters", "source"});
  AdaptiveConfig& a = cfg.adaptive;
  if (auto v = sec.count("n0")) a.n0 = *v;
  if (auto v = sec.count("k")) a.k = *v;
  if (auto v = sec.count("m")) a.m = *v;
  if (auto v = sec.count("s")) a.s = *v;
  if (auto v = sec.count("w")) a.w = *v;
  if (auto v = sec.real("epsilon")) a.epsilon = *v;
  if (auto v = sec.count("max_iters")) a.max_iters = *v;
  if (auto v = sec.text("source")) {
    a.source = translate(sec.field("source"), [&] { return candidate_source_from_string(*v); });
  }
}

void read_lbfgs(const Section& sec, RunConfig& cfg) {
  sec.allow({"history", "lr", "wolfe_c1", "wolfe_c2", "max_line_search_evals", "inner_iters",
             "inner_tolerance_change"});
  LbfgsConfig& l = cfg.lbfgs;
  if (auto v = sec.count("history")) l.history = *v;
  if (auto v = sec.real("lr")) l.lr = *v;
  if (auto v = sec.real("wolfe_c1")) l.wolfe_c1 = *v;
  if (auto v = sec.real("wolfe_c2")) l.wolfe_c2 = *v;
  if (auto v = sec.count("max_line_search_evals")) l.max_line_search_evals = *v;
  if (auto v = sec.count("inner_iters")) l.inner_iters = *v;
  if (auto v = sec.real("inner_tolerance_change")) l.inner_tolerance_change = *v;
}

void read_test(const Section& sec, RunConfig& cfg) {
  sec.allow({"points", "time", "table"});
  if (auto v = sec.count("points")) cfg.test.points = *v;
  if (auto v = sec.real("time")) cfg.test.time = *v;
  if (auto v = sec.text("table")) cfg.test.table = *v;
}

}  // namespace

std::string_view to_string(TrainMode mode) { return mode == TrainMode::Fixed ? "fixed" : "adaptive"; }

RunConfig parse_config(std::string_view toml_text) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
  static constexpr std::string_view kSections[] = {"problem", "network", "training", "adaptive",
                                                   "lbfgs",   "test",    "output"};
  for (const auto& [key, node] : doc) {
    if (std::find(std::begin(kSections), std::end(kSections), key.str()) == std::end(kSections)) {
      throw ConfigError(std::string(key.str()) + ": unknown section");
    }
    if (!node.is_table()) throw ConfigError(std::string(key.str()) + ": expected a table");
  }
  const auto section = [&](std::string_view name) { return Section(doc[name].as_table(), std::string(name)); };

  RunConfig cfg;
  read_problem(section("problem"), cfg);
  read_network(section("network"), cfg);
  read_training(section("training"), cfg);
  read_adaptive(section("adaptive"), cfg);
  read_lbfgs(section("lbfgs"), cfg);
  read_test(section("test"), cfg);
  const Section out = section("output");
  out.allow({"dir"});
  if (auto v = out.text("dir")) cfg.output_dir = *v;
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate(const RunConfig& cfg) {
  translate("problem", [&] {
    validate(cfg.problem);
    return 0;
  });
  if (cfg.m_interior == 0) throw ConfigError("training.interior: must be positive");
  if (cfg.m_terminal == 0) throw ConfigError("training.terminal: must be positive");
  if (cfg.m_boundary == 0) throw ConfigError("training.boundary: must be positive");
  if (cfg.mode == TrainMode::Fixed && cfg.neurons == 0) throw ConfigError("network.neurons: must be positive");
  if (cfg.uniform_shape && !std::isfinite(*cfg.uniform_shape)) {
    throw ConfigError("network.uniform_shape: must be finite");
  }
  if (cfg.plateau.rel_tol < 0.0) throw ConfigError("training.plateau_rel_tol: must be non-negative");
  translate("adaptive", [&] {
    validate(cfg.adaptive);
    return 0;
  });
  translate("lbfgs", [&] {
    validate(cfg.lbfgs);
    return 0;
  });
  if (cfg.test.time < 0.0 || cfg.test.time > cfg.problem.T) throw ConfigError("test.time: outside [0, T]");
  if (!cfg.test.table.empty()) {
    if (cfg.test.table == "exchange" && cfg.problem.d != 2) throw ConfigError("test.table: exchange table needs d = 2");
    if (cfg.test.table == "basket" && cfg.problem.d != 4) throw ConfigError("test.table: basket table needs d = 4");
    if (cfg.test.table != "exchange" && cfg.test.table != "basket") {
      throw ConfigError("test.table: expected exchange or basket, got '" + cfg.test.table + "'");
    }
  }
}

TrainingSet make_training_set(const RunConfig& cfg) {
  const PointSourceSpec source = cfg.point_source == CandidateSource::Halton
                                     ? PointSourceSpec(HaltonPoints{})
                                     : PointSourceSpec(PseudoRandomPoints{cfg.seed});
  return build_training_set(cfg.problem, cfg.m_interior, cfg.m_terminal, cfg.m_boundary, source);
}

InitOptions init_options(const RunConfig& cfg) {
  InitOptions o;
  o.shape_mode = cfg.shape_mode;
  o.uniform_shape = cfg.uniform_shape;
  return o;
}

PointSet table_points(std::string_view table, double t) {
  if (table == "exchange") {
    PointSet pts(3);
    for (int i = 0; i <= 10; ++i) {
      const double p[3] = {20.0, 4.0 * i, t};
      pts.push_back(p);
    }
    return pts;
  }
  if (table == "basket") {
    PointSet pts(5);
    const double centre[5] = {1.0, 1.0, 1.0, 1.0, t};
    pts.push_back(centre);
    for (int k = 0; k < 4; ++k) {
      for (double delta : {0.1, -0.1}) {
        double p[5] = {1.0, 1.0, 1.0, 1.0, t};
        p[k] += delta;
        pts.push_back(p);
      }
    }
    return pts;
  }
  throw std::invalid_argument("unknown table '" + std::string(table) + "' (expected exchange or basket)");
}

}  // namespace pirbf
