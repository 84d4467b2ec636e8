#include "pirbf/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <sodium.h>

namespace pirbf {

using nlohmann::json;

namespace {

std::string boundary_name(BoundaryRule b) {
  switch (b) {
    case BoundaryRule::Put1D:
      return "put_1d";
    case BoundaryRule::Exchange2D:
      return "exchange_2d";
    case BoundaryRule::BasketAllFaces:
      return "basket_all_faces";
  }
  return "unknown";
}

BoundaryRule boundary_from_name(const std::string& s) {
  if (s == "put_1d") return BoundaryRule::Put1D;
  if (s == "exchange_2d") return BoundaryRule::Exchange2D;
  if (s == "basket_all_faces") return BoundaryRule::BasketAllFaces;
  throw CheckpointError("checkpoint: unknown boundary rule '" + s + "'");
}

json problem_to_json(const BsProblem& p) {
  json payoff;
  if (const auto* put = std::get_if<PutPayoff>(&p.payoff)) {
    payoff = {{"type", "put"}, {"strike", put->strike}};
  } else if (std::holds_alternative<ExchangePayoff>(p.payoff)) {
    payoff = {{"type", "exchange"}};
  } else {
    const auto& b = std::get<BasketCallPayoff>(p.payoff);
    payoff = {{"type", "basket_call"}, {"strike", b.strike}, {"weights", b.weights}};
  }
  return {{"name", p.name}, {"d", p.d},         {"sigma", p.sigma},   {"rho", p.rho},
          {"r", p.r},       {"T", p.T},         {"s_max", p.s_max}, {"payoff", payoff},
          {"boundary", boundary_name(p.boundary)}};
}

BsProblem problem_from_json(const json& j) {
  BsProblem p;
  p.name = j.at("name").get<std::string>();
  p.d = j.at("d").get<std::size_t>();
  p.sigma = j.at("sigma").get<std::vector<double>>();
  p.rho = j.at("rho").get<std::vector<double>>();
  p.r = j.at("r").get<double>();
  p.T = j.at("T").get<double>();
  p.s_max = j.at("s_max").get<double>();
  const json& pay = j.at("payoff");
  const std::string type = pay.at("type").get<std::string>();
  if (type == "put") {
    p.payoff = PutPayoff{pay.at("strike").get<double>()};
  } else if (type == "exchange") {
    p.payoff = ExchangePayoff{};
  } else if (type == "basket_call") {
    p.payoff = BasketCallPayoff{pay.at("strike").get<double>(), pay.at("weights").get<std::vector<double>>()};
  } else {
    throw CheckpointError("checkpoint: unknown payoff type '" + type + "'");
  }
  p.boundary = boundary_from_name(j.at("boundary").get<std::string>());
  validate(p);
  return p;
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json config_to_json(const RunConfig& c) {
  json shape_mode = c.shape_mode ? json(std::string(to_string(*c.shape_mode))) : json(nullptr);
  return {
      {"preset", c.preset},
      {"problem", problem_to_json(c.problem)},
      {"network",
       {{"kernel", std::string(to_string(c.kernel))},
        {"neurons", c.neurons},
        {"shape_mode", shape_mode},
        {"uniform_shape", optional_json(c.uniform_shape)}}},
      {"training",
       {{"mode", std::string(to_string(c.mode))},
        {"interior", c.m_interior},
        {"terminal", c.m_terminal},
        {"boundary", c.m_boundary},
        {"point_source", std::string(to_string(c.point_source))},
        {"max_iters", c.max_iters},
        {"plateau_window", c.plateau.window},
        {"plateau_rel_tol", c.plateau.rel_tol},
        {"seed", c.seed}}},
      {"adaptive",
       {{"n0", c.adaptive.n0},
        {"k", c.adaptive.k},
        {"m", c.adaptive.m},
        {"s", c.adaptive.s},
        {"w", c.adaptive.w},
        {"epsilon", c.adaptive.epsilon},
        {"max_iters", c.adaptive.max_iters},
        {"source", std::string(to_string(c.adaptive.source))}}},
      {"lbfgs",
       {{"history", c.lbfgs.history},
        {"lr", c.lbfgs.lr},
        {"wolfe_c1", c.lbfgs.wolfe_c1},
        {"wolfe_c2", c.lbfgs.wolfe_c2},
        {"max_line_search_evals", c.lbfgs.max_line_search_evals},
        {"inner_iters", c.lbfgs.inner_iters},
        {"inner_tolerance_change", c.lbfgs.inner_tolerance_change}}},
      {"test", {{"points", c.test.points}, {"time", c.test.time}, {"table", c.test.table}}},
      {"output", {{"dir", c.output_dir}}},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.preset = j.at("preset").get<std::string>();
  c.problem = problem_from_json(j.at("problem"));
  const json& n = j.at("network");
  c.kernel = kernel_from_string(n.at("kernel").get<std::string>());
  c.neurons = n.at("neurons").get<std::size_t>();
  if (!n.at("shape_mode").is_null()) c.shape_mode = shape_mode_from_string(n.at("shape_mode").get<std::string>());
  if (!n.at("uniform_shape").is_null()) c.uniform_shape = n.at("uniform_shape").get<double>();
  const json& t = j.at("training");
  const std::string mode = t.at("mode").get<std::string>();
  c.mode = mode == "adaptive" ? TrainMode::Adaptive : TrainMode::Fixed;
  c.m_interior = t.at("interior").get<std::size_t>();
  c.m_terminal = t.at("terminal").get<std::size_t>();
  c.m_boundary = t.at("boundary").get<std::size_t>();
  c.point_source = candidate_source_from_string(t.at("point_source").get<std::string>());
  c.max_iters = t.at("max_iters").get<std::size_t>();
  c.plateau.window = t.at("plateau_window").get<std::size_t>();
  c.plateau.rel_tol = t.at("plateau_rel_tol").get<double>();
  c.seed = t.at("seed").get<std::uint64_t>();
  const json& a = j.at("adaptive");
  c.adaptive.n0 = a.at("n0").get<std::size_t>();
  c.adaptive.k = a.at("k").get<std::size_t>();
  c.adaptive.m = a.at("m").get<std::size_t>();
  c.adaptive.s = a.at("s").get<std::size_t>();
  c.adaptive.w = a.at("w").get<std::size_t>();
  c.adaptive.epsilon = a.at("epsilon").get<double>();
  c.adaptive.max_iters = a.at("max_iters").get<std::size_t>();
  c.adaptive.source = candidate_source_from_string(a.at("source").get<std::string>());
  const json& l = j.at("lbfgs");
  c.lbfgs.history = l.at("history").get<std::size_t>();
  c.lbfgs.lr = l.at("lr").get<double>();
  c.lbfgs.wolfe_c1 = l.at("wolfe_c1").get<double>();
  c.lbfgs.wolfe_c2 = l.at("wolfe_c2").get<double>();
  c.lbfgs.max_line_search_evals = l.at("max_line_search_evals").get<std::size_t>();
  c.lbfgs.inner_iters = l.at("inner_iters").get<std::size_t>();
  c.lbfgs.inner_tolerance_change = l.at("inner_tolerance_change").get<double>();
  const json& te = j.at("test");
  c.test.points = te.at("points").get<std::size_t>();
  c.test.time = te.at("time").get<double>();
  c.test.table = te.at("table").get<std::string>();
  c.output_dir = j.at("output").at("dir").get<std::string>();
  return c;
}

}  // namespace

HistorySummary summarize(const RunHistory& history, const RbfNetwork& net) {
  HistorySummary s;
  s.iterations = history.iterations();
  s.stop_reason = std::string(to_string(history.stop));
  if (!history.records.empty()) {
    s.final_loss = history.records.back().loss.total;
    s.final_test_rmse = history.records.back().test_rmse;
  }
  s.neurons = net.neurons();
  return s;
}

StreamPositions positions(const TrainerStreams& streams) {
  return {streams.network.centres.position(), streams.network.shapes.position(), streams.network.weights.position(),
          streams.candidates.position()};
}

TrainerStreams restore_streams(const RunConfig& cfg, const StreamPositions& pos) {
  TrainerStreams streams(cfg.seed, cfg.adaptive.source);
  streams.network.centres.advance_to(pos.centres);
  streams.network.shapes.advance_to(pos.shapes);
  streams.network.weights.advance_to(pos.weights);
  streams.candidates.advance_to(pos.candidates);
  return streams;
}

std::string encode_doubles(std::span<const double> values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (std::size_t b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  std::string out(sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(out.size() - 1);  // drop the terminating NUL
  return out;
}

std::vector<double> decode_doubles(const std::string& text) {
  std::vector<unsigned char> bytes(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(bytes.data(), bytes.size(), text.data(), text.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    throw CheckpointError("checkpoint: malformed base64 array");
  }
  if (len % 8 != 0) throw CheckpointError("checkpoint: array byte length is not a multiple of 8");
  std::vector<double> out(len / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string serialize(const Checkpoint& ck) {
  const RbfNetwork& net = ck.net;
  const double bias[1] = {net.bias};
  json j = {
      {"format", "pirbf-checkpoint"},
      {"version", kCheckpointVersion},
      {"config", config_to_json(ck.config)},
      {"network",
       {{"d", net.d},
        {"kernel", std::string(to_string(net.kind))},
        {"shape_mode", std::string(to_string(net.shape_mode))},
        {"neurons", net.neurons()},
        {"centres", encode_doubles(net.centres)},
        {"shapes", encode_doubles(net.shapes)},
        {"weights", encode_doubles(net.weights)},
        {"bias", encode_doubles(bias)}}},
      {"history",
       {{"iterations", ck.history.iterations},
        {"stop_reason", ck.history.stop_reason},
        {"final_loss", encode_doubles(std::span<const double>(&ck.history.final_loss, 1))},
        {"final_test_rmse", ck.history.final_test_rmse
                                ? json(encode_doubles(std::span<const double>(&*ck.history.final_test_rmse, 1)))
                                : json(nullptr)},
        {"neurons", ck.history.neurons}}},
      {"rng",
       {{"centres", ck.rng.centres},
        {"shapes", ck.rng.shapes},
        {"weights", ck.rng.weights},
        {"candidates", ck.rng.candidates}}},
  };
  return j.dump(2) + "\n";
}

Checkpoint deserialize(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "pirbf-checkpoint") throw CheckpointError("checkpoint: wrong format tag");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint: version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint ck;
    ck.config = config_from_json(j.at("config"));
    const json& n = j.at("network");
    ck.net.d = n.at("d").get<std::size_t>();
    ck.net.kind = kernel_from_string(n.at("kernel").get<std::string>());
    ck.net.shape_mode = shape_mode_from_string(n.at("shape_mode").get<std::string>());
    ck.net.centres = decode_doubles(n.at("centres").get<std::string>());
    ck.net.shapes = decode_doubles(n.at("shapes").get<std::string>());
    ck.net.weights = decode_doubles(n.at("weights").get<std::string>());
    const std::vector<double> bias = decode_doubles(n.at("bias").get<std::string>());
    if (bias.size() != 1) throw CheckpointError("checkpoint: bias must hold one value");
    ck.net.bias = bias[0];
    if (n.at("neurons").get<std::size_t>() != ck.net.neurons()) {
      throw CheckpointError("checkpoint: neuron count disagrees with the weight array");
    }
    check_network(ck.net);
    const json& h = j.at("history");
    ck.history.iterations = h.at("iterations").get<std::size_t>();
    ck.history.stop_reason = h.at("stop_reason").get<std::string>();
    const auto one = [](const json& v) {
      const std::vector<double> x = decode_doubles(v.get<std::string>());
      if (x.size() != 1) throw CheckpointError("checkpoint: expected a single value");
      return x[0];
    };
    ck.history.final_loss = one(h.at("final_loss"));
    if (!h.at("final_test_rmse").is_null()) ck.history.final_test_rmse = one(h.at("final_test_rmse"));
    ck.history.neurons = h.at("neurons").get<std::size_t>();
    const json& r = j.at("rng");
    ck.rng = {r.at("centres").get<std::uint64_t>(), r.at("shapes").get<std::uint64_t>(),
              r.at("weights").get<std::uint64_t>(), r.at("candidates").get<std::uint64_t>()};
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot write " + path);
  out << serialize(ck);
  if (!out) throw CheckpointError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace pirbf
