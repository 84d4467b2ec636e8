#include "pirbf/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace pirbf {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()), file_(std::fopen(path.c_str(), "wb")) {
  if (file_ == nullptr) throw std::runtime_error("cannot write " + path);
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) line += ',';
    line += header[i];
  }
  line += '\n';
  std::fputs(line.c_str(), file_);
}

CsvWriter::~CsvWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void CsvWriter::row(const std::vector<Field>& fields) {
  if (fields.size() != columns_) throw std::logic_error("csv row width mismatch in " + path_);
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            line += format_double(v);
          } else if constexpr (std::is_same_v<T, std::size_t>) {
            line += std::to_string(v);
          } else if constexpr (std::is_same_v<T, std::string>) {
            line += v;
          } else if (v) {
            line += format_double(*v);
          }
        },
        fields[i]);
  }
  line += '\n';
  if (std::fputs(line.c_str(), file_) < 0) throw std::runtime_error("write failed for " + path_);
}

double trimmed_mean(std::vector<double> values, double fraction) {
  if (values.empty()) throw std::invalid_argument("trimmed_mean: no samples");
  if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("trimmed_mean: fraction outside [0, 1)");
  const std::size_t n = values.size();
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(values[a] - median) < std::abs(values[b] - median);
  });
  const auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  double sum = 0.0;
  for (std::size_t i = 0; i < n - drop; ++i) sum += values[order[i]];
  return sum / static_cast<double>(n - drop);
}

namespace {

// Reference price at (S_1, …, S_d, t) by Monte Carlo from time t.
McEstimate mc_at(const BsProblem& prob, std::span<const double> point, const McConfig& mc) {
  BsProblem shifted = prob;
  shifted.T = prob.T - point[prob.d];
  if (shifted.T <= 0.0) return {payoff_value(prob, point.first(prob.d)), 0.0};
  return mc_price(shifted, point.first(prob.d), mc);
}

std::vector<std::string> coord_names(std::size_t d) {
  std::vector<std::string> names;
  if (d == 1) {
    names.emplace_back("S");
  } else {
    for (std::size_t i = 1; i <= d; ++i) names.push_back("S" + std::to_string(i));
  }
  names.emplace_back("t");
  return names;
}

std::optional<double> nan_to_empty(double v) {
  if (std::isnan(v)) return std::nullopt;
  return v;
}

void write_history(const RunHistory& h, const std::string& path) {
  CsvWriter csv(path, {"iteration", "pde_loss", "terminal_loss", "boundary_loss", "total_loss", "mapr_w",
                       "neuron_count", "test_rmse"});
  for (const IterationRecord& r : h.records) {
    csv.row({r.iteration, r.loss.pde, r.loss.terminal, r.loss.boundary, r.loss.total, nan_to_empty(r.mapr),
             r.neurons, r.test_rmse});
  }
}

void write_test_points(const RbfNetwork& net, const std::optional<TestProbe>& probe, const PointSet& points,
                       const std::string& path) {
  std::vector<std::string> header = coord_names(net.d);
  for (const char* c : {"predicted", "reference", "pae"}) header.emplace_back(c);
  CsvWriter csv(path, header);
  const std::vector<double> pred = evaluate(net, points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<CsvWriter::Field> row(points[i].begin(), points[i].end());
    row.emplace_back(pred[i]);
    if (probe) {
      row.emplace_back(probe->reference[i]);
      row.emplace_back(std::abs(pred[i] - probe->reference[i]));
    } else {
      row.emplace_back(std::optional<double>{});
      row.emplace_back(std::optional<double>{});
    }
    csv.row(row);
  }
}

void write_stages(const RunHistory& h, const std::optional<TestProbe>& probe, std::size_t d,
                  const std::string& dir) {
  {
    CsvWriter csv(dir + "/stages.csv", {"stage", "iteration", "neuron_count", "test_rmse"});
    for (std::size_t s = 0; s < h.stages.size(); ++s) {
      csv.row({s, h.stages[s].iteration, h.stages[s].neurons, h.stages[s].test_rmse});
    }
  }
  if (probe) {
    std::vector<std::string> header = {"stage", "iteration", "neuron_count"};
    for (auto& n : coord_names(d)) header.push_back(n);
    for (const char* c : {"predicted", "reference", "pae"}) header.emplace_back(c);
    CsvWriter csv(dir + "/stage_predictions.csv", header);
    for (std::size_t s = 0; s < h.stages.size(); ++s) {
      const StageRecord& st = h.stages[s];
      for (std::size_t i = 0; i < st.predictions.size(); ++i) {
        std::vector<CsvWriter::Field> row = {s, st.iteration, st.neurons};
        for (double x : probe->points[i]) row.emplace_back(x);
        row.emplace_back(st.predictions[i]);
        row.emplace_back(probe->reference[i]);
        row.emplace_back(std::abs(st.predictions[i] - probe->reference[i]));
        csv.row(row);
      }
    }
  }
  std::vector<std::string> header = {"iteration", "index"};
  for (auto& n : coord_names(d)) header.push_back(n);
  CsvWriter csv(dir + "/insertions.csv", header);
  for (const InsertionEvent& ev : h.insertions) {
    for (std::size_t i = 0; i < ev.centres.size(); ++i) {
      std::vector<CsvWriter::Field> row = {ev.iteration, i};
      for (double x : ev.centres[i]) row.emplace_back(x);
      csv.row(row);
    }
  }
}

void write_summary(const RunOutcome& out, const std::string& path) {
  const HistorySummary& s = out.checkpoint.history;
  json j = {{"preset", out.checkpoint.config.preset},
            {"mode", std::string(to_string(out.checkpoint.config.mode))},
            {"seed", out.checkpoint.config.seed},
            {"iterations", s.iterations},
            {"stop_reason", s.stop_reason},
            {"neurons", s.neurons},
            {"final_loss", s.final_loss},
            {"final_rmse", s.final_test_rmse ? json(*s.final_test_rmse) : json(nullptr)},
            {"wall_seconds", out.wall_seconds}};
  std::ofstream f(path, std::ios::binary);
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("write failed for " + path);
}

PointSet probe_points(const RunConfig& cfg) {
  if (!cfg.test.table.empty()) return table_points(cfg.test.table, cfg.test.time);
  // Test points are shared by every seed so sweeps score the same set.
  return interior_test_points(cfg.problem, cfg.test.points, cfg.test.time, 0);
}

void write_outputs(const RunOutcome& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_checkpoint(out.checkpoint, dir + "/checkpoint.json");
  write_history(out.history, dir + "/history.csv");
  const PointSet points = out.probe ? out.probe->points : probe_points(out.checkpoint.config);
  write_test_points(out.checkpoint.net, out.probe, points, dir + "/test_points.csv");
  write_stages(out.history, out.probe, out.checkpoint.net.d, dir);
  write_summary(out, dir + "/summary.json");
}

TrainOptions train_options(const RunConfig& cfg, const std::optional<TestProbe>& probe, const RunHooks& hooks) {
  TrainOptions o;
  o.probe = probe ? &*probe : nullptr;
  o.progress = hooks.progress;
  o.plateau = cfg.plateau;
  return o;
}

}  // namespace

std::optional<TestProbe> make_probe(const RunConfig& cfg) {
  PointSet points = probe_points(cfg);
  if (auto probe = closed_form_probe(cfg.problem, points)) return probe;
  if (cfg.test.table.empty()) return std::nullopt;
  TestProbe probe{points, {}};
  McConfig mc;
  for (std::size_t i = 0; i < points.size(); ++i) probe.reference.push_back(mc_at(cfg.problem, points[i], mc).price);
  return probe;
}

RunOutcome run_training(const RunConfig& cfg, const std::string& out_dir, const RunHooks& hooks) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  out.probe = make_probe(cfg);
  const TrainingSet ts = make_training_set(cfg);
  TrainerStreams streams(cfg.seed, cfg.adaptive.source);
  const TrainOptions opts = train_options(cfg, out.probe, hooks);
  TrainResult res;
  if (cfg.mode == TrainMode::Fixed) {
    RbfNetwork net = init_network(cfg.problem, cfg.neurons, cfg.kernel, streams.network, init_options(cfg));
    res = train_fixed(std::move(net), cfg.problem, ts, cfg.lbfgs, cfg.max_iters, opts);
  } else {
    res = train_adaptive(cfg.problem, ts, cfg.kernel, cfg.adaptive, cfg.lbfgs, streams, init_options(cfg), opts);
  }
  out.checkpoint = {cfg, res.net, summarize(res.history, res.net), positions(streams)};
  out.history = std::move(res.history);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (hooks.write_files) write_outputs(out, out_dir);
  return out;
}

BsProblem apply_overrides(const BsProblem& prob, const ProblemOverrides& ov) {
  BsProblem p = prob;
  if (ov.sigma) {
    if (ov.sigma->size() != p.d) {
      throw ConfigError("sigma: expected " + std::to_string(p.d) + " entries, got " +
                        std::to_string(ov.sigma->size()) + " (the asset count cannot change)");
    }
    p.sigma = *ov.sigma;
  }
  if (ov.r) p.r = *ov.r;
  for (const auto& e : ov.rho) {
    if (e.i >= p.d || e.j >= p.d) {
      throw ConfigError("rho: entry (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") outside the " +
                        std::to_string(p.d) + "x" + std::to_string(p.d) + " matrix");
    }
    if (e.i == e.j && e.value != 1.0) throw ConfigError("rho: diagonal entries must stay 1");
    p.rho[e.i * p.d + e.j] = e.value;
    p.rho[e.j * p.d + e.i] = e.value;
  }
  try {
    validate(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("override: ") + e.what());
  }
  return p;
}

RunOutcome run_fine_tune(const Checkpoint& ck, const ProblemOverrides& ov, const std::string& out_dir,
                         const RunHooks& hooks) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg = ck.config;
  cfg.problem = apply_overrides(ck.config.problem, ov);
  validate(cfg);
  RunOutcome out;
  out.probe = make_probe(cfg);
  const TrainingSet ts = make_training_set(cfg);
  TrainerStreams streams = restore_streams(ck.config, ck.rng);
  TrainResult res = fine_tune(ck.net, cfg.problem, ts, cfg.adaptive, cfg.lbfgs, streams,
                              train_options(cfg, out.probe, hooks));
  out.checkpoint = {cfg, res.net, summarize(res.history, res.net), positions(streams)};
  out.history = std::move(res.history);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (hooks.write_files) write_outputs(out, out_dir);
  return out;
}

SweepResult run_sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                      const RunHooks& hooks) {
  if (seeds.empty()) throw ConfigError("sweep: at least one seed is required");
  std::filesystem::create_directories(out_dir);
  SweepResult result;
  CsvWriter csv(out_dir + "/sweep.csv", {"seed", "iterations_to_converge", "final_rmse", "stop_reason", "error"});
  for (std::uint64_t seed : seeds) {
    RunConfig c = cfg;
    c.seed = seed;
    SweepRow row;
    row.seed = seed;
    std::string stop;
    try {
      const RunOutcome o = run_training(c, out_dir + "/seed_" + std::to_string(seed), hooks);
      row.iterations = o.checkpoint.history.iterations;
      row.final_rmse = o.checkpoint.history.final_test_rmse.value_or(std::nan(""));
      stop = o.checkpoint.history.stop_reason;
    } catch (const std::exception& e) {
      row.error = e.what();
      std::replace(row.error.begin(), row.error.end(), ',', ';');
      std::replace(row.error.begin(), row.error.end(), '\n', ' ');
    }
    if (row.error.empty()) {
      csv.row({std::to_string(seed), row.iterations, nan_to_empty(row.final_rmse), stop, std::string()});
    } else {
      csv.row({std::to_string(seed), std::string(), std::string(), std::string(), row.error});
    }
    result.rows.push_back(row);
  }
  std::vector<double> iters;
  std::vector<double> rmses;
  for (const SweepRow& r : result.rows) {
    if (!r.error.empty()) continue;
    iters.push_back(static_cast<double>(r.iterations));
    if (!std::isnan(r.final_rmse)) rmses.push_back(r.final_rmse);
  }
  result.trimmed_iterations = iters.empty() ? std::nan("") : trimmed_mean(iters);
  result.trimmed_rmse = rmses.empty() ? std::nan("") : trimmed_mean(rmses);
  CsvWriter summary(out_dir + "/sweep_summary.csv",
                    {"runs", "failures", "trimmed_mean_iterations", "trimmed_mean_rmse", "median_rmse", "best_rmse"});
  std::optional<double> median;
  std::optional<double> best;
  if (!rmses.empty()) {
    std::vector<double> s = rmses;
    std::sort(s.begin(), s.end());
    median = s.size() % 2 == 1 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
    best = s.front();
  }
  summary.row({result.rows.size(), result.rows.size() - iters.size(), nan_to_empty(result.trimmed_iterations),
               nan_to_empty(result.trimmed_rmse), median, best});
  return result;
}

std::vector<PricedPoint> price_points(const PriceRequest& req) {
  const BsProblem& prob = req.problem;
  if (req.points.dim() != prob.d + 1) {
    throw std::invalid_argument("price: points need " + std::to_string(prob.d + 1) + " coordinates (prices, t)");
  }
  const auto closed = [&](std::span<const double> x) {
    const auto v = closed_form_price(prob, x);
    if (!v) throw std::invalid_argument("price: no closed form for problem " + prob.name);
    return *v;
  };
  std::vector<PricedPoint> out;
  for (std::size_t i = 0; i < req.points.size(); ++i) {
    const auto x = req.points[i];
    PricedPoint p;
    p.point.assign(x.begin(), x.end());
    switch (req.mode) {
      case PriceMode::ClosedForm:
        p.value = closed(x);
        break;
      case PriceMode::MonteCarlo: {
        const McEstimate e = mc_at(prob, x, req.mc);
        p.value = e.price;
        p.std_err = e.std_err;
        break;
      }
      case PriceMode::Network: {
        if (req.net == nullptr) throw std::invalid_argument("price: network mode needs a checkpoint");
        p.value = evaluate(*req.net, x);
        if (req.reference == PriceMode::ClosedForm) {
          p.reference = closed(x);
        } else if (req.reference == PriceMode::MonteCarlo) {
          const McEstimate e = mc_at(prob, x, req.mc);
          p.reference = e.price;
          p.std_err = e.std_err;
        }
        if (p.reference) p.pae = std::abs(p.value - *p.reference);
        break;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_price_table(const std::vector<PricedPoint>& rows, std::size_t d, const std::string& path) {
  std::vector<std::string> header = coord_names(d);
  for (const char* c : {"value", "std_err", "reference", "pae"}) header.emplace_back(c);
  CsvWriter csv(path, header);
  for (const PricedPoint& p : rows) {
    std::vector<CsvWriter::Field> row(p.point.begin(), p.point.end());
    row.emplace_back(p.value);
    row.emplace_back(p.std_err);
    row.emplace_back(p.reference);
    row.emplace_back(p.pae);
    csv.row(row);
  }
}

PointSet grid_points(const GridSpec& spec, std::size_t d) {
  const std::size_t D = d + 1;
  if (spec.axes.size() != D) {
    throw std::invalid_argument("grid: expected " + std::to_string(D) + " axes, got " +
                                std::to_string(spec.axes.size()));
  }
  for (const AxisSpec& a : spec.axes) {
    if (a.n == 0) throw std::invalid_argument("grid: axis with zero points");
  }
  const auto value = [](const AxisSpec& a, std::size_t i) {
    return a.n == 1 ? a.lo : a.lo + (a.hi - a.lo) * static_cast<double>(i) / static_cast<double>(a.n - 1);
  };
  // Free axes: all D, or (shared price axis, time) in diagonal mode.
  std::vector<std::size_t> free = spec.diagonal ? std::vector<std::size_t>{0, d} : std::vector<std::size_t>{};
  if (!spec.diagonal) {
    for (std::size_t k = 0; k < D; ++k) free.push_back(k);
  }
  std::size_t total = 1;
  for (std::size_t k : free) total *= spec.axes[k].n;
  PointSet pts(D);
  pts.reserve(total);
  std::vector<double> x(D);
  std::vector<std::size_t> idx(free.size(), 0);
  for (std::size_t p = 0; p < total; ++p) {
    if (spec.diagonal) {
      const double s = value(spec.axes[0], idx[0]);
      for (std::size_t k = 0; k < d; ++k) x[k] = s;
      x[d] = value(spec.axes[d], idx[1]);
    } else {
      for (std::size_t k = 0; k < D; ++k) x[k] = value(spec.axes[k], idx[k]);
    }
    pts.push_back(x);
    for (std::size_t j = free.size(); j-- > 0;) {
      if (++idx[j] < spec.axes[free[j]].n) break;
      idx[j] = 0;
    }
  }
  return pts;
}

std::size_t export_surface(const RbfNetwork& net, const BsProblem& prob, const GridSpec& spec,
                           const std::string& path) {
  if (net.d != prob.d) throw std::invalid_argument("surface: network and problem dimensions differ");
  const PointSet pts = grid_points(spec, prob.d);
  const std::vector<double> pred = evaluate(net, pts);
  const bool has_reference = pts.size() > 0 && closed_form_price(prob, pts[0]).has_value();
  std::vector<std::string> header = coord_names(prob.d);
  header.emplace_back("predicted");
  if (has_reference) {
    header.emplace_back("reference");
    header.emplace_back("pae");
  }
  CsvWriter csv(path, header);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto x = pts[i];
    bool inside = x[prob.d] >= 0.0 && x[prob.d] <= prob.T;
    for (std::size_t k = 0; k < prob.d; ++k) inside = inside && x[k] >= 0.0 && x[k] <= prob.s_max;
    if (!inside) ++outside;
    std::vector<CsvWriter::Field> row(x.begin(), x.end());
    row.emplace_back(pred[i]);
    if (has_reference) {
      const double ref = *closed_form_price(prob, x);
      row.emplace_back(ref);
      row.emplace_back(std::abs(pred[i] - ref));
    }
    csv.row(row);
  }
  return outside;
}

}  // namespace pirbf
