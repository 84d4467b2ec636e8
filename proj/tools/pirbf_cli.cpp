// Command-line front end: train, sweep, finetune, price, surface.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pirbf/app.hpp"
#include "pirbf/parallel.hpp"

namespace {

using namespace pirbf;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::size_t progress_every = 50;
  bool quiet = false;
};

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError(what + ": cannot parse '" + item + "' as a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

// "1-8", "1,3,5" or a mix.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(item));
      } else {
        const std::uint64_t lo = std::stoull(item.substr(0, dash));
        const std::uint64_t hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw ConfigError("seeds: empty range '" + item + "'");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("seeds: cannot parse '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  return seeds;
}

void apply_threads(const Globals& g) {
  std::size_t n = g.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : g.threads;
  if (const char* env = std::getenv("PIRBF_THREADS"); env != nullptr && *env != '\0') {
    try {
      n = std::stoul(env);
    } catch (const std::logic_error&) {
      throw ConfigError(std::string("PIRBF_THREADS: cannot parse '") + env + "'");
    }
  }
  set_thread_count(n);
}

RunConfig load_with_overrides(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  return cfg;
}

RunHooks hooks(const Globals& g) {
  RunHooks h;
  if (g.quiet || g.progress_every == 0) return h;
  const std::size_t every = g.progress_every;
  h.progress = [every](const IterationRecord& r) {
    if (r.iteration % every != 0) return;
    std::fprintf(stderr, "iter %6zu  loss %.4e  neurons %zu", r.iteration, r.loss.total, r.neurons);
    if (r.test_rmse) std::fprintf(stderr, "  rmse %.4e", *r.test_rmse);
    std::fprintf(stderr, "\n");
  };
  return h;
}

void print_summary(const RunOutcome& o, const std::string& dir) {
  const HistorySummary& s = o.checkpoint.history;
  std::printf("stop=%s iterations=%zu neurons=%zu loss=%.6e", s.stop_reason.c_str(), s.iterations, s.neurons,
              s.final_loss);
  if (s.final_test_rmse) std::printf(" rmse=%.6e", *s.final_test_rmse);
  std::printf(" wall=%.1fs out=%s\n", o.wall_seconds, dir.c_str());
}

PointSet read_points_file(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("points: cannot open " + path);
  PointSet pts(dim);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    // A header row is anything whose first field is not numeric.
    if (lineno == 1 && !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-' || line[0] == '.')) {
      continue;
    }
    const std::vector<double> x = parse_list(line, path + ":" + std::to_string(lineno));
    if (x.size() != dim) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim) + " values");
    }
    pts.push_back(x);
  }
  return pts;
}

PriceMode price_mode(const std::string& s) {
  if (s == "closed_form") return PriceMode::ClosedForm;
  if (s == "mc") return PriceMode::MonteCarlo;
  if (s == "network") return PriceMode::Network;
  throw ConfigError("mode: expected closed_form, mc or network, got '" + s + "'");
}

AxisSpec parse_axis(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  try {
    if (parts.size() == 1) return {std::stod(parts[0]), std::stod(parts[0]), 1};
    if (parts.size() == 3) return {std::stod(parts[0]), std::stod(parts[1]), std::stoul(parts[2])};
  } catch (const std::logic_error&) {
  }
  throw ConfigError("axis: expected 'value' or 'lo:hi:n', got '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed RBF network solver for Black-Scholes problems"};
  app.require_subcommand(1);
  Globals g;
  const auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config", g.config, "TOML run configuration");
    sub->add_option("--seed", g.seed, "Override the configured seed");
    sub->add_option("--out", g.out, "Output directory");
    sub->add_option("--threads", g.threads, "Worker threads (0: all cores; PIRBF_THREADS overrides)");
    sub->add_option("--progress", g.progress_every, "Print progress every n iterations (0: never)");
    sub->add_flag("--quiet", g.quiet, "No progress output");
  };

  CLI::App* train = app.add_subcommand("train", "Train a network from a configuration");
  add_globals(train);

  CLI::App* sweep = app.add_subcommand("sweep", "Train once per seed and summarize");
  add_globals(sweep);
  std::string seeds_text;
  sweep->add_option("--seeds", seeds_text, "Seeds, e.g. 1-8 or 1,4,9")->required();

  CLI::App* finetune = app.add_subcommand("finetune", "Resume a checkpoint on changed problem parameters");
  add_globals(finetune);
  std::string checkpoint_path;
  std::string sigma_text;
  std::optional<double> r_override;
  std::vector<std::string> rho_texts;
  finetune->add_option("--checkpoint", checkpoint_path, "Checkpoint to resume")->required();
  finetune->add_option("--sigma", sigma_text, "New volatilities, comma separated");
  finetune->add_option("--r", r_override, "New interest rate");
  finetune->add_option("--rho", rho_texts, "Correlation entry i,j,value (0-based); repeatable");

  CLI::App* price = app.add_subcommand("price", "Price points by closed form, Monte Carlo or a trained network");
  add_globals(price);
  std::string mode_text = "closed_form";
  std::string reference_text = "closed_form";
  std::string preset;
  std::vector<std::string> point_texts;
  std::string points_file;
  std::string table;
  double table_time = 0.0;
  McConfig mc;
  price->add_option("--mode", mode_text, "closed_form, mc or network");
  price->add_option("--reference", reference_text, "Reference for network mode: closed_form, mc or none");
  price->add_option("--preset", preset, "Problem preset (put1d, exchange2d, basket4d)");
  price->add_option("--checkpoint", checkpoint_path, "Checkpoint (network mode; also supplies the problem)");
  price->add_option("--point", point_texts, "Point S1,...,Sd,t; repeatable");
  price->add_option("--points", points_file, "CSV file of points");
  price->add_option("--table", table, "Fixed comparison points: exchange or basket");
  price->add_option("--time", table_time, "Time of the table points");
  price->add_option("--paths", mc.n_paths, "Monte Carlo paths");
  price->add_option("--mc-seed", mc.seed, "Monte Carlo seed");

  CLI::App* surface = app.add_subcommand("surface", "Evaluate a checkpoint on a grid");
  add_globals(surface);
  std::vector<std::string> axis_texts;
  bool diagonal = false;
  surface->add_option("--checkpoint", checkpoint_path, "Checkpoint to evaluate")->required();
  surface->add_option("--axis", axis_texts, "Axis 'lo:hi:n' or fixed 'value', one per coordinate (prices, t)")
      ->required();
  surface->add_flag("--diagonal", diagonal, "S1 = ... = Sd from the first axis; then the time axis");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_threads(g);
    if (train->parsed()) {
      const RunConfig cfg = load_with_overrides(g);
      const RunOutcome o = run_training(cfg, cfg.output_dir, hooks(g));
      print_summary(o, cfg.output_dir);
    } else if (sweep->parsed()) {
      const RunConfig cfg = load_with_overrides(g);
      const SweepResult res = run_sweep(cfg, parse_seeds(seeds_text), cfg.output_dir, hooks(g));
      std::size_t failures = 0;
      for (const SweepRow& r : res.rows) {
        if (!r.error.empty()) {
          ++failures;
          std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(r.seed), r.error.c_str());
        }
      }
      std::printf("runs=%zu failures=%zu trimmed_mean_iterations=%.6g trimmed_mean_rmse=%.6e out=%s\n",
                  res.rows.size(), failures, res.trimmed_iterations, res.trimmed_rmse, cfg.output_dir.c_str());
    } else if (finetune->parsed()) {
      const Checkpoint ck = load_checkpoint(checkpoint_path);
      ProblemOverrides ov;
      if (!sigma_text.empty()) ov.sigma = parse_list(sigma_text, "sigma");
      ov.r = r_override;
      for (const std::string& t : rho_texts) {
        const std::vector<double> v = parse_list(t, "rho");
        if (v.size() != 3 || v[0] < 0 || v[1] < 0) throw ConfigError("rho: expected i,j,value");
        ov.rho.push_back({static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), v[2]});
      }
      const std::string dir = g.out.empty() ? ck.config.output_dir + "_finetune" : g.out;
      const RunOutcome o = run_fine_tune(ck, ov, dir, hooks(g));
      print_summary(o, dir);
    } else if (price->parsed()) {
      PriceRequest req;
      req.mode = price_mode(mode_text);
      req.mc = mc;
      std::optional<Checkpoint> ck;
      if (!checkpoint_path.empty()) {
        ck = load_checkpoint(checkpoint_path);
        req.problem = ck->config.problem;
        req.net = &ck->net;
      } else if (!g.config.empty()) {
        req.problem = load_config(g.config).problem;
      } else if (!preset.empty()) {
        try {
          req.problem = make_preset(preset);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("preset: ") + e.what());
        }
      } else {
        throw ConfigError("price: give --preset, --config or --checkpoint");
      }
      if (req.mode == PriceMode::Network && !ck) throw ConfigError("price: network mode needs --checkpoint");
      if (reference_text == "none") {
        req.reference = PriceMode::Network;  // no reference column
      } else {
        req.reference = price_mode(reference_text);
      }
      const std::size_t dim = req.problem.d + 1;
      req.points = PointSet(dim);
      if (!table.empty()) req.points = table_points(table, table_time);
      if (!points_file.empty()) {
        const PointSet f = read_points_file(points_file, dim);
        for (std::size_t i = 0; i < f.size(); ++i) req.points.push_back(f[i]);
      }
      for (const std::string& t : point_texts) {
        const std::vector<double> x = parse_list(t, "point");
        if (x.size() != dim) throw ConfigError("point: expected " + std::to_string(dim) + " values (prices, t)");
        req.points.push_back(x);
      }
      if (req.points.empty()) throw ConfigError("price: no points given");
      const std::vector<PricedPoint> rows = price_points(req);
      std::vector<double> pred;
      std::vector<double> ref;
      for (const PricedPoint& p : rows) {
        for (double x : p.point) std::printf("%s ", format_double(x).c_str());
        std::printf("-> %s", format_double(p.value).c_str());
        if (p.std_err) std::printf(" (se %.3g)", *p.std_err);
        if (p.reference) {
          std::printf(" ref %s pae %.3e", format_double(*p.reference).c_str(), *p.pae);
          pred.push_back(p.value);
          ref.push_back(*p.reference);
        }
        std::printf("\n");
      }
      if (!ref.empty()) std::printf("rmse=%.6e\n", rmse(pred, ref));
      if (!g.out.empty()) {
        std::filesystem::create_directories(g.out);
        write_price_table(rows, req.problem.d, g.out + "/table.csv");
      }
    } else if (surface->parsed()) {
      const Checkpoint ck = load_checkpoint(checkpoint_path);
      GridSpec spec;
      spec.diagonal = diagonal;
      for (const std::string& t : axis_texts) spec.axes.push_back(parse_axis(t));
      if (diagonal && spec.axes.size() == 2 && ck.net.d > 1) {
        // Shorthand: one price axis and the time axis.
        const AxisSpec time = spec.axes[1];
        spec.axes.resize(ck.net.d + 1, spec.axes[0]);
        spec.axes[ck.net.d] = time;
      }
      const std::string dir = g.out.empty() ? "." : g.out;
      std::filesystem::create_directories(dir);
      const std::size_t outside = export_surface(ck.net, ck.config.problem, spec, dir + "/surface.csv");
      if (outside > 0) {
        std::fprintf(stderr, "warning: %zu grid points lie outside the training domain\n", outside);
      }
      std::printf("wrote %s/surface.csv\n", dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
