// Runs every acceptance experiment and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria (capped at 100).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pirbf/app.hpp"
#include "pirbf/kernels.hpp"
#include "pirbf/lbfgs.hpp"
#include "pirbf/network.hpp"
#include "pirbf/oracle.hpp"
#include "pirbf/parallel.hpp"
#include "pirbf/trainer.hpp"

using namespace pirbf;
namespace fs = std::filesystem;

namespace {

constexpr double kBasketReference = 0.0971;
constexpr KernelKind kAllKernels[] = {KernelKind::Gaussian, KernelKind::InverseQuadratic,
                                      KernelKind::InverseMultiquadric};

struct Report {
  int failures = 0;
  std::vector<std::string> lines;

  void add(const std::string& id, bool pass, const std::string& detail) {
    std::string line = id + " " + (pass ? "PASS" : "FAIL") + "  " + detail;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    lines.push_back(std::move(line));
    if (!pass) ++failures;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.4e", v); }

RunConfig load(const std::string& name) { return load_config(std::string(PIRBF_CONFIG_DIR) + "/" + name); }

RunOutcome train(const RunConfig& cfg, const fs::path& dir, const std::string& label) {
  const auto t0 = std::chrono::steady_clock::now();
  RunHooks hooks;
  hooks.progress = [&](const IterationRecord& r) {
    if (r.iteration % 250 != 0) return;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "[%s] it=%zu N=%zu loss=%.3e rmse=%s t=%.0fs\n", label.c_str(), r.iteration, r.neurons,
                 r.loss.total, r.test_rmse ? sci(*r.test_rmse).c_str() : "-", secs);
  };
  RunOutcome o = run_training(cfg, dir.string(), hooks);
  std::fprintf(stderr, "[%s] done: %zu iterations, %zu neurons, stop=%s, rmse=%s, %.0fs\n", label.c_str(),
               o.history.iterations(), o.checkpoint.net.neurons(), std::string(to_string(o.history.stop)).c_str(),
               o.checkpoint.history.final_test_rmse ? sci(*o.checkpoint.history.final_test_rmse).c_str() : "-",
               o.wall_seconds);
  return o;
}

double final_rmse(const RunOutcome& o) {
  return o.checkpoint.history.final_test_rmse.value_or(std::numeric_limits<double>::quiet_NaN());
}

// First iteration at which the test RMSE enters the band.
std::optional<std::size_t> iterations_to_band(const RunHistory& h, double band) {
  for (const IterationRecord& r : h.records) {
    if (r.test_rmse && *r.test_rmse <= band) return r.iteration;
  }
  return std::nullopt;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Every record's neuron count equals n0 + m·(insertions so far), and insertions
// happen exactly at the multiples of k that precede the stop.
bool schedule_holds(const RunHistory& h, const AdaptiveConfig& a) {
  const std::size_t last = h.iterations();
  for (const IterationRecord& r : h.records) {
    std::size_t inserted = r.iteration / a.k;
    if (r.iteration == last && h.stop == StopReason::Converged && r.iteration % a.k == 0) --inserted;
    if (r.neurons != a.n0 + a.m * inserted) return false;
  }
  for (std::size_t i = 0; i < h.insertions.size(); ++i) {
    if (h.insertions[i].iteration != (i + 1) * a.k) return false;
  }
  return true;
}

// ---- criterion 1 and 2 -------------------------------------------------------

void criterion_1_2(const fs::path& out, std::size_t seeds, Report& rep) {
  const RunConfig base = load("put1d_fixed.toml");
  std::vector<double> rmses;
  std::optional<RunOutcome> gaussian_seed1;
  for (std::uint64_t s = 1; s <= seeds; ++s) {
    RunConfig c = base;
    c.seed = s;
    RunOutcome o = train(c, out / "c1" / ("seed_" + std::to_string(s)), "c1 seed " + std::to_string(s));
    rmses.push_back(final_rmse(o));
    if (s == 1) gaussian_seed1 = std::move(o);
  }
  const double med = median(rmses);
  const double best = *std::min_element(rmses.begin(), rmses.end());
  std::ostringstream d1;
  d1 << "fixed N=1200 gaussian, " << seeds << " seeds: median RMSE " << sci(med) << " (<= 2e-3), best " << sci(best)
     << " (<= 8e-4); all:";
  for (double r : rmses) d1 << " " << sci(r);
  rep.add("criterion 1", med <= 2e-3 && best <= 8e-4, d1.str());

  std::ostringstream d2;
  bool pass = true;
  std::vector<double> to_band;
  for (KernelKind k : kAllKernels) {
    const RunOutcome* o = nullptr;
    std::optional<RunOutcome> own;
    if (k == KernelKind::Gaussian) {
      o = &*gaussian_seed1;
    } else {
      RunConfig c = base;
      c.kernel = k;
      own = train(c, out / "c2" / std::string(to_string(k)), "c2 " + std::string(to_string(k)));
      o = &*own;
    }
    const double r = final_rmse(*o);
    const auto it = iterations_to_band(o->history, 2e-3);
    pass = pass && r <= 2e-3 && it.has_value();
    if (it) to_band.push_back(static_cast<double>(*it));
    d2 << to_string(k) << ": RMSE " << sci(r) << ", first iteration in band "
       << (it ? std::to_string(*it) : std::string("never")) << ", stopped at " << o->history.iterations() << "; ";
  }
  double ratio = std::numeric_limits<double>::infinity();
  if (to_band.size() == 3) {
    ratio = *std::max_element(to_band.begin(), to_band.end()) / *std::min_element(to_band.begin(), to_band.end());
  }
  d2 << "iteration ratio " << fmt("%.2f", ratio) << " (<= 3)";
  rep.add("criterion 2", pass && ratio <= 3.0, d2.str());
}

// ---- criterion 3, 4, 5 -------------------------------------------------------

void criterion_3_4_5(const fs::path& out, Report& rep) {
  const RunConfig base = load("put1d_adaptive.toml");
  const RunOutcome def = train(base, out / "c3", "c3 adaptive");
  const std::size_t n = def.checkpoint.net.neurons();
  const double r3 = final_rmse(def);
  const bool sched = schedule_holds(def.history, base.adaptive);
  const bool converged = def.history.stop == StopReason::Converged;
  rep.add("criterion 3", converged && (n == 700 || n == 750 || n == 800) && r3 <= 2e-3 && sched,
          "adaptive put: stop=" + std::string(to_string(def.history.stop)) + " at iteration " +
              std::to_string(def.history.iterations()) + ", " + std::to_string(n) + " neurons (700/750/800), RMSE " +
              sci(r3) + " (<= 2e-3), schedule invariant " + (sched ? "holds" : "violated"));

  const RunOutcome halton = train(load("put1d_halton.toml"), out / "c4" / "halton", "c4 halton");
  const RunOutcome unit = train(load("put1d_unit_shapes.toml"), out / "c4" / "unit_shapes", "c4 unit shapes");
  const double rh = final_rmse(halton);
  const double ru = final_rmse(unit);
  const bool ok4 = halton.history.stop == StopReason::Converged && unit.history.stop == StopReason::Converged &&
                   rh <= 5e-3 && ru <= 5e-3 && r3 <= rh && r3 <= ru;
  rep.add("criterion 4", ok4,
          "halton: stop=" + std::string(to_string(halton.history.stop)) + " RMSE " + sci(rh) +
              "; unit shapes: stop=" + std::string(to_string(unit.history.stop)) + " RMSE " + sci(ru) +
              " (both <= 5e-3); default " + sci(r3) + " (no worse than either)");

  ProblemOverrides ov;
  ov.sigma = std::vector<double>{0.3};
  const RunOutcome ft = run_fine_tune(def.checkpoint, ov, (out / "c5" / "finetune").string());
  RunConfig scratch_cfg = base;
  scratch_cfg.problem.sigma = {0.3};
  const RunOutcome scratch = train(scratch_cfg, out / "c5" / "scratch", "c5 scratch sigma=0.3");
  const double rf = final_rmse(ft);
  const double rs = final_rmse(scratch);
  const double factor = std::max(rf, rs) / std::min(rf, rs);
  rep.add("criterion 5", ft.history.iterations() < scratch.history.iterations() && factor <= 3.0,
          "sigma 0.2 -> 0.3: fine-tune " + std::to_string(ft.history.iterations()) + " iterations, RMSE " + sci(rf) +
              "; from scratch " + std::to_string(scratch.history.iterations()) + " iterations, RMSE " + sci(rs) +
              "; RMSE factor " + fmt("%.2f", factor) + " (<= 3)");
}

// ---- criterion 6 and 7 -------------------------------------------------------

void criterion_6(const fs::path& out, Report& rep) {
  const RunConfig cfg = load("exchange2d.toml");
  const RunOutcome o = train(cfg, out / "c6", "c6 exchange");
  const double r = final_rmse(o);
  const auto& st = o.history.stages;
  const double first = st.empty() || !st.front().test_rmse ? std::nan("") : *st.front().test_rmse;
  const double last = st.empty() || !st.back().test_rmse ? std::nan("") : *st.back().test_rmse;
  rep.add("criterion 6", r <= 2e-2 && last <= first,
          "exchange option, 11 table points: RMSE " + sci(r) + " (<= 2e-2); first stage " + sci(first) +
              ", final stage " + sci(last) + " (final <= first); " + std::to_string(o.checkpoint.net.neurons()) +
              " neurons after " + std::to_string(o.history.iterations()) + " iterations");
}

double basket_centre_value(const RunOutcome& o) {
  const double x[5] = {1.0, 1.0, 1.0, 1.0, 0.0};
  return evaluate(o.checkpoint.net, x);
}

void criterion_7(const fs::path& out, bool full, Report& rep) {
  const RunOutcome scaled = train(load("basket4d_scaled.toml"), out / "c7" / "scaled", "c7 basket scaled");
  const double v = basket_centre_value(scaled);
  rep.add("criterion 7", std::abs(v - kBasketReference) <= 0.01,
          "basket, n0=1500: V(1,1,1,1,0) = " + fmt("%.5f", v) + ", |err| = " +
              fmt("%.5f", std::abs(v - kBasketReference)) + " (<= 0.01); " +
              std::to_string(scaled.checkpoint.net.neurons()) + " neurons after " +
              std::to_string(scaled.history.iterations()) + " iterations");
  if (!full) {
    std::printf("criterion 7 (full scale) SKIPPED  --skip-full-basket given\n");
    return;
  }
  try {
    const RunOutcome fs_run = train(load("basket4d.toml"), out / "c7" / "full", "c7 basket full");
    const double vf = basket_centre_value(fs_run);
    rep.add("criterion 7 (full scale)", true,
            "ran to completion: V(1,1,1,1,0) = " + fmt("%.5f", vf) + ", |err| = " +
                fmt("%.5f", std::abs(vf - kBasketReference)) + " (reported, not gated); " +
                std::to_string(fs_run.checkpoint.net.neurons()) + " neurons after " +
                std::to_string(fs_run.history.iterations()) + " iterations");
  } catch (const std::exception& e) {
    rep.add("criterion 7 (full scale)", false, std::string("did not complete: ") + e.what());
  }
}

// ---- criterion 8 -------------------------------------------------------------

double put_by_quadrature(double S, double tau, double K, double r, double sigma) {
  using boost::math::quadrature::gauss_kronrod;
  const double drift = (r - 0.5 * sigma * sigma) * tau;
  const double vol = sigma * std::sqrt(tau);
  const double z_star = (std::log(K / S) - drift) / vol;
  const auto f = [&](double z) {
    return std::max(K - S * std::exp(drift + vol * z), 0.0) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  };
  return std::exp(-r * tau) *
         gauss_kronrod<double, 61>::integrate(f, -std::numeric_limits<double>::infinity(), z_star, 15, 1e-15);
}

void criterion_8(Report& rep) {
  const BsProblem ex = make_exchange_2d();
  McConfig mc;
  mc.n_paths = 1'000'000;
  mc.seed = 11;
  std::ostringstream da;
  bool ok_a = true;
  for (double s2 : {12.0, 20.0, 28.0}) {
    const double S0[2] = {20.0, s2};
    const McEstimate e = mc_price(ex, S0, mc);
    const double exact = margrabe_exact(20.0, s2, 0.0, ex);
    const double z = std::abs(e.price - exact) / e.std_err;
    ok_a = ok_a && z <= 3.0;
    da << "(20," << s2 << "): mc " << fmt("%.5f", e.price) << " exact " << fmt("%.5f", exact) << " z=" << fmt("%.2f", z)
       << "; ";
  }
  rep.add("criterion 8a", ok_a, "exchange MC at 1e6 paths within 3 std_err: " + da.str());

  const BsProblem basket = make_basket_4d();
  McConfig big;
  big.n_paths = 10'000'000;
  big.seed = 12;
  const double S0[4] = {1.0, 1.0, 1.0, 1.0};
  const McEstimate b = mc_price(basket, S0, big);
  rep.add("criterion 8b", std::abs(b.price - kBasketReference) <= 0.002,
          "basket MC at 1e7 paths: " + fmt("%.5f", b.price) + " +- " + sci(b.std_err) + ", |err| vs 0.0971 = " +
              fmt("%.5f", std::abs(b.price - kBasketReference)) + " (<= 0.002)");

  double worst = 0.0;
  int count = 0;
  for (double S : {2.0, 5.0, 8.0, 9.5, 10.0, 10.5, 12.0, 15.0, 20.0, 25.0}) {
    for (double t : {0.0, 0.3}) {
      worst = std::max(worst, std::abs(bs_put_exact(S, t, 10.0, 0.05, 0.2, 0.5) -
                                       put_by_quadrature(S, 0.5 - t, 10.0, 0.05, 0.2)));
      ++count;
    }
  }
  rep.add("criterion 8c", worst <= 1e-8 && count == 20,
          "put closed form vs quadrature at " + std::to_string(count) + " points: max |diff| " + sci(worst) +
              " (<= 1e-8)");
}

// ---- criterion 9 -------------------------------------------------------------

BsProblem problem_for(std::size_t d) {
  if (d == 1) return make_put_1d();
  if (d == 2) return make_exchange_2d();
  return make_basket_4d();
}

RbfNetwork random_net(const BsProblem& p, std::size_t n, KernelKind kind, ShapeMode mode, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RbfNetwork net;
  net.d = p.d;
  net.kind = kind;
  net.shape_mode = mode;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p.d; ++k) net.centres.push_back(p.s_max * (1.2 * u(gen) - 0.1));
    net.centres.push_back(p.T * u(gen));
    if (mode == ShapeMode::Scalar) {
      net.shapes.push_back((0.5 + u(gen)) * 2.0 / p.s_max);
    } else {
      for (std::size_t k = 0; k < p.d; ++k) net.shapes.push_back((0.5 + u(gen)) * 2.0 / p.s_max);
      net.shapes.push_back((0.5 + u(gen)) / p.T);
    }
    net.weights.push_back(2.0 * u(gen) - 1.0);
  }
  net.bias = u(gen) - 0.5;
  return net;
}

double kernel_fd_error() {
  double worst = 0.0;
  const double h = 1e-5;
  for (KernelKind k : kAllKernels) {
    for (double u = 0.0; u <= 6.0; u += 0.05) {
      const double a = u + 2 * h;  // keep the stencil inside u >= 0
      worst = std::max(worst, std::abs((kernel_value(k, a + h) - kernel_value(k, a - h)) / (2 * h) - kernel_d1(k, a)));
      worst = std::max(worst, std::abs((kernel_d1(k, a + h) - kernel_d1(k, a - h)) / (2 * h) - kernel_d2(k, a)));
      worst = std::max(worst, std::abs((kernel_d2(k, a + h) - kernel_d2(k, a - h)) / (2 * h) - kernel_d3(k, a)));
    }
  }
  return worst;
}

double gradient_fd_error() {
  double worst = 0.0;
  for (std::size_t d : {1u, 2u, 4u}) {
    const BsProblem p = problem_for(d);
    const TrainingSet ts = build_training_set(p, 12, 4, 4 * d, PseudoRandomPoints{d});
    for (KernelKind k : kAllKernels) {
      for (ShapeMode mode : {ShapeMode::Scalar, ShapeMode::PerDimension}) {
        const RbfNetwork net = random_net(p, 5, k, mode, 100 + d);
        const ParamVector g = loss_gradient(net, p, ts);
        ParamVector theta = flatten(net);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
          const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
          const double keep = theta[i];
          theta[i] = keep + h;
          const double up = loss(unflatten(net, theta), p, ts).total;
          theta[i] = keep - h;
          const double down = loss(unflatten(net, theta), p, ts).total;
          theta[i] = keep;
          const double fd = (up - down) / (2 * h);
          num = std::max(num, std::abs(g[i] - fd));
          den = std::max(den, std::abs(fd));
        }
        worst = std::max(worst, num / den);
      }
    }
  }
  return worst;
}

// 𝓛 applied to a closed-form price by central differences.
double fd_operator(const BsProblem& p, const std::function<double(const std::vector<double>&)>& price,
                   const std::vector<double>& x) {
  const std::size_t d = p.d;
  const double ht = 1e-5;
  auto xp = x, xm = x;
  xp[d] += ht;
  xm[d] -= ht;
  const double dt = (price(xp) - price(xm)) / (2 * ht);
  std::vector<double> grad(d), hess(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    const double hi = 1e-4 * std::max(1.0, x[i]);
    for (std::size_t j = 0; j < d; ++j) {
      const double hj = 1e-4 * std::max(1.0, x[j]);
      auto pp = x, pm = x, mp = x, mm = x;
      pp[i] += hi, pp[j] += hj;
      pm[i] += hi, pm[j] -= hj;
      mp[i] -= hi, mp[j] += hj;
      mm[i] -= hi, mm[j] -= hj;
      hess[i * d + j] = (price(pp) - price(pm) - price(mp) + price(mm)) / (4 * hi * hj);
    }
    auto a = x, b = x;
    a[i] += hi;
    b[i] -= hi;
    grad[i] = (price(a) - price(b)) / (2 * hi);
  }
  return apply_operator(operator_coeffs(p, x), price(x), dt, grad, hess);
}

double operator_residual_error() {
  double worst = 0.0;
  const BsProblem put = make_put_1d();
  const auto put_price = [&](const std::vector<double>& x) {
    return bs_put_exact(x[0], x[1], 10.0, put.r, put.sigma[0], put.T);
  };
  for (double S : {2.0, 6.0, 9.5, 10.0, 12.0, 20.0}) {
    for (double t : {0.0, 0.2, 0.4}) worst = std::max(worst, std::abs(fd_operator(put, put_price, {S, t})));
  }
  const BsProblem ex = make_exchange_2d();
  const auto ex_price = [&](const std::vector<double>& x) { return margrabe_exact(x[0], x[1], x[2], ex); };
  for (double S1 : {8.0, 20.0, 31.0}) {
    for (double S2 : {10.0, 20.0, 27.0}) {
      for (double t : {0.0, 0.5, 0.9}) worst = std::max(worst, std::abs(fd_operator(ex, ex_price, {S1, S2, t})));
    }
  }
  return worst;
}

bool lbfgs_checks() {
  const ObjectiveFn quad = [](std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      g[i] = x[i];
      f += 0.5 * x[i] * x[i];
    }
    return f;
  };
  OptState q = lbfgs_iterate(make_state({3.0, -4.0, 0.5}, quad), quad, {});
  double qn = 0.0;
  for (double v : q.x) qn = std::max(qn, std::abs(v));
  const ObjectiveFn rosen = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  LbfgsConfig cfg;
  cfg.history = 10;
  OptState r = make_state({-1.2, 1.0}, rosen);
  for (int i = 0; i < 60 && r.loss > 1e-10; ++i) r = lbfgs_iterate(std::move(r), rosen, cfg);
  return qn <= 1e-12 && r.loss <= 1e-10;
}

RunHistory synthetic(const std::vector<double>& mses, const std::vector<double>& losses) {
  RunHistory h;
  for (std::size_t i = 0; i < mses.size(); ++i) {
    IterationRecord r;
    r.iteration = i;
    r.candidate_mse = mses[i];
    r.loss.total = losses[i];
    h.records.push_back(r);
  }
  return h;
}

bool should_stop_table() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  return !should_stop(synthetic({5, 4, 3, 2}, {1, 1, 1, 1}), 2, 1e9) &&
         should_stop(synthetic({1.0, 1.0 + 1e-8}, {1.0, 1.0 - 1e-10}), 1, 1e-9) &&
         !should_stop(synthetic({1.0, 1.0 + 1e-8}, {1.0, 1.0 - 1e-5}), 1, 1e-9) &&
         !should_stop(synthetic({1.0, 0.5}, {1.0, 0.0}), 1, 1e-9) &&
         !should_stop(synthetic({1.0, 1.0}, {1.0, 1.0}), 1, 1e-9) &&
         !should_stop(synthetic({9, 1, 1, 2}, {1, 1, 1, 1}), 3, 1.0) &&
         should_stop(synthetic({1, 1, 1, 2}, {1, 1, 1, 1}), 3, 1.0) &&
         !should_stop(synthetic({1.0}, {1.0}), 1, 1.0) && !should_stop(synthetic({nan, 1.0}, {1.0, 1.0}), 1, 1.0) &&
         should_stop(synthetic({3, 2, 2.5}, {9, 1, 5}), 1, inf);
}

bool round_trips() {
  const BsProblem p = make_basket_4d();
  const RbfNetwork net = random_net(p, 7, KernelKind::InverseMultiquadric, ShapeMode::PerDimension, 3);
  if (!bitwise_equal(unflatten(net, flatten(net)), net)) return false;
  Checkpoint ck;
  ck.config = load("basket4d.toml");
  ck.net = net;
  ck.history.iterations = 3;
  ck.history.stop_reason = "converged";
  ck.history.final_loss = 1.0 / 7.0;
  const std::string text = serialize(ck);
  const Checkpoint back = deserialize(text);
  return bitwise_equal(back.net, net) && serialize(back) == text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool deterministic_runs(const fs::path& out) {
  RunConfig c = load("put1d_adaptive.toml");
  c.m_interior = 200;
  c.m_terminal = 50;
  c.m_boundary = 50;
  c.adaptive.n0 = 40;
  c.adaptive.k = 10;
  c.adaptive.m = 5;
  c.adaptive.s = 100;
  c.adaptive.w = 8;
  c.adaptive.max_iters = 40;
  c.test.points = 50;
  run_training(c, (out / "c9" / "a").string());
  run_training(c, (out / "c9" / "b").string());
  const std::string a = slurp(out / "c9" / "a" / "history.csv");
  return !a.empty() && a == slurp(out / "c9" / "b" / "history.csv");
}

void criterion_9(const fs::path& out, Report& rep) {
  const double k = kernel_fd_error();
  const double g = gradient_fd_error();
  const double op = operator_residual_error();
  const bool lb = lbfgs_checks();
  const bool ss = should_stop_table();
  const bool rt = round_trips();
  const bool det = deterministic_runs(out);
  rep.add("criterion 9", k <= 1e-6 && g <= 1e-5 && op <= 1e-4 && lb && ss && rt && det,
          "kernel FD " + sci(k) + " (<= 1e-6); gradient FD rel " + sci(g) + " (<= 1e-5); operator on oracles " +
              sci(op) + " (<= 1e-4); L-BFGS " + (lb ? "ok" : "failed") + "; should_stop table " +
              (ss ? "ok" : "failed") + "; round trips " + (rt ? "bit-exact" : "differ") + "; two runs " +
              (det ? "identical" : "differ"));
}

std::set<int> parse_only(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance experiments"};
  std::string out = "acceptance_runs";
  std::string only;
  std::size_t seeds = 8;
  bool skip_full = false;
  std::size_t threads = 0;
  app.add_option("--out", out, "directory for run outputs");
  app.add_option("--only", only, "comma-separated criterion numbers");
  app.add_option("--seeds", seeds, "seeds in the criterion 1 sweep")->check(CLI::PositiveNumber);
  app.add_flag("--skip-full-basket", skip_full, "skip the full-scale basket run");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");
  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);

  const std::set<int> sel = parse_only(only);
  const auto want = [&](int c) { return sel.empty() || sel.contains(c); };
  Report rep;
  const fs::path dir(out);
  fs::create_directories(dir);
  const auto guarded = [&](const std::string& id, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      rep.add(id, false, std::string("error: ") + e.what());
    }
  };
  if (want(9)) guarded("criterion 9", [&] { criterion_9(dir, rep); });
  if (want(8)) guarded("criterion 8", [&] { criterion_8(rep); });
  if (want(1) || want(2)) guarded("criterion 1/2", [&] { criterion_1_2(dir, seeds, rep); });
  if (want(3) || want(4) || want(5)) guarded("criterion 3/4/5", [&] { criterion_3_4_5(dir, rep); });
  if (want(6)) guarded("criterion 6", [&] { criterion_6(dir, rep); });
  if (want(7)) guarded("criterion 7", [&] { criterion_7(dir, !skip_full, rep); });

  std::printf("\n%zu criteria checked, %d failed\n", rep.lines.size(), rep.failures);
  std::ofstream summary(dir / "acceptance.txt");
  for (const std::string& l : rep.lines) summary << l << "\n";
  return std::min(rep.failures, 100);
}
