#include "pirbf/network.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "pirbf/parallel.hpp"

namespace pirbf {

std::string_view to_string(ShapeMode mode) {
  return mode == ShapeMode::Scalar ? "scalar" : "per_dimension";
}

ShapeMode shape_mode_from_string(std::string_view name) {
  if (name == "scalar") return ShapeMode::Scalar;
  if (name == "per_dimension") return ShapeMode::PerDimension;
  throw std::invalid_argument("unknown shape mode '" + std::string(name) + "' (expected scalar or per_dimension)");
}

void check_network(const RbfNetwork& net) {
  const std::size_t n = net.neurons();
  if (n == 0) throw std::invalid_argument("network must have at least one neuron");
  if (net.d == 0) throw std::invalid_argument("network must have at least one asset dimension");
  if (net.centres.size() != n * net.input_dim()) throw std::invalid_argument("centre array size mismatch");
  if (net.shapes.size() != n * net.shape_width()) throw std::invalid_argument("shape array size mismatch");
  const auto finite = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(net.centres) || !finite(net.shapes) || !finite(net.weights) || !std::isfinite(net.bias)) {
    throw std::invalid_argument("network parameters must be finite");
  }
}

bool bitwise_equal(const RbfNetwork& a, const RbfNetwork& b) {
  const auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() && (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0);
  };
  return a.d == b.d && a.kind == b.kind && a.shape_mode == b.shape_mode && same(a.centres, b.centres) &&
         same(a.shapes, b.shapes) && same(a.weights, b.weights) &&
         std::bit_cast<std::uint64_t>(a.bias) == std::bit_cast<std::uint64_t>(b.bias);
}

ParamVector flatten(const RbfNetwork& net) {
  ParamVector p;
  p.reserve(net.param_count());
  p.insert(p.end(), net.centres.begin(), net.centres.end());
  p.insert(p.end(), net.shapes.begin(), net.shapes.end());
  p.insert(p.end(), net.weights.begin(), net.weights.end());
  p.push_back(net.bias);
  return p;
}

RbfNetwork unflatten(const RbfNetwork& layout, std::span<const double> params) {
  if (params.size() != layout.param_count()) {
    throw std::invalid_argument("parameter vector has length " + std::to_string(params.size()) + ", expected " +
                                std::to_string(layout.param_count()));
  }
  RbfNetwork net;
  net.d = layout.d;
  net.kind = layout.kind;
  net.shape_mode = layout.shape_mode;
  const std::size_t n = layout.neurons();
  auto it = params.begin();
  net.centres.assign(it, it + n * layout.input_dim());
  it += n * layout.input_dim();
  net.shapes.assign(it, it + n * layout.shape_width());
  it += n * layout.shape_width();
  net.weights.assign(it, it + n);
  it += n;
  net.bias = *it;
  return net;
}

namespace {

constexpr std::size_t kMaxDim = kMaxHaltonDims;
constexpr std::size_t kChunkPoints = 256;

// Neuron parameters in dimension-major layout with squared shapes expanded to
// every input dimension.
struct NeuronData {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<double> c;  // c[k * count + n]
  std::vector<double> a;  // C² per dimension
  const double* w = nullptr;

  explicit NeuronData(const RbfNetwork& net) : count(net.neurons()), dim(net.input_dim()), w(net.weights.data()) {
    c.resize(dim * count);
    a.resize(dim * count);
    const std::size_t sw = net.shape_width();
    for (std::size_t n = 0; n < count; ++n) {
      for (std::size_t k = 0; k < dim; ++k) {
        c[k * count + n] = net.centres[n * dim + k];
        const double s = net.shapes[n * sw + (sw == 1 ? 0 : k)];
        a[k * count + n] = s * s;
      }
    }
  }
};

Objective::Block make_block(const PointSet& pts) {
  Objective::Block b;
  b.count = pts.size();
  const std::size_t dim = pts.dim();
  b.x.resize(dim * b.count);
  for (std::size_t p = 0; p < b.count; ++p) {
    for (std::size_t k = 0; k < dim; ++k) b.x[k * b.count + p] = pts[p][k];
  }
  return b;
}

Objective::Block make_interior_block(const BsProblem& prob, const PointSet& pts) {
  Objective::Block b = make_block(pts);
  const std::size_t d = prob.d;
  b.second.resize(d * d * b.count);
  b.first.resize(d * b.count);
  for (std::size_t p = 0; p < b.count; ++p) {
    const OperatorCoeffs oc = operator_coeffs(prob, pts[p]);
    for (std::size_t ij = 0; ij < d * d; ++ij) b.second[ij * b.count + p] = oc.second[ij];
    for (std::size_t i = 0; i < d; ++i) b.first[i * b.count + p] = oc.first[i];
  }
  return b;
}

// Hot loops, specialised on kernel and (when ≥ 1) the asset dimension.
// Per-worker scratch arrays, one entry per neuron.
struct Workspace {
  std::vector<double> f, d1, d2, d3, P, Q, term;

  void resize(std::size_t n) {
    for (auto* v : {&f, &d1, &d2, &d3, &P, &Q, &term}) v->resize(n);
  }
};

// Sum in a fixed order with four interleaved partial sums, so the compiler can
// keep them in one vector register without reassociating anything.
double lane_sum(const double* t, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s[0] += t[i];
    s[1] += t[i + 1];
    s[2] += t[i + 2];
    s[3] += t[i + 3];
  }
  for (; i < n; ++i) s[i % 4] += t[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

template <KernelKind K, int Dim>
struct Core {
  static std::size_t assets(std::size_t d) {
    if constexpr (Dim > 0) {
      return static_cast<std::size_t>(Dim);
    } else {
      return d;
    }
  }

  struct PointCoeffs {
    std::array<double, kMaxDim> x{};
    std::array<double, kMaxDim> b{};
    std::array<double, kMaxDim * kMaxDim> A{};
  };

  static PointCoeffs load(const Objective::Block& blk, std::size_t d, std::size_t p, bool interior) {
    PointCoeffs pc;
    const std::size_t M = blk.count;
    for (std::size_t k = 0; k <= d; ++k) pc.x[k] = blk.x[k * M + p];
    if (interior) {
      for (std::size_t i = 0; i < d; ++i) pc.b[i] = blk.first[i * M + p];
      for (std::size_t ij = 0; ij < d * d; ++ij) pc.A[ij] = blk.second[ij * M + p];
    }
    return pc;
  }

  // Kernel jets for every neuron at one point; with `interior` also P, Q and
  // the weighted 𝓛φ terms, otherwise the weighted φ terms.
  static void neuron_pass(const NeuronData& nd, const PointCoeffs& pc, std::size_t d, bool interior, double r,
                          Workspace& ws) {
    const std::size_t D = d + 1;
    const std::size_t N = nd.count;
    const double* __restrict c = nd.c.data();
    const double* __restrict a = nd.a.data();
    const double* __restrict w = nd.w;
    double* __restrict f = ws.f.data();
    double* __restrict d1 = ws.d1.data();
    double* __restrict d2 = ws.d2.data();
    double* __restrict d3 = ws.d3.data();
    double* __restrict Pv = ws.P.data();
    double* __restrict Qv = ws.Q.data();
    double* __restrict term = ws.term.data();
    if (!interior) {
      for (std::size_t n = 0; n < N; ++n) {
        double u = 0.0;
        for (std::size_t k = 0; k < D; ++k) {
          const double diff = pc.x[k] - c[k * N + n];
          u += a[k * N + n] * diff * diff;
        }
        const KernelJet jet = detail::kernel_jet<K>(u);
        f[n] = jet.f;
        d1[n] = jet.d1;
        term[n] = w[n] * jet.f;
      }
      return;
    }
    for (std::size_t n = 0; n < N; ++n) {
      std::array<double, kMaxDim> g{};
      double u = 0.0;
      for (std::size_t k = 0; k < D; ++k) {
        const double ak = a[k * N + n];
        const double diff = pc.x[k] - c[k * N + n];
        u += ak * diff * diff;
        g[k] = 2.0 * ak * diff;
      }
      double P = g[d];
      for (std::size_t i = 0; i < d; ++i) P += pc.b[i] * g[i] + 2.0 * pc.A[i * d + i] * a[i * N + n];
      double Q = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double h = 0.0;
        for (std::size_t j = 0; j < d; ++j) h += pc.A[i * d + j] * g[j];
        Q += g[i] * h;
      }
      const KernelJet jet = detail::kernel_jet<K>(u);
      f[n] = jet.f;
      d1[n] = jet.d1;
      d2[n] = jet.d2;
      d3[n] = jet.d3;
      Pv[n] = P;
      Qv[n] = Q;
      term[n] = w[n] * (jet.d1 * P + jet.d2 * Q - r * jet.f);
    }
  }

  // V̂ at block points [begin, end).
  static void values(const NeuronData& nd, const Objective::Block& blk, double bias, std::size_t begin,
                     std::size_t end, double* out) {
    const std::size_t d = assets(nd.dim - 1);
    Workspace ws;
    ws.resize(nd.count);
    for (std::size_t p = begin; p < end; ++p) {
      neuron_pass(nd, load(blk, d, p, false), d, false, 0.0, ws);
      out[p] = lane_sum(ws.term.data(), nd.count) + bias;
    }
  }

  // 𝓛V̂ at interior block points [begin, end).
  static void residuals(const NeuronData& nd, const Objective::Block& blk, double bias, double r,
                        std::size_t begin, std::size_t end, double* out) {
    const std::size_t d = assets(nd.dim - 1);
    Workspace ws;
    ws.resize(nd.count);
    for (std::size_t p = begin; p < end; ++p) {
      neuron_pass(nd, load(blk, d, p, true), d, true, r, ws);
      out[p] = lane_sum(ws.term.data(), nd.count) - r * bias;
    }
  }

  // Fused loss/gradient over the points [begin, end) of one block. For each
  // point the residual (interior) or value (terminal/boundary) is formed first,
  // then its contribution (2/M)·e_p·∂e_p/∂θ is added to the chunk accumulators,
  // stored slot-major: acc[s*N + n] with slot 0 for W_n, then D centre slots and
  // D C²-slots, all before the W_n factor. `err` receives e_p.
  static void accumulate(const NeuronData& nd, const Objective::Block& blk, bool interior, double r, double bias,
                         double inv_m2, std::size_t begin, std::size_t end, double* err, double* acc,
                         Workspace& ws) {
    const std::size_t d = assets(nd.dim - 1);
    const std::size_t D = d + 1;
    const std::size_t N = nd.count;
    ws.resize(N);
    const double* __restrict c = nd.c.data();
    const double* __restrict a = nd.a.data();
    const double* __restrict f = ws.f.data();
    const double* __restrict d1 = ws.d1.data();
    const double* __restrict d2 = ws.d2.data();
    const double* __restrict d3 = ws.d3.data();
    const double* __restrict Pv = ws.P.data();
    const double* __restrict Qv = ws.Q.data();
    double* __restrict accW = acc;
    double* __restrict accC = acc + N;
    double* __restrict accA = acc + (1 + D) * N;

    for (std::size_t p = begin; p < end; ++p) {
      const PointCoeffs pc = load(blk, d, p, interior);
      neuron_pass(nd, pc, d, interior, r, ws);
      const double sum = lane_sum(ws.term.data(), N);
      const double e = interior ? sum - r * bias : sum + bias - blk.target[p];
      err[p] = e;
      const double wgt = inv_m2 * e;

      if (interior) {
        for (std::size_t n = 0; n < N; ++n) {
          std::array<double, kMaxDim> diff{};
          std::array<double, kMaxDim> g{};
          for (std::size_t k = 0; k < D; ++k) {
            diff[k] = pc.x[k] - c[k * N + n];
            g[k] = 2.0 * a[k * N + n] * diff[k];
          }
          const double P = Pv[n];
          const double Q = Qv[n];
          const double Lphi = d1[n] * P + d2[n] * Q - r * f[n];
          const double E = wgt * (d2[n] * P + d3[n] * Q - r * d1[n]);
          const double w1 = wgt * d1[n];
          const double w2 = wgt * d2[n];
          accW[n] += wgt * Lphi;
          for (std::size_t k = 0; k < d; ++k) {
            double h = 0.0;
            for (std::size_t j = 0; j < d; ++j) h += pc.A[k * d + j] * g[j];
            const double ak = a[k * N + n];
            accC[k * N + n] += -E * g[k] - 2.0 * w1 * ak * pc.b[k] - 4.0 * w2 * ak * h;
            accA[k * N + n] += E * diff[k] * diff[k] + 2.0 * w1 * (pc.b[k] * diff[k] + pc.A[k * d + k]) +
                               4.0 * w2 * diff[k] * h;
          }
          // Time slot: unit first-order coefficient, no second-order terms.
          const double at = a[d * N + n];
          accC[d * N + n] += -E * g[d] - 2.0 * w1 * at;
          accA[d * N + n] += E * diff[d] * diff[d] + 2.0 * w1 * diff[d];
        }
      } else {
        for (std::size_t n = 0; n < N; ++n) {
          const double w1 = wgt * d1[n];
          accW[n] += wgt * f[n];
          for (std::size_t k = 0; k < D; ++k) {
            const double diff = pc.x[k] - c[k * N + n];
            accC[k * N + n] += -2.0 * w1 * a[k * N + n] * diff;
            accA[k * N + n] += w1 * diff * diff;
          }
        }
      }
    }
  }
};

template <template <KernelKind, int> class Fn, class... Args>
void dispatch(KernelKind kind, std::size_t d, Args&&... args) {
  const auto by_dim = [&]<KernelKind K>() {
    switch (d) {
      case 1:
        Fn<K, 1>::run(std::forward<Args>(args)...);
        return;
      case 2:
        Fn<K, 2>::run(std::forward<Args>(args)...);
        return;
      case 3:
        Fn<K, 3>::run(std::forward<Args>(args)...);
        return;
      case 4:
        Fn<K, 4>::run(std::forward<Args>(args)...);
        return;
      default:
        Fn<K, 0>::run(std::forward<Args>(args)...);
    }
  };
  switch (kind) {
    case KernelKind::Gaussian:
      by_dim.template operator()<KernelKind::Gaussian>();
      return;
    case KernelKind::InverseQuadratic:
      by_dim.template operator()<KernelKind::InverseQuadratic>();
      return;
    case KernelKind::InverseMultiquadric:
      by_dim.template operator()<KernelKind::InverseMultiquadric>();
      return;
  }
}

template <KernelKind K, int Dim>
struct ValuesTask {
  static void run(const NeuronData& nd, const Objective::Block& blk, double bias, std::vector<double>& out) {
    parallel_for(blk.count, [&](std::size_t b, std::size_t e) { Core<K, Dim>::values(nd, blk, bias, b, e, out.data()); });
  }
};

template <KernelKind K, int Dim>
struct ResidualsTask {
  static void run(const NeuronData& nd, const Objective::Block& blk, double bias, double r,
                  std::vector<double>& out) {
    parallel_for(blk.count,
                 [&](std::size_t b, std::size_t e) { Core<K, Dim>::residuals(nd, blk, bias, r, b, e, out.data()); });
  }
};

template <KernelKind K, int Dim>
struct AccumulateTask {
  static void run(const NeuronData& nd, const Objective::Block& blk, bool interior, double r, double bias,
                  double inv_m2, std::size_t begin, std::size_t end, double* err, double* acc, Workspace& ws) {
    Core<K, Dim>::accumulate(nd, blk, interior, r, bias, inv_m2, begin, end, err, acc, ws);
  }
};

void check_dims(const RbfNetwork& net, std::size_t point_dim) {
  if (point_dim != net.input_dim()) {
    throw std::invalid_argument("point dimension " + std::to_string(point_dim) + " does not match network input " +
                                std::to_string(net.input_dim()));
  }
  if (net.input_dim() > kMaxDim) throw std::invalid_argument("network input dimension exceeds 16");
}

std::vector<double> block_values(const RbfNetwork& net, const Objective::Block& blk) {
  NeuronData nd(net);
  std::vector<double> out(blk.count);
  dispatch<ValuesTask>(net.kind, net.d, nd, blk, net.bias, out);
  return out;
}

std::vector<double> block_residuals(const RbfNetwork& net, double r, const Objective::Block& blk) {
  NeuronData nd(net);
  std::vector<double> out(blk.count);
  dispatch<ResidualsTask>(net.kind, net.d, nd, blk, net.bias, r, out);
  return out;
}

double mean_square(std::span<const double> e) {
  std::vector<double> sq(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) sq[i] = e[i] * e[i];
  return pairwise_sum(sq) / static_cast<double>(e.size());
}

}  // namespace

double evaluate(const RbfNetwork& net, std::span<const double> point) {
  check_dims(net, point.size());
  PointSet one(point.size());
  one.push_back(point);
  return evaluate(net, one)[0];
}

std::vector<double> evaluate(const RbfNetwork& net, const PointSet& points) {
  if (points.empty()) return {};
  check_dims(net, points.dim());
  return block_values(net, make_block(points));
}

double pde_residual(const RbfNetwork& net, const BsProblem& prob, std::span<const double> point) {
  check_dims(net, point.size());
  PointSet one(point.size());
  one.push_back(point);
  return pde_residuals(net, prob, one)[0];
}

std::vector<double> pde_residuals(const RbfNetwork& net, const BsProblem& prob, const PointSet& points) {
  if (points.empty()) return {};
  check_dims(net, points.dim());
  if (prob.d != net.d) throw std::invalid_argument("problem and network dimensions differ");
  return block_residuals(net, prob.r, make_interior_block(prob, points));
}

Objective::Objective(const BsProblem& prob, const TrainingSet& ts) : prob_(prob) {
  if (ts.interior.empty() || ts.terminal.empty() || ts.boundary.empty()) {
    throw std::invalid_argument("every training partition must be non-empty");
  }
  const std::size_t dim = prob.d + 1;
  if (ts.interior.dim() != dim || ts.terminal.dim() != dim || ts.boundary.dim() != dim) {
    throw std::invalid_argument("training points do not match the problem dimension");
  }
  interior_ = make_interior_block(prob, ts.interior);
  terminal_ = make_block(ts.terminal);
  boundary_ = make_block(ts.boundary);
  terminal_.target.resize(terminal_.count);
  for (std::size_t q = 0; q < terminal_.count; ++q) terminal_.target[q] = payoff_value(prob, ts.terminal[q]);
  boundary_.target.resize(boundary_.count);
  for (std::size_t q = 0; q < boundary_.count; ++q) boundary_.target[q] = boundary_value(prob, ts.boundary[q]);
}

LossBreakdown Objective::loss(const RbfNetwork& net) const {
  check_dims(net, prob_.d + 1);
  const std::vector<double> R = block_residuals(net, prob_.r, interior_);
  std::vector<double> eT = block_values(net, terminal_);
  std::vector<double> eB = block_values(net, boundary_);
  for (std::size_t q = 0; q < eT.size(); ++q) eT[q] -= terminal_.target[q];
  for (std::size_t q = 0; q < eB.size(); ++q) eB[q] -= boundary_.target[q];
  LossBreakdown lb;
  lb.pde = mean_square(R);
  lb.terminal = mean_square(eT);
  lb.boundary = mean_square(eB);
  lb.total = lb.pde + lb.terminal + lb.boundary;
  return lb;
}

LossBreakdown Objective::loss_and_gradient(const RbfNetwork& net, std::span<double> grad) const {
  check_dims(net, prob_.d + 1);
  if (grad.size() != net.param_count()) throw std::invalid_argument("gradient buffer has the wrong length");

  const std::size_t N = net.neurons();
  const std::size_t D = net.input_dim();
  const std::size_t stride = 2 * D + 1;
  const NeuronData nd(net);

  // Fixed-size point chunks, each with its own accumulator, summed in chunk
  // order afterwards: the bracketing never depends on the worker count.
  struct Chunk {
    const Block* blk;
    bool interior;
    double inv_m2;
    std::size_t begin;
    std::size_t end;
    double* err;
  };
  std::vector<double> R(interior_.count);
  std::vector<double> eT(terminal_.count);
  std::vector<double> eB(boundary_.count);
  std::vector<Chunk> chunks;
  const auto add_chunks = [&](const Block& blk, bool interior, std::vector<double>& err) {
    const double inv_m2 = 2.0 / static_cast<double>(blk.count);
    for (std::size_t b = 0; b < blk.count; b += kChunkPoints) {
      chunks.push_back({&blk, interior, inv_m2, b, std::min(blk.count, b + kChunkPoints), err.data()});
    }
  };
  add_chunks(interior_, true, R);
  add_chunks(terminal_, false, eT);
  add_chunks(boundary_, false, eB);

  std::vector<double> acc(chunks.size() * N * stride, 0.0);
  parallel_for(chunks.size(), [&](std::size_t cb, std::size_t ce) {
    Workspace ws;
    for (std::size_t ci = cb; ci < ce; ++ci) {
      const Chunk& c = chunks[ci];
      dispatch<AccumulateTask>(net.kind, net.d, nd, *c.blk, c.interior, prob_.r, net.bias, c.inv_m2, c.begin,
                               c.end, c.err, acc.data() + ci * N * stride, ws);
    }
  });
  std::vector<double> total(N * stride, 0.0);
  for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
    const double* a = acc.data() + ci * N * stride;
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += a[i];
  }

  LossBreakdown lb;
  lb.pde = mean_square(R);
  lb.terminal = mean_square(eT);
  lb.boundary = mean_square(eB);
  lb.total = lb.pde + lb.terminal + lb.boundary;

  double* out = grad.data();
  const auto slot = [&](std::size_t s, std::size_t n) { return total[s * N + n]; };
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < D; ++k) out[n * D + k] = net.weights[n] * slot(1 + k, n);
  }
  out += N * D;
  if (net.shape_mode == ShapeMode::PerDimension) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < D; ++k) {
        out[n * D + k] = 2.0 * net.shapes[n * D + k] * net.weights[n] * slot(1 + D + k, n);
      }
    }
    out += N * D;
  } else {
    for (std::size_t n = 0; n < N; ++n) {
      double s = 0.0;
      for (std::size_t k = 0; k < D; ++k) s += slot(1 + D + k, n);
      out[n] = 2.0 * net.shapes[n] * net.weights[n] * s;
    }
    out += N;
  }
  for (std::size_t n = 0; n < N; ++n) out[n] = slot(0, n);
  out += N;

  // The bias enters 𝓛V̂ as −r·bias and V̂ as +bias.
  std::vector<double> bias_terms;
  bias_terms.reserve(R.size() + eT.size() + eB.size());
  const double sR = 2.0 / static_cast<double>(R.size());
  const double sT = 2.0 / static_cast<double>(eT.size());
  const double sB = 2.0 / static_cast<double>(eB.size());
  for (double e : R) bias_terms.push_back(-prob_.r * sR * e);
  for (double e : eT) bias_terms.push_back(sT * e);
  for (double e : eB) bias_terms.push_back(sB * e);
  *out = pairwise_sum(bias_terms);
  return lb;
}

LossBreakdown loss(const RbfNetwork& net, const BsProblem& prob, const TrainingSet& ts) {
  return Objective(prob, ts).loss(net);
}

ParamVector loss_gradient(const RbfNetwork& net, const BsProblem& prob, const TrainingSet& ts) {
  ParamVector g(net.param_count());
  Objective(prob, ts).loss_and_gradient(net, g);
  return g;
}

NetworkStreams::NetworkStreams(std::uint64_t seed, bool halton_centres, std::uint64_t halton_skip)
    : centres(halton_centres ? UnitCubeSampler(HaltonCursor(halton_skip))
                             : UnitCubeSampler(RngStream(seed, StreamLabel::Centres))),
      shapes(seed, StreamLabel::Shapes),
      weights(seed, StreamLabel::Weights) {}

double midpoint_shape(double centre, double hi) {
  const double left = hi - centre;
  return 1.0 / std::sqrt(left * left * left + centre * centre * centre);
}

void initial_shapes(const BsProblem& prob, ShapeMode mode, std::span<const double> centre, RngStream& shapes,
                    std::span<double> out) {
  if (mode == ShapeMode::Scalar) {
    out[0] = shapes.uniform();
    return;
  }
  for (std::size_t k = 0; k < prob.d; ++k) out[k] = midpoint_shape(centre[k], prob.s_max);
  out[prob.d] = midpoint_shape(centre[prob.d], prob.T);
}

RbfNetwork init_network(const BsProblem& prob, std::size_t n, KernelKind kind, NetworkStreams& streams,
                        const InitOptions& options) {
  if (n == 0) throw std::invalid_argument("init_network: need at least one neuron");
  RbfNetwork net;
  net.d = prob.d;
  net.kind = kind;
  net.shape_mode = options.shape_mode.value_or(prob.d == 1 ? ShapeMode::Scalar : ShapeMode::PerDimension);
  const std::size_t D = net.input_dim();
  const std::size_t sw = net.shape_width();
  net.centres.resize(n * D);
  net.shapes.resize(n * sw);
  net.weights.resize(n);

  std::vector<double> u(D);
  for (std::size_t i = 0; i < n; ++i) {
    streams.centres.next(u);
    for (std::size_t k = 0; k < prob.d; ++k) net.centres[i * D + k] = u[k] * prob.s_max;
    net.centres[i * D + prob.d] = u[prob.d] * prob.T;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<double> row(net.shapes.data() + i * sw, sw);
    if (options.uniform_shape) {
      std::fill(row.begin(), row.end(), *options.uniform_shape);
    } else {
      initial_shapes(prob, net.shape_mode, std::span<const double>(net.centres.data() + i * D, D), streams.shapes,
                     row);
    }
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(n + 1));
  for (double& w : net.weights) w = streams.weights.uniform(-bound, bound);
  net.bias = streams.weights.uniform(-bound, bound);
  return net;
}

}  // namespace pirbf
