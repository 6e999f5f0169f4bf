#include "ntklab/netcore.hpp"

#include <atomic>
#include <cmath>

#include "ntklab/errors.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeightMap = Eigen::Map<const RowMajorMatrix>;
using WeightMap = Eigen::Map<RowMajorMatrix>;

std::atomic<std::uint64_t> g_train_calls{0};

bool is_weighted(EdgeOp op) {
  return op == EdgeOp::linear || op == EdgeOp::linear_relu || op == EdgeOp::linear_tanh;
}

// Flat parameter layout: stem (n x n0, row-major), then per cell the weight
// matrix of every weighted edge in canonical edge order (n x n each), then
// the head vector (n).
struct Layout {
  Eigen::Index stem = 0;
  std::vector<std::array<Eigen::Index, kNumCellEdges>> edge;  // -1 when unweighted
  Eigen::Index head = 0;
  Eigen::Index total = 0;
};

Layout make_layout(const CellArch& arch, int n, int n0) {
  Layout lay;
  lay.edge.resize(static_cast<std::size_t>(arch.cells));
  Eigen::Index off = static_cast<Eigen::Index>(n) * n0;
  for (int c = 0; c < arch.cells; ++c) {
    for (int e = 0; e < kNumCellEdges; ++e) {
      if (is_weighted(arch.edge_ops[e])) {
        lay.edge[c][e] = off;
        off += static_cast<Eigen::Index>(n) * n;
      } else {
        lay.edge[c][e] = -1;
      }
    }
  }
  lay.head = off;
  lay.total = off + n;
  return lay;
}

double scheme_factor(InitScheme scheme, Eigen::Index fan_in, Eigen::Index fan_out) {
  switch (scheme) {
    case InitScheme::lecun:
      return 1.0;
    case InitScheme::xavier:
      return std::sqrt(2.0 * static_cast<double>(fan_in) /
                       static_cast<double>(fan_in + fan_out));
    case InitScheme::he:
      return std::sqrt(2.0);
  }
  return 1.0;
}

struct CellCache {
  std::array<Eigen::VectorXd, kNumCellNodes> node;
  std::array<Eigen::VectorXd, kNumCellEdges> pre;  // scaled pre-activation of weighted edges
};

struct ForwardCache {
  std::vector<CellCache> cells;
  double output = 0.0;
};

ForwardCache cell_forward(const ModelInstance& model, const Layout& lay,
                          const Eigen::VectorXd& x) {
  const int n = model.width;
  const double stem_scale = 1.0 / std::sqrt(static_cast<double>(model.input_dim));
  const double edge_scale = 1.0 / std::sqrt(static_cast<double>(n));

  ForwardCache cache;
  cache.cells.resize(static_cast<std::size_t>(model.arch.cells));

  ConstWeightMap stem(model.params.data() + lay.stem, n, model.input_dim);
  Eigen::VectorXd carry = stem_scale * (stem * x);

  for (int c = 0; c < model.arch.cells; ++c) {
    CellCache& cc = cache.cells[static_cast<std::size_t>(c)];
    cc.node[0] = carry;
    for (int j = 1; j < kNumCellNodes; ++j) cc.node[j] = Eigen::VectorXd::Zero(n);
    for (int e = 0; e < kNumCellEdges; ++e) {
      const auto [src, dst] = cell_edge(e);
      const EdgeOp op = model.arch.edge_ops[e];
      switch (op) {
        case EdgeOp::zero:
          break;
        case EdgeOp::skip:
          cc.node[dst] += cc.node[src];
          break;
        default: {
          ConstWeightMap w(model.params.data() + lay.edge[c][e], n, n);
          cc.pre[e] = edge_scale * (w * cc.node[src]);
          if (op == EdgeOp::linear)
            cc.node[dst] += cc.pre[e];
          else if (op == EdgeOp::linear_relu)
            cc.node[dst] += cc.pre[e].cwiseMax(0.0);
          else
            cc.node[dst] += cc.pre[e].array().tanh().matrix();
          break;
        }
      }
    }
    carry = cc.node[kNumCellNodes - 1];
  }

  const auto head = model.params.segment(lay.head, n);
  cache.output = edge_scale * head.dot(carry);
  return cache;
}

// Reverse accumulation; `seed` is the adjoint of the scalar output.
Eigen::VectorXd cell_backward(const ModelInstance& model, const Layout& lay,
                              const Eigen::VectorXd& x, const ForwardCache& cache,
                              double seed) {
  const int n = model.width;
  const double stem_scale = 1.0 / std::sqrt(static_cast<double>(model.input_dim));
  const double edge_scale = 1.0 / std::sqrt(static_cast<double>(n));

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(lay.total);
  const auto head = model.params.segment(lay.head, n);
  const Eigen::VectorXd& last = cache.cells.back().node[kNumCellNodes - 1];
  grad.segment(lay.head, n) = (seed * edge_scale) * last;

  Eigen::VectorXd carry_adj = (seed * edge_scale) * head;

  for (int c = model.arch.cells - 1; c >= 0; --c) {
    const CellCache& cc = cache.cells[static_cast<std::size_t>(c)];
    std::array<Eigen::VectorXd, kNumCellNodes> adj;
    for (int j = 0; j < kNumCellNodes - 1; ++j) adj[j] = Eigen::VectorXd::Zero(n);
    adj[kNumCellNodes - 1] = carry_adj;

    // Reverse edge order: every target's adjoint is complete before use.
    for (int e = kNumCellEdges - 1; e >= 0; --e) {
      const auto [src, dst] = cell_edge(e);
      const EdgeOp op = model.arch.edge_ops[e];
      switch (op) {
        case EdgeOp::zero:
          break;
        case EdgeOp::skip:
          adj[src] += adj[dst];
          break;
        default: {
          Eigen::VectorXd t;
          if (op == EdgeOp::linear) {
            t = adj[dst];
          } else if (op == EdgeOp::linear_relu) {
            t = (cc.pre[e].array() > 0.0).select(adj[dst], 0.0);
          } else {
            const auto th = cc.pre[e].array().tanh();
            t = (adj[dst].array() * (1.0 - th.square())).matrix();
          }
          ConstWeightMap w(model.params.data() + lay.edge[c][e], n, n);
          WeightMap gw(grad.data() + lay.edge[c][e], n, n);
          gw.noalias() += (edge_scale * t) * cc.node[src].transpose();
          adj[src].noalias() += edge_scale * (w.transpose() * t);
          break;
        }
      }
    }
    carry_adj = adj[0];
  }

  WeightMap gstem(grad.data() + lay.stem, n, model.input_dim);
  gstem.noalias() += (stem_scale * carry_adj) * x.transpose();
  return grad;
}

void check_input_dim(const ModelInstance& model, const Eigen::VectorXd& x) {
  if (x.size() != model.input_dim)
    throw ConfigError("input dimension " + std::to_string(x.size()) + " does not match model n0=" +
                      std::to_string(model.input_dim));
}

void check_finite(double v, const ModelInstance& model, const char* where) {
  if (!std::isfinite(v))
    throw NumericError(std::string("non-finite value in ") + where + " for architecture " +
                       model.arch_id());
}

}  // namespace

std::string_view to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::lecun:
      return "lecun";
    case InitScheme::xavier:
      return "xavier";
    case InitScheme::he:
      return "he";
  }
  return "lecun";
}

InitScheme init_scheme_from_string(std::string_view s) {
  if (s == "lecun") return InitScheme::lecun;
  if (s == "xavier") return InitScheme::xavier;
  if (s == "he") return InitScheme::he;
  throw ConfigError("unknown init scheme '" + std::string(s) + "'");
}

std::string ModelInstance::arch_id() const {
  return kind == Kind::linear_probe ? "probe" : encode(arch);
}

Eigen::Index param_count(const CellArch& arch, int width, int input_dim) {
  return make_layout(arch, width, input_dim).total;
}

ModelInstance init_params(const CellArch& arch, int width, int input_dim,
                          InitScheme scheme, std::uint64_t seed) {
  if (width < 1 || input_dim < 1) throw ConfigError("width and input_dim must be >= 1");
  const Layout lay = make_layout(arch, width, input_dim);

  ModelInstance model;
  model.kind = ModelInstance::Kind::cell;
  model.arch = arch;
  model.width = width;
  model.input_dim = input_dim;
  model.scheme = scheme;
  model.seed = seed;
  model.params.resize(lay.total);

  Rng rng(seed);
  Eigen::Index off = 0;
  const auto fill = [&](Eigen::Index count, Eigen::Index fan_in, Eigen::Index fan_out) {
    const double f = scheme_factor(scheme, fan_in, fan_out);
    for (Eigen::Index i = 0; i < count; ++i) model.params(off++) = f * rng.normal();
  };
  fill(static_cast<Eigen::Index>(width) * input_dim, input_dim, width);
  for (int c = 0; c < arch.cells; ++c) {
    for (int e = 0; e < kNumCellEdges; ++e) {
      if (lay.edge[static_cast<std::size_t>(c)][e] >= 0)
        fill(static_cast<Eigen::Index>(width) * width, width, width);
    }
  }
  fill(width, width, 1);
  return model;
}

ModelInstance linear_probe(Eigen::VectorXd theta) {
  if (theta.size() < 1) throw ConfigError("probe dimension must be >= 1");
  ModelInstance model;
  model.kind = ModelInstance::Kind::linear_probe;
  model.input_dim = static_cast<int>(theta.size());
  model.params = std::move(theta);
  return model;
}

ModelInstance init_linear_probe(int dim, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("probe dimension must be >= 1");
  Eigen::VectorXd theta(dim);
  Rng rng(seed);
  for (int i = 0; i < dim; ++i) theta(i) = rng.normal();
  ModelInstance model = linear_probe(std::move(theta));
  model.seed = seed;
  return model;
}

ModelInstance with_params(const ModelInstance& model, Eigen::VectorXd params) {
  if (params.size() != model.params.size())
    throw ConfigError("replacement parameter vector has wrong length");
  ModelInstance out = model;
  out.params = std::move(params);
  return out;
}

double forward(const ModelInstance& model, const Eigen::VectorXd& x) {
  check_input_dim(model, x);
  double f;
  if (model.kind == ModelInstance::Kind::linear_probe) {
    f = model.params.dot(x);
  } else {
    const Layout lay = make_layout(model.arch, model.width, model.input_dim);
    f = cell_forward(model, lay, x).output;
  }
  check_finite(f, model, "forward pass");
  return f;
}

namespace {

// Shared per-sample pipeline: forward once, backward with the requested seeds.
struct SampleGrads {
  double output;
  Eigen::VectorXd out_grad;
};

SampleGrads sample_gradient(const ModelInstance& model, const Layout* lay,
                            const Eigen::VectorXd& x) {
  if (model.kind == ModelInstance::Kind::linear_probe) {
    return {model.params.dot(x), x};
  }
  const ForwardCache cache = cell_forward(model, *lay, x);
  return {cache.output, cell_backward(model, *lay, x, cache, 1.0)};
}

}  // namespace

Eigen::MatrixXd output_gradients(const ModelInstance& model, const Dataset& data) {
  if (data.dim() != model.input_dim)
    throw ConfigError("dataset dimension does not match model n0");
  const Layout lay = model.kind == ModelInstance::Kind::cell
                         ? make_layout(model.arch, model.width, model.input_dim)
                         : Layout{};
  Eigen::MatrixXd rows(data.size(), model.params.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const auto sg = sample_gradient(model, &lay, data.inputs.row(i).transpose());
    check_finite(sg.output, model, "forward pass");
    rows.row(i) = sg.out_grad.transpose();
    if (!rows.row(i).allFinite())
      throw NumericError("non-finite gradient for architecture " + model.arch_id());
  }
  return rows;
}

GradientBundle loss_gradients(const ModelInstance& model, const Dataset& data) {
  if (data.dim() != model.input_dim)
    throw ConfigError("dataset dimension does not match model n0");
  const Layout lay = model.kind == ModelInstance::Kind::cell
                         ? make_layout(model.arch, model.width, model.input_dim)
                         : Layout{};

  GradientBundle bundle;
  bundle.output_grads.resize(data.size(), model.params.size());
  bundle.loss_grads.resize(data.size(), model.params.size());
  bundle.outputs.resize(data.size());

  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.inputs.row(i).transpose();
    double f;
    Eigen::VectorXd out_row, loss_row;
    if (model.kind == ModelInstance::Kind::linear_probe) {
      f = model.params.dot(x);
      out_row = x;
      loss_row = (f - data.labels(i)) * x;
    } else {
      const ForwardCache cache = cell_forward(model, lay, x);
      f = cache.output;
      out_row = cell_backward(model, lay, x, cache, 1.0);
      loss_row = cell_backward(model, lay, x, cache, f - data.labels(i));
    }
    check_finite(f, model, "forward pass");
    bundle.outputs(i) = f;
    bundle.output_grads.row(i) = out_row.transpose();
    bundle.loss_grads.row(i) = loss_row.transpose();

    // MSE chain rule contract.
    const double resid = f - data.labels(i);
    const double err = (loss_row - resid * out_row).norm();
    if (!(err <= 1e-10 * (1.0 + loss_row.norm())))
      throw NumericError("loss-gradient chain rule violated for architecture " + model.arch_id());
  }
  if (!bundle.loss_grads.allFinite())
    throw NumericError("non-finite loss gradient for architecture " + model.arch_id());
  bundle.mean_loss_grad = bundle.loss_grads.colwise().mean().transpose();
  return bundle;
}

Eigen::VectorXd sample_loss_gradient(const ModelInstance& model, const Dataset& data,
                                     Eigen::Index sample_index) {
  if (sample_index < 0 || sample_index >= data.size())
    throw ConfigError("sample index out of range");
  const Eigen::VectorXd x = data.inputs.row(sample_index).transpose();
  if (model.kind == ModelInstance::Kind::linear_probe) {
    return (model.params.dot(x) - data.labels(sample_index)) * x;
  }
  const Layout lay = make_layout(model.arch, model.width, model.input_dim);
  const ForwardCache cache = cell_forward(model, lay, x);
  check_finite(cache.output, model, "forward pass");
  return cell_backward(model, lay, x, cache, cache.output - data.labels(sample_index));
}

Eigen::VectorXd hvp(const ModelInstance& model, const Dataset& data,
                    Eigen::Index sample_index, const Eigen::VectorXd& v, HvpMethod method) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) throw ConfigError("hvp direction must be nonzero");
  if (v.size() != model.params.size()) throw ConfigError("hvp direction has wrong length");

  if (method == HvpMethod::analytic_linear) {
    if (model.kind != ModelInstance::Kind::linear_probe)
      throw ConfigError("analytic_linear hvp is only defined for the linear probe");
    const Eigen::VectorXd x = data.inputs.row(sample_index).transpose();
    return x * x.dot(v);
  }

  const double eps = 1e-4 * (1.0 + model.params.norm()) / vnorm;
  const Eigen::VectorXd gp =
      sample_loss_gradient(with_params(model, model.params + eps * v), data, sample_index);
  const Eigen::VectorXd gm =
      sample_loss_gradient(with_params(model, model.params - eps * v), data, sample_index);
  Eigen::VectorXd hv = (gp - gm) / (2.0 * eps);
  if (!hv.allFinite())
    throw NumericError("non-finite hvp for architecture " + model.arch_id());
  return hv;
}

double mean_mse(const ModelInstance& model, const Dataset& data) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double r = forward(model, data.inputs.row(i).transpose()) - data.labels(i);
    acc += 0.5 * r * r;
  }
  return acc / static_cast<double>(data.size());
}

TrainResult train_gd(const ModelInstance& model, const Dataset& data, double lr, int steps) {
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  g_train_calls.fetch_add(1, std::memory_order_relaxed);

  TrainResult result{model, {}};
  result.loss_trace.reserve(static_cast<std::size_t>(steps));
  for (int step = 1; step <= steps; ++step) {
    const GradientBundle bundle = loss_gradients(result.model, data);
    result.model = with_params(result.model, result.model.params - lr * bundle.mean_loss_grad);
    const double loss = mean_mse(result.model, data);
    if (!std::isfinite(loss))
      throw DivergenceError("gradient descent diverged for architecture " + model.arch_id(), step);
    result.loss_trace.push_back(loss);
  }
  return result;
}

std::uint64_t train_gd_invocations() { return g_train_calls.load(std::memory_order_relaxed); }

}  // namespace ntklab
