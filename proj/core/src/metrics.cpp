#include "ntklab/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "ntklab/errors.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

EigenSystem jacobi_eigen(const Eigen::MatrixXd& input, bool want_vectors) {
  const Eigen::Index m = input.rows();
  if (input.cols() != m) throw NumericError("eigensolver requires a square matrix");
  const double scale = input.cwiseAbs().maxCoeff();
  if ((input - input.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1.0))
    throw NumericError("eigensolver requires a symmetric matrix");

  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v;
  if (want_vectors) v = Eigen::MatrixXd::Identity(m, m);
  const double target = 1e-12 * a.norm();

  bool converged = off_diagonal_norm(a) <= target;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < m - 1; ++p) {
      for (Eigen::Index q = p + 1; q < m; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < m; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < m; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        if (want_vectors) {
          for (Eigen::Index k = 0; k < m; ++k) {
            const double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
    converged = off_diagonal_norm(a) <= target;
  }
  if (!converged) throw NumericError("Jacobi eigensolver did not converge in 100 sweeps");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&a](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  EigenSystem sys;
  sys.values.resize(static_cast<std::size_t>(m));
  if (want_vectors) sys.vectors.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    sys.values[static_cast<std::size_t>(i)] = a(order[i], order[i]);
    if (want_vectors) sys.vectors.col(i) = v.col(order[i]);
  }
  return sys;
}

}  // namespace

std::vector<double> sym_eigen(const Eigen::MatrixXd& a) {
  return jacobi_eigen(a, false).values;
}

EigenSystem sym_eigen_full(const Eigen::MatrixXd& a) { return jacobi_eigen(a, true); }

NtkSummary ntk_from_gradients(const Eigen::MatrixXd& output_grads) {
  NtkSummary ntk;
  const Eigen::MatrixXd gram = output_grads * output_grads.transpose();
  ntk.matrix = 0.5 * (gram + gram.transpose());  // scrub product round-off asymmetry
  ntk.trace = ntk.matrix.trace();

  const auto values = sym_eigen(ntk.matrix);
  ntk.lambda_min = values.front();
  ntk.lambda_max = values.back();
  if (ntk.lambda_min < -1e-8 * std::max(ntk.lambda_max, 0.0))
    throw NumericError("NTK matrix is not positive semidefinite");

  if (ntk.lambda_max <= 0.0) {
    // Identically-zero kernel; kappa/lambda_min floor formula is 0/0 here.
    ntk.kappa = 1.0;
    ntk.clamped = true;
    return ntk;
  }
  const double floor = 1e-12 * ntk.lambda_max;
  if (ntk.lambda_min < floor) {
    ntk.kappa = ntk.lambda_max / floor;
    ntk.clamped = true;
  } else {
    ntk.kappa = ntk.lambda_max / ntk.lambda_min;
  }
  return ntk;
}

NtkSummary ntk_matrix(const ModelInstance& model, const Dataset& data) {
  if (data.size() < 1) throw ConfigError("NTK needs at least one sample");
  return ntk_from_gradients(output_gradients(model, data));
}

double metric_trace(const ModelInstance& model, const Dataset& data) {
  const Eigen::MatrixXd grads = output_gradients(model, data);
  const double m = static_cast<double>(data.size());
  const double via_norms = std::sqrt(grads.rowwise().squaredNorm().sum() / m);
  const Eigen::MatrixXd gram = grads * grads.transpose();
  const double via_matrix = std::sqrt(gram.trace() / m);
  if (std::abs(via_norms - via_matrix) > 1e-10 * (1.0 + std::abs(via_matrix)))
    throw NumericError("trace metric cross-check failed for architecture " + model.arch_id());
  return via_matrix;
}

double metric_grad(const ModelInstance& model, const Dataset& data) {
  return loss_gradients(model, data).mean_loss_grad.norm();
}

double metric_snip(const ModelInstance& model, const Dataset& data) {
  return std::abs(model.params.dot(loss_gradients(model, data).mean_loss_grad));
}

double metric_grasp(const ModelInstance& model, const Dataset& data) {
  const GradientBundle bundle = loss_gradients(model, data);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd v = bundle.loss_grads.row(i).transpose();
    if (v.norm() == 0.0) continue;  // vanished loss gradient contributes nothing
    acc += model.params.dot(hvp(model, data, i, v, HvpMethod::finite_diff));
  }
  return std::abs(acc / static_cast<double>(data.size()));
}

std::string_view to_string(MetricChoice m) {
  switch (m) {
    case MetricChoice::grad:
      return "grad";
    case MetricChoice::snip:
      return "snip";
    case MetricChoice::grasp:
      return "grasp";
    case MetricChoice::trace:
      return "trace";
  }
  return "trace";
}

MetricChoice metric_choice_from_string(std::string_view s) {
  if (s == "grad") return MetricChoice::grad;
  if (s == "snip") return MetricChoice::snip;
  if (s == "grasp") return MetricChoice::grasp;
  if (s == "trace") return MetricChoice::trace;
  throw ConfigError("unknown metric '" + std::string(s) + "'");
}

double metric_value(const MetricReport& report, MetricChoice choice) {
  switch (choice) {
    case MetricChoice::grad:
      return report.grad;
    case MetricChoice::snip:
      return report.snip;
    case MetricChoice::grasp:
      return report.grasp;
    case MetricChoice::trace:
      return report.trace_norm;
  }
  return report.trace_norm;
}

MetricReport score_model(const ModelInstance& model, const Dataset& data) {
  MetricReport report;
  report.arch_id = model.arch_id();
  report.batch_size = static_cast<int>(data.size());
  report.seed = model.seed;

  const GradientBundle bundle = loss_gradients(model, data);
  const NtkSummary ntk = ntk_from_gradients(bundle.output_grads);
  const double m = static_cast<double>(data.size());

  report.trace_norm = std::sqrt(ntk.trace / m);
  const double via_norms = std::sqrt(bundle.output_grads.rowwise().squaredNorm().sum() / m);
  if (std::abs(via_norms - report.trace_norm) > 1e-10 * (1.0 + report.trace_norm))
    throw NumericError("trace metric cross-check failed for architecture " + model.arch_id());

  report.grad = bundle.mean_loss_grad.norm();
  report.snip = std::abs(model.params.dot(bundle.mean_loss_grad));

  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd v = bundle.loss_grads.row(i).transpose();
    if (v.norm() == 0.0) continue;
    acc += model.params.dot(hvp(model, data, i, v, HvpMethod::finite_diff));
  }
  report.grasp = std::abs(acc / m);

  report.kappa = ntk.kappa;
  report.clamped = ntk.clamped;
  return report;
}

std::vector<MetricReport> score_pool(const ArchPool& pool, const Dataset& data,
                                     const ScoreConfig& config) {
  if (pool.size() == 0) throw ConfigError("cannot score an empty pool");
  if (config.width < 1) throw ConfigError("width must be >= 1");
  if (data.size() < 1 || data.dim() < 1) throw ConfigError("empty dataset");
  std::vector<MetricReport> reports(pool.size());

  const auto score_one = [&](std::size_t i) {
    const std::string& id = pool.ids[i];
    try {
      const ModelInstance model =
          init_params(pool.entries[i], config.width, static_cast<int>(data.dim()),
                      config.scheme, derive_seed(config.seed, id));
      reports[i] = score_model(model, data);
    } catch (const NumericError& e) {
      reports[i] = MetricReport{};
      reports[i].arch_id = id;
      reports[i].batch_size = static_cast<int>(data.size());
      reports[i].seed = derive_seed(config.seed, id);
      reports[i].failed = true;
      reports[i].failure = e.what();
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1 || pool.size() == 1) {
    for (std::size_t i = 0; i < pool.size(); ++i) score_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int count = std::min<int>(jobs, static_cast<int>(pool.size()));
    workers.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < pool.size(); i = next.fetch_add(1))
          score_one(i);
      });
    }
    for (auto& t : workers) t.join();
  }
  return reports;
}

}  // namespace ntklab
