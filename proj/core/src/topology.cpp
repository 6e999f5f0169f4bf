#include "ntklab/topology.hpp"

#include <cmath>
#include <vector>

#include "ntklab/errors.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

namespace {

void check_spec(const TopologySpec& spec) {
  if (spec.n < 2 || spec.L < 1 || spec.m < 1 || spec.m > spec.n)
    throw ConfigError("topology spec requires n >= 2, L >= 1, 1 <= m <= n");
}

std::vector<Eigen::MatrixXd> draw_weights(int n, int L, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::MatrixXd> w(static_cast<std::size_t>(L));
  for (auto& mat : w) {
    mat.resize(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) mat(r, c) = rng.normal();
  }
  return w;
}

// Compensated (Kahan) accumulator, one compensation term per entry.
struct KahanMatrix {
  Eigen::MatrixXd sum, comp;

  explicit KahanMatrix(Eigen::Index rows, Eigen::Index cols)
      : sum(Eigen::MatrixXd::Zero(rows, cols)), comp(Eigen::MatrixXd::Zero(rows, cols)) {}

  void add(const Eigen::MatrixXd& v) {
    for (Eigen::Index i = 0; i < sum.rows(); ++i) {
      for (Eigen::Index j = 0; j < sum.cols(); ++j) {
        const double y = v(i, j) - comp(i, j);
        const double t = sum(i, j) + y;
        comp(i, j) = (t - sum(i, j)) - y;
        sum(i, j) = t;
      }
    }
  }
};

}  // namespace

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x) {
  const Eigen::Index n0 = x.rows(), m = x.cols();
  if (m > n0) throw ConfigError("orthonormalize requires m <= n0");

  // Zero the coordinate mean of every sample, then modified Gram-Schmidt
  // across samples (with one re-orthogonalization pass).
  Eigen::MatrixXd q = x;
  for (Eigen::Index j = 0; j < m; ++j) q.col(j).array() -= q.col(j).mean();

  for (Eigen::Index j = 0; j < m; ++j) {
    const double original = q.col(j).norm();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
    const double residual = q.col(j).norm();
    if (residual <= 1e-10 * std::max(original, 1.0))
      throw NumericError("orthonormalize: columns are linearly dependent");
    q.col(j) /= residual;
  }
  return q;
}

Eigen::MatrixXd orthonormal_inputs(int n, int m, std::uint64_t seed) {
  Eigen::MatrixXd x(n, m);
  Rng rng(derive_seed(seed, "topology-inputs"));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) x(i, j) = rng.normal();
  return orthonormalize(x);
}

NtkSummary wide_ntk(const TopologySpec& spec, const Eigen::MatrixXd& x) {
  check_spec(spec);
  if (x.rows() != spec.n || x.cols() != spec.m)
    throw ConfigError("input matrix must be n x m");

  const auto weights = draw_weights(spec.n, spec.L, spec.seed);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(spec.n);
  const Eigen::Index d = static_cast<Eigen::Index>(spec.L) * spec.n * spec.n;

  Eigen::MatrixXd rows(spec.m, d);
  for (int s = 0; s < spec.m; ++s) {
    const Eigen::VectorXd xi = x.col(s);
    double f = 0.0;
    Eigen::Index off = 0;
    for (int layer = 0; layer < spec.L; ++layer) {
      f += ones.dot(weights[static_cast<std::size_t>(layer)] * xi);
      // Adjoint of W^(i) under f = sum_i 1^T (W^(i) x) is the outer product
      // ones * x^T, independent of the drawn weights.
      const Eigen::MatrixXd g = ones * xi.transpose();
      for (int r = 0; r < spec.n; ++r)
        for (int c = 0; c < spec.n; ++c) rows(s, off++) = g(r, c);
    }
    if (!std::isfinite(f)) throw NumericError("non-finite wide-topology forward value");
  }
  return ntk_from_gradients(rows);
}

Eigen::MatrixXd deep_gradients(const TopologySpec& spec, const Eigen::MatrixXd& x) {
  check_spec(spec);
  if (x.rows() != spec.n || x.cols() != spec.m)
    throw ConfigError("input matrix must be n x m");

  const auto weights = draw_weights(spec.n, spec.L, spec.seed);
  const Eigen::Index d = static_cast<Eigen::Index>(spec.L) * spec.n * spec.n;

  // Suffix rows r_i = 1^T W^(L) ... W^(i+1) are sample-independent.
  std::vector<Eigen::RowVectorXd> suffix(static_cast<std::size_t>(spec.L));
  suffix[static_cast<std::size_t>(spec.L - 1)] = Eigen::RowVectorXd::Ones(spec.n);
  for (int i = spec.L - 2; i >= 0; --i)
    suffix[static_cast<std::size_t>(i)] =
        suffix[static_cast<std::size_t>(i + 1)] * weights[static_cast<std::size_t>(i + 1)];

  Eigen::MatrixXd rows(spec.m, d);
  for (int s = 0; s < spec.m; ++s) {
    Eigen::VectorXd prefix = x.col(s);  // p_i = W^(i-1) ... W^(1) x
    Eigen::Index off = 0;
    for (int layer = 0; layer < spec.L; ++layer) {
      const Eigen::RowVectorXd& r = suffix[static_cast<std::size_t>(layer)];
      for (int row = 0; row < spec.n; ++row)
        for (int col = 0; col < spec.n; ++col) rows(s, off++) = r(row) * prefix(col);
      if (layer + 1 < spec.L) prefix = weights[static_cast<std::size_t>(layer)] * prefix;
    }
  }
  return rows;
}

NtkSummary deep_ntk(const TopologySpec& spec, const Eigen::MatrixXd& x) {
  return ntk_from_gradients(deep_gradients(spec, x));
}

DeepExpectation deep_expectation(const TopologySpec& spec, const Eigen::MatrixXd& x, int trials) {
  check_spec(spec);
  if (trials < 1) throw ConfigError("trials must be >= 1");

  KahanMatrix acc(spec.m, spec.m), acc_sq(spec.m, spec.m);
  for (int t = 0; t < trials; ++t) {
    TopologySpec trial = spec;
    trial.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd rows = deep_gradients(trial, x);
    const Eigen::MatrixXd theta = rows * rows.transpose();
    acc.add(theta);
    acc_sq.add(theta.cwiseProduct(theta));
  }

  DeepExpectation out;
  out.trials = trials;
  out.mean = acc.sum / static_cast<double>(trials);
  const Eigen::MatrixXd second = acc_sq.sum / static_cast<double>(trials);
  out.stddev = (second - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0).cwiseSqrt();
  return out;
}

std::vector<TopologyRow> topology_report(const std::vector<TopologySpec>& specs, int trials) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  std::vector<TopologyRow> rows;

  for (const auto& spec : specs) {
    check_spec(spec);
    const Eigen::MatrixXd x = orthonormal_inputs(spec.n, spec.m, spec.seed);

    const auto summarize = [&](bool deep) {
      std::vector<double> traces, kappas;
      for (int t = 0; t < trials; ++t) {
        TopologySpec trial = spec;
        trial.seed = derive_seed(derive_seed(spec.seed, deep ? "deep" : "wide"),
                                 static_cast<std::uint64_t>(t));
        const NtkSummary ntk = deep ? deep_ntk(trial, x) : wide_ntk(trial, x);
        traces.push_back(std::sqrt(ntk.trace / static_cast<double>(spec.m)));
        kappas.push_back(ntk.kappa);
      }
      const auto mean_std = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (const double t : v) mean += t;
        mean /= static_cast<double>(v.size());
        double acc = 0.0;
        for (const double t : v) acc += (t - mean) * (t - mean);
        return std::pair{mean, std::sqrt(acc / static_cast<double>(v.size()))};
      };
      TopologyRow row;
      row.topology = deep ? "deep" : "wide";
      row.n = spec.n;
      row.L = spec.L;
      row.m = spec.m;
      row.trials = trials;
      std::tie(row.trace_metric_mean, row.trace_metric_std) = mean_std(traces);
      std::tie(row.kappa_mean, row.kappa_std) = mean_std(kappas);
      return row;
    };

    rows.push_back(summarize(false));
    rows.push_back(summarize(true));
  }
  return rows;
}

}  // namespace ntklab
