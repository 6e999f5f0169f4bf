#include "ntklab/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>

#include "ntklab/errors.hpp"

namespace ntklab {

namespace {

Eigen::MatrixXd se_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          double lengthscale, double signal_var) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  const double inv = 1.0 / (2.0 * lengthscale * lengthscale);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = signal_var * std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv);
  return k;
}

struct CholFit {
  Eigen::MatrixXd chol;
  Eigen::VectorXd alpha;
  double jitter = 0.0;
  double log_marginal = 0.0;
};

CholFit fit_one(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double noise_var) {
  const Eigen::Index n = k.rows();
  double jitter = 0.0;
  while (true) {
    Eigen::MatrixXd kn = k;
    kn.diagonal().array() += noise_var + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(kn);
    if (llt.info() == Eigen::Success) {
      CholFit fit;
      fit.chol = llt.matrixL();
      fit.alpha = llt.solve(y);
      fit.jitter = jitter;
      double log_det = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(fit.chol(i, i));
      fit.log_marginal = -0.5 * y.dot(fit.alpha) - log_det -
                         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
      return fit;
    }
    if (jitter == 0.0)
      jitter = 1e-8;
    else if (jitter < 1e-2)
      jitter *= 10.0;
    else
      throw NumericError("GP Cholesky failed even with maximum jitter 1e-2");
  }
}

}  // namespace

GpState gp_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& targets,
               const GpConfig& config) {
  if (points.rows() < 1) throw ConfigError("GP fit needs at least one point");
  if (points.rows() != targets.size())
    throw ConfigError("GP points and targets disagree in length");
  if (config.lengthscale_grid.empty()) throw ConfigError("empty lengthscale grid");

  GpState state;
  state.train_inputs = points;
  state.signal_var = config.signal_var;
  state.noise_var = config.noise_var;

  state.target_mean = targets.mean();
  const double var =
      (targets.array() - state.target_mean).square().sum() / static_cast<double>(targets.size());
  state.target_scale = std::sqrt(std::max(var, 1e-12));
  state.train_targets = (targets.array() - state.target_mean) / state.target_scale;

  bool have_best = false;
  CholFit best;
  for (const double ls : config.lengthscale_grid) {
    const Eigen::MatrixXd k = se_kernel(points, points, ls, config.signal_var);
    const CholFit fit = fit_one(k, state.train_targets, config.noise_var);
    state.grid_log_marginals.emplace_back(ls, fit.log_marginal);
    if (!have_best || fit.log_marginal > best.log_marginal) {
      have_best = true;
      best = fit;
      state.lengthscale = ls;
    }
  }
  state.chol = best.chol;
  state.alpha = best.alpha;
  state.jitter = best.jitter;
  state.log_marginal = best.log_marginal;
  return state;
}

GpPosterior gp_posterior(const GpState& state, const Eigen::VectorXd& query) {
  if (query.size() != state.train_inputs.cols())
    throw ConfigError("query dimension does not match the GP");
  const Eigen::MatrixXd q = query.transpose();
  const Eigen::VectorXd ks =
      se_kernel(state.train_inputs, q, state.lengthscale, state.signal_var).col(0);

  GpPosterior post;
  const double mean_std = ks.dot(state.alpha);
  post.mean = mean_std * state.target_scale + state.target_mean;

  const Eigen::VectorXd v = state.chol.triangularView<Eigen::Lower>().solve(ks);
  double var = state.signal_var - v.squaredNorm();
  if (var < -1e-10)
    throw NumericError("GP posterior variance is significantly negative");
  post.variance = std::max(var, 0.0);
  return post;
}

double expected_improvement(const GpState& state, const Eigen::VectorXd& query,
                            double best_so_far) {
  const GpPosterior post = gp_posterior(state, query);
  const double mean_std = (post.mean - state.target_mean) / state.target_scale;
  const double best_std = (best_so_far - state.target_mean) / state.target_scale;
  const double sigma = std::sqrt(post.variance);
  const double gap = mean_std - best_std;
  if (sigma < 1e-12) return std::max(gap, 0.0);
  const double z = gap / sigma;
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return gap * cdf + sigma * phi;
}

}  // namespace ntklab
