#pragma once

#include <Eigen/Core>
#include <vector>

namespace ntklab {

struct GpConfig {
  double signal_var = 1.0;
  double noise_var = 1e-4;
  std::vector<double> lengthscale_grid = {0.05, 0.1, 0.2, 0.4, 0.8};
};

/// Gaussian-process surrogate over the unit box with a squared-exponential
/// kernel. Targets are standardized to mean 0 / variance 1 (variance floor
/// 1e-12); the lengthscale is picked from the grid by maximum log marginal
/// likelihood.
struct GpState {
  Eigen::MatrixXd train_inputs;   // k x dim, points in [0,1]^dim
  Eigen::VectorXd train_targets;  // standardized
  double target_mean = 0.0;
  double target_scale = 1.0;
  double lengthscale = 0.1;
  double signal_var = 1.0;
  double noise_var = 1e-4;
  double jitter = 0.0;            // extra diagonal added for the Cholesky
  Eigen::MatrixXd chol;           // lower factor of K + (noise+jitter) I
  Eigen::VectorXd alpha;          // (K + (noise+jitter) I)^{-1} targets
  double log_marginal = 0.0;
  std::vector<std::pair<double, double>> grid_log_marginals;  // (lengthscale, lml)

  Eigen::Index size() const { return train_inputs.rows(); }
};

/// Fits the GP. Cholesky jitter starts at 1e-8 and escalates tenfold up to
/// 1e-2; failure beyond that throws NumericError.
GpState gp_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& targets,
               const GpConfig& config = {});

struct GpPosterior {
  double mean = 0.0;      // original target units
  double variance = 0.0;  // standardized (kernel) units, clamped at 0
};

GpPosterior gp_posterior(const GpState& state, const Eigen::VectorXd& query);

/// Expected improvement under the maximization convention, computed on the
/// standardized scale. `best_so_far` is in original target units. Degenerates
/// to max(mean - best, 0) when the posterior deviation is below 1e-12.
double expected_improvement(const GpState& state, const Eigen::VectorXd& query,
                            double best_so_far);

}  // namespace ntklab
