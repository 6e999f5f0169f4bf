#pragma once

#include <Eigen/Core>

#include "ntklab/metrics.hpp"

namespace ntklab {

/// Parameters of the non-realizable generalization bound.
struct BoundParams {
  double eta = 0.1;  // learning rate, > 0
  double c = 1.0;    // metric-equivalence constant, > 0
  int t = 1;         // gradient-descent time, >= 1
  int m = 32;        // batch size, >= 1

  double lambda() const { return eta / (static_cast<double>(m) * c); }
};

/// Hyperparameters of the hybrid search objective. t defaults to 1.
struct ObjectiveParams {
  double mu = 0.0;  // >= 0
  double nu = 0.0;
  int t = 1;
};

/// Realizable-scenario score 1/M (lower is better). Requires M > 0.
double realizable_score(double metric);

/// Non-realizable-scenario score (m/2)(1 - eta M^2/(m c))^{2t} + kappa/M
/// (lower is better). The even power keeps the first term nonnegative in the
/// trade-off regime eta M^2/(m c) > 1. Requires M > 0.
double nonrealizable_score(double metric, double kappa, const BoundParams& params);

/// Hybrid search objective kappa/M + mu (M^2 - nu)^{2t} (lower is better).
/// Requires M > 0 and mu >= 0.
double hnas_objective(double metric, double kappa, const ObjectiveParams& params);

/// (I - (eta/m) NTK)^t resid0 by repeated multiplication. Requires
/// eta < m / lambda_max(NTK).
Eigen::VectorXd linearized_residual(const NtkSummary& ntk, const Eigen::VectorXd& resid0,
                                    double eta, int t);

/// (m/2)(1 - eta M_trace^2/m)^{2t}; upper bound on the linearized training
/// loss. Requires 0 < eta M_trace^2/m < 2.
double linearized_loss_bound(double trace_metric, double eta, int m, int t);

/// sqrt(resid0^T NTK^{-1} resid0) via the eigendecomposition (no explicit
/// inverse). Requires lambda_min(NTK) > 0.
double param_drift_bound(const NtkSummary& ntk, const Eigen::VectorXd& resid0);

}  // namespace ntklab
