#include "ntklab/bounds.hpp"

#include <cmath>

#include "ntklab/errors.hpp"

namespace ntklab {

namespace {

double ipow(double base, int exponent) {
  double out = 1.0;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

void require_metric(double metric) {
  if (!(metric > 0.0)) throw ConfigError("bound scores require a positive metric value");
}

}  // namespace

double realizable_score(double metric) {
  require_metric(metric);
  return 1.0 / metric;
}

double nonrealizable_score(double metric, double kappa, const BoundParams& params) {
  require_metric(metric);
  if (!(params.eta > 0.0) || !(params.c > 0.0) || params.t < 1 || params.m < 1)
    throw ConfigError("invalid bound parameters");
  const double m = static_cast<double>(params.m);
  const double decay = 1.0 - params.eta * metric * metric / (m * params.c);
  return 0.5 * m * ipow(decay, 2 * params.t) + kappa / metric;
}

double hnas_objective(double metric, double kappa, const ObjectiveParams& params) {
  require_metric(metric);
  if (params.mu < 0.0 || params.t < 1) throw ConfigError("invalid objective parameters");
  return kappa / metric + params.mu * ipow(metric * metric - params.nu, 2 * params.t);
}

Eigen::VectorXd linearized_residual(const NtkSummary& ntk, const Eigen::VectorXd& resid0,
                                    double eta, int t) {
  if (resid0.size() != ntk.size()) throw ConfigError("residual length must match NTK size");
  const double m = static_cast<double>(ntk.size());
  if (!(eta > 0.0) || !(eta < m / ntk.lambda_max))
    throw ConfigError("linearized dynamics require 0 < eta < m/lambda_max");
  if (t < 0) throw ConfigError("t must be >= 0");
  Eigen::VectorXd r = resid0;
  for (int k = 0; k < t; ++k) r -= (eta / m) * (ntk.matrix * r);
  return r;
}

double linearized_loss_bound(double trace_metric, double eta, int m, int t) {
  if (m < 1 || t < 1) throw ConfigError("invalid bound parameters");
  const double ratio = eta * trace_metric * trace_metric / static_cast<double>(m);
  if (!(ratio > 0.0 && ratio < 2.0))
    throw ConfigError("loss bound requires 0 < eta M_trace^2/m < 2");
  return 0.5 * static_cast<double>(m) * ipow(1.0 - ratio, 2 * t);
}

double param_drift_bound(const NtkSummary& ntk, const Eigen::VectorXd& resid0) {
  if (resid0.size() != ntk.size()) throw ConfigError("residual length must match NTK size");
  const EigenSystem sys = sym_eigen_full(ntk.matrix);
  if (!(sys.values.front() > 0.0))
    throw NumericError("parameter drift bound requires a nonsingular NTK");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ntk.size(); ++i) {
    const double proj = sys.vectors.col(i).dot(resid0);
    acc += proj * proj / sys.values[static_cast<std::size_t>(i)];
  }
  return std::sqrt(acc);
}

}  // namespace ntklab
