#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ntklab/dataset.hpp"
#include "ntklab/netcore.hpp"
#include "ntklab/searchspace.hpp"

namespace ntklab {

/// The m x m NTK at initialization with its spectrum summary.
/// kappa = lambda_max / max(lambda_min, 1e-12 * lambda_max); `clamped` is set
/// when the floor binds (or when the matrix is identically zero, in which
/// case kappa is reported as 1).
struct NtkSummary {
  Eigen::MatrixXd matrix;
  double trace = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 1.0;
  bool clamped = false;

  Eigen::Index size() const { return matrix.rows(); }
};

/// Eigenvalues in ascending order by cyclic Jacobi rotations (off-diagonal
/// Frobenius norm <= 1e-12 * ||A||_F or 100 sweeps). Throws NumericError on
/// non-symmetric input or non-convergence.
std::vector<double> sym_eigen(const Eigen::MatrixXd& a);

struct EigenSystem {
  std::vector<double> values;   // ascending
  Eigen::MatrixXd vectors;      // column i pairs with values[i]
};
EigenSystem sym_eigen_full(const Eigen::MatrixXd& a);

/// Gram matrix of the given per-sample gradient rows plus spectrum summary.
NtkSummary ntk_from_gradients(const Eigen::MatrixXd& output_grads);

/// Entry (i,j) = grad_theta f(x_i) . grad_theta f(x_j).
NtkSummary ntk_matrix(const ModelInstance& model, const Dataset& data);

/// sqrt(trace(NTK)/m), computed via the full matrix and via the per-sample
/// gradient norms; the two routes must agree to 1e-10 relative.
double metric_trace(const ModelInstance& model, const Dataset& data);

/// l2 norm of the mean loss gradient.
double metric_grad(const ModelInstance& model, const Dataset& data);

/// |theta_0 . mean loss gradient|.
double metric_snip(const ModelInstance& model, const Dataset& data);

/// |(1/m) sum_i theta_0 . (H_i grad l_i)| with H_i grad l_i from the
/// finite-difference hvp. Samples with a vanishing loss gradient contribute 0.
double metric_grasp(const ModelInstance& model, const Dataset& data);

/// Training-free metric values and kappa for one architecture on one batch.
struct MetricReport {
  std::string arch_id;
  double grad = 0.0;
  double snip = 0.0;
  double grasp = 0.0;
  double trace_norm = 0.0;
  double kappa = 1.0;
  int batch_size = 0;
  std::uint64_t seed = 0;
  bool clamped = false;
  bool failed = false;      // numeric failure; metric values not meaningful
  std::string failure;
};

enum class MetricChoice { grad, snip, grasp, trace };
std::string_view to_string(MetricChoice m);
MetricChoice metric_choice_from_string(std::string_view s);
double metric_value(const MetricReport& report, MetricChoice choice);

struct ScoreConfig {
  int width = 32;
  InitScheme scheme = InitScheme::lecun;
  std::uint64_t seed = 0;  // per-arch seeds derived from this and the arch ID
  int jobs = 1;
};

/// One report per architecture; per-arch numeric failures are recorded
/// in-report rather than aborting the batch. Results are independent of
/// execution order and of `jobs`.
std::vector<MetricReport> score_pool(const ArchPool& pool, const Dataset& data,
                                     const ScoreConfig& config);

/// Report for a single prepared model (shared by score_pool and tests).
MetricReport score_model(const ModelInstance& model, const Dataset& data);

}  // namespace ntklab
