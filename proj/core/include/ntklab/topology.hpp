#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ntklab/metrics.hpp"

namespace ntklab {

/// Wide/deep linear architecture pair of the topology analysis:
/// wide  f(x)  = 1^T sum_i W^(i) x   (NTK exactly L n X^T X)
/// deep  f'(x) = 1^T prod_i W^(i) x  (NTK L n^L X^T X in expectation)
/// with W^(i) in R^{n x n} drawn i.i.d. standard normal. Inputs live in the
/// weight-matrix dimension (n0 = n).
struct TopologySpec {
  int n = 4;   // width, >= 2
  int L = 2;   // layer count, >= 1
  int m = 3;   // sample count, m <= n
  std::uint64_t seed = 0;
};

/// Centers each column (sample) to zero coordinate mean, then orthonormalizes
/// the columns with modified Gram-Schmidt so X^T X = I to 1e-12. Columns are
/// samples: X is n0 x m with m <= n0. Throws on rank deficiency.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x);

/// Random Gaussian n x m sample matrix, orthonormalized.
Eigen::MatrixXd orthonormal_inputs(int n, int m, std::uint64_t seed);

/// Empirical NTK of the wide architecture: weights are instantiated and the
/// per-row gradients accumulated; equals L n I for every seed when X^T X = I.
NtkSummary wide_ntk(const TopologySpec& spec, const Eigen::MatrixXd& x);

/// Per-sample flat gradient rows of the deep architecture (prefix/suffix
/// product chain), one row per column of x.
Eigen::MatrixXd deep_gradients(const TopologySpec& spec, const Eigen::MatrixXd& x);

/// Single-seed empirical NTK of the deep architecture.
NtkSummary deep_ntk(const TopologySpec& spec, const Eigen::MatrixXd& x);

struct DeepExpectation {
  Eigen::MatrixXd mean;    // entrywise mean over trials (compensated sums)
  Eigen::MatrixXd stddev;  // entrywise standard deviation
  int trials = 0;
};

/// Monte Carlo estimate of E[NTK] over independent initializations.
DeepExpectation deep_expectation(const TopologySpec& spec, const Eigen::MatrixXd& x, int trials);

struct TopologyRow {
  std::string topology;  // "wide" or "deep"
  int n = 0, L = 0, m = 0, trials = 0;
  double trace_metric_mean = 0.0, trace_metric_std = 0.0;
  double kappa_mean = 0.0, kappa_std = 0.0;
};

/// Mean +/- std of the trace metric and kappa over `trials` seeds for the
/// wide and deep form of every spec.
std::vector<TopologyRow> topology_report(const std::vector<TopologySpec>& specs, int trials);

}  // namespace ntklab
