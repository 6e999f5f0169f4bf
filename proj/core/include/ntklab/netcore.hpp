#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ntklab/dataset.hpp"
#include "ntklab/searchspace.hpp"

namespace ntklab {

enum class InitScheme { lecun, xavier, he };

std::string_view to_string(InitScheme scheme);
InitScheme init_scheme_from_string(std::string_view s);

/// An instantiated network: architecture + flat parameter vector + metadata.
/// Immutable after construction; all operations on it are pure.
///
/// Cell networks use the NTK parameterization: weights are drawn N(0,1)
/// (times a scheme factor) and every linear map divides its pre-activation
/// by sqrt(fan_in). There are no biases. A `linear_probe` model is the plain
/// f(x, theta) = theta . x, used as an analytic oracle.
struct ModelInstance {
  enum class Kind { cell, linear_probe };

  Kind kind = Kind::cell;
  CellArch arch;            // meaningful when kind == cell
  Eigen::VectorXd params;   // length d
  int width = 0;            // n (hidden width); 0 for linear_probe
  int input_dim = 0;        // n0
  InitScheme scheme = InitScheme::lecun;
  std::uint64_t seed = 0;

  Eigen::Index param_count() const { return params.size(); }
  std::string arch_id() const;
};

/// Parameter count implied by (arch, width, input_dim) alone.
Eigen::Index param_count(const CellArch& arch, int width, int input_dim);

/// Draws every weight i.i.d. N(0,1) times the scheme's std factor relative
/// to lecun (lecun: 1, xavier: sqrt(2*fan_in/(fan_in+fan_out)), he: sqrt(2)).
ModelInstance init_params(const CellArch& arch, int width, int input_dim,
                          InitScheme scheme, std::uint64_t seed);

/// f(x, theta) = theta . x with explicit parameters.
ModelInstance linear_probe(Eigen::VectorXd theta);

/// Linear probe with theta ~ N(0,1)^dim, for tests needing exact d.
ModelInstance init_linear_probe(int dim, std::uint64_t seed);

/// Same model with replaced parameters (test hook; sizes must match).
ModelInstance with_params(const ModelInstance& model, Eigen::VectorXd params);

/// Scalar network output. Throws ConfigError on dimension mismatch and
/// NumericError (naming the architecture) on non-finite values.
double forward(const ModelInstance& model, const Eigen::VectorXd& x);

/// Row i = grad_theta f(x_i, theta). ReLU uses subgradient 0 at 0.
Eigen::MatrixXd output_gradients(const ModelInstance& model, const Dataset& data);

/// Per-sample gradients of f and of the MSE loss l = (f-y)^2/2.
struct GradientBundle {
  Eigen::MatrixXd output_grads;   // m x d
  Eigen::MatrixXd loss_grads;     // m x d, row i = (f(x_i)-y_i) * output row i
  Eigen::VectorXd mean_loss_grad; // arithmetic mean of loss_grads rows
  Eigen::VectorXd outputs;        // f(x_i, theta)
};

/// Computes loss gradients by an independent backward pass (seeded with the
/// residual) and validates the MSE chain rule against output_grads to 1e-10
/// relative.
GradientBundle loss_gradients(const ModelInstance& model, const Dataset& data);

/// grad_theta l(f(x_i, theta), y_i) for a single sample.
Eigen::VectorXd sample_loss_gradient(const ModelInstance& model, const Dataset& data,
                                     Eigen::Index sample_index);

enum class HvpMethod { finite_diff, analytic_linear };

/// H_i v with H_i the loss Hessian of sample i. finite_diff central-differences
/// the sample loss gradient with step 1e-4*(1+||theta||)/||v||; analytic_linear
/// is exact for the linear probe (H = x x^T) and only valid there.
Eigen::VectorXd hvp(const ModelInstance& model, const Dataset& data,
                    Eigen::Index sample_index, const Eigen::VectorXd& v, HvpMethod method);

/// Mean MSE loss (1/m) sum_i (f(x_i)-y_i)^2 / 2.
double mean_mse(const ModelInstance& model, const Dataset& data);

struct TrainResult {
  ModelInstance model;
  std::vector<double> loss_trace;  // loss after each step, `steps` entries
};

/// Full-batch gradient descent on the mean MSE loss. Throws DivergenceError
/// (with the step index) if the loss becomes non-finite.
TrainResult train_gd(const ModelInstance& model, const Dataset& data, double lr, int steps);

/// Monotone process-wide count of train_gd invocations (budget assertions).
std::uint64_t train_gd_invocations();

}  // namespace ntklab
