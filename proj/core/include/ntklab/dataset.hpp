#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>

namespace ntklab {

/// Normalization applied at load/generation time, recorded so reports can
/// echo how raw values map to the stored ones.
struct DataTransform {
  double input_scale = 1.0;  // raw inputs were divided by this
  double label_lo = 0.0;     // raw label mapped to 0
  double label_hi = 1.0;     // raw label mapped to 1
};

/// A regression dataset. Rows of `inputs` are samples with ||x||_2 <= 1;
/// labels lie in [0, 1].
struct Dataset {
  Eigen::MatrixXd inputs;  // m x n0
  Eigen::VectorXd labels;  // m
  std::string name;
  DataTransform transform;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
};

/// Loads `x0,...,x{n0-1},y` CSV. Inputs are rescaled so the largest sample
/// norm is 1 and labels are min-max normalized to [0,1]; the transform is
/// recorded on the returned dataset. Throws ConfigError on schema mismatch.
Dataset load_dataset_csv(const std::filesystem::path& path);

/// Deterministically samples `m` distinct rows (all rows when m >= size).
Dataset take_batch(const Dataset& data, Eigen::Index m, std::uint64_t seed);

/// Order-sensitive FNV-1a hash over sizes and raw value bytes.
std::uint64_t dataset_fingerprint(const Dataset& data);

}  // namespace ntklab
