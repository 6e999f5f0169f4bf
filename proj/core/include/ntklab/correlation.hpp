#pragma once

#include <span>

namespace ntklab {

/// Pearson product-moment correlation. Throws NumericError when either input
/// has zero variance (undefined correlation). n >= 2.
double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation; ties receive average (fractional) ranks.
double spearman(std::span<const double> a, std::span<const double> b);

/// Kendall tau-b (tie-adjusted).
double kendall(std::span<const double> a, std::span<const double> b);

}  // namespace ntklab
