#include "ntklab/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ntklab/errors.hpp"

namespace ntklab {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("correlation inputs must have equal length");
  if (a.size() < 2) throw ConfigError("correlation needs at least two samples");
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&v](std::size_t i, std::size_t j) { return v[i] < v[j]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0)
    throw NumericError("correlation is undefined for zero-variance input");
  return cov / std::sqrt(var_a * var_b);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  return pearson(ra, rb);
}

double kendall(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  double concordant = 0.0, discordant = 0.0, ties_a = 0.0, ties_b = 0.0;
  bool var_a = false, var_b = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da != 0.0) var_a = true;
      if (db != 0.0) var_b = true;
      if (da == 0.0 && db == 0.0) continue;  // tied in both, dropped by tau-b
      if (da == 0.0) {
        ties_a += 1.0;
      } else if (db == 0.0) {
        ties_b += 1.0;
      } else if (da * db > 0.0) {
        concordant += 1.0;
      } else {
        discordant += 1.0;
      }
    }
  }
  if (!var_a || !var_b)
    throw NumericError("correlation is undefined for zero-variance input");
  const double denom = std::sqrt((concordant + discordant + ties_a) *
                                 (concordant + discordant + ties_b));
  return (concordant - discordant) / denom;
}

}  // namespace ntklab
