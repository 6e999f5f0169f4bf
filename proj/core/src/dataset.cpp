#include "ntklab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "ntklab/errors.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, int line_no) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("bad numeric field '" + s + "' on CSV line " + std::to_string(line_no));
  return v;
}

}  // namespace

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw ConfigError("CSV header must be x0,...,x{n0-1},y");
  const Eigen::Index n0 = static_cast<Eigen::Index>(header.size()) - 1;
  for (Eigen::Index j = 0; j < n0; ++j) {
    if (header[j] != "x" + std::to_string(j))
      throw ConfigError("CSV header column " + std::to_string(j) + " must be x" +
                        std::to_string(j) + ", got '" + header[j] + "'");
  }
  if (header.back() != "y") throw ConfigError("last CSV header column must be y");

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != n0 + 1)
      throw ConfigError("CSV line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(n0 + 1));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_double(fields[j], line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("dataset has no data rows: " + path.string());

  Dataset data;
  data.name = path.filename().string();
  data.inputs.resize(static_cast<Eigen::Index>(rows.size()), n0);
  data.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < n0; ++j) data.inputs(i, j) = rows[i][j];
    data.labels(i) = rows[i][n0];
  }

  const double max_norm = data.inputs.rowwise().norm().maxCoeff();
  if (max_norm > 0.0) data.inputs /= max_norm;
  data.transform.input_scale = max_norm > 0.0 ? max_norm : 1.0;

  const double lo = data.labels.minCoeff();
  const double hi = data.labels.maxCoeff();
  data.transform.label_lo = lo;
  data.transform.label_hi = hi;
  if (hi > lo) {
    data.labels = (data.labels.array() - lo) / (hi - lo);
  } else {
    data.labels.setConstant(0.5);
  }
  return data;
}

Dataset take_batch(const Dataset& data, Eigen::Index m, std::uint64_t seed) {
  if (m >= data.size()) return data;
  if (m < 1) throw ConfigError("batch size must be >= 1");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.uniform_int(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  Dataset batch;
  batch.name = data.name + "#batch" + std::to_string(m);
  batch.transform = data.transform;
  batch.inputs.resize(m, data.dim());
  batch.labels.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    batch.inputs.row(i) = data.inputs.row(idx[i]);
    batch.labels(i) = data.labels(idx[i]);
  }
  return batch;
}

std::uint64_t dataset_fingerprint(const Dataset& data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001B3ULL;
    }
  };
  const std::uint64_t m = data.size(), n0 = data.dim();
  mix(&m, sizeof m);
  mix(&n0, sizeof n0);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      const double v = data.inputs(i, j);
      mix(&v, sizeof v);
    }
    const double y = data.labels(i);
    mix(&y, sizeof y);
  }
  return h;
}

}  // namespace ntklab
