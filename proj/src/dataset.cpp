#include "coltwin/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "coltwin/errors.hpp"

namespace coltwin::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw Error(ErrorCategory::other,
                "dataset: malformed number '" + s + "' on line " +
                    std::to_string(line_no));
  return v;
}

struct Table {
  std::map<std::string, std::size_t> columns;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open dataset file: " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCategory::other, "dataset: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t idx = 0;
  for (const std::string& name : split_line(line)) t.columns[name] = idx++;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != t.columns.size())
      throw Error(ErrorCategory::other,
                  "dataset: wrong column count on line " + std::to_string(line_no));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& c : cells) row.push_back(parse_double(c, line_no));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::size_t column_index(const Table& t, const std::string& name,
                         const std::string& path) {
  auto it = t.columns.find(name);
  if (it == t.columns.end())
    throw Error(ErrorCategory::other,
                "dataset " + path + ": missing column '" + name + "'");
  return it->second;
}

}  // namespace

SplitSizes split_sizes(std::size_t n, std::array<double, 3> fractions) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
  SplitSizes s;
  s.train = static_cast<std::size_t>(std::floor(fractions[0] * n));
  s.val = static_cast<std::size_t>(std::floor(fractions[1] * n));
  s.test = n - s.train - s.val;
  if (s.train == 0 || s.val == 0 || s.test == 0)
    throw ConfigError("too few records: a split would be empty");
  return s;
}

std::uint64_t NormStats::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (Eigen::Index j = 0; j < min.size(); ++j) {
    mix(min[j]);
    mix(max[j]);
  }
  return h;
}

void Dataset::finalize() {
  for (std::size_t i = 1; i < time_s_.size(); ++i) {
    if (!(time_s_[i] > time_s_[i - 1]))
      throw Error(ErrorCategory::other,
                  "dataset: time must be strictly increasing");
  }
  double t_max = time_s_.empty() ? 1.0 : time_s_.back();
  if (t_max <= 0.0) t_max = 1.0;
  for (std::size_t i = 0; i < time_s_.size(); ++i)
    features_(static_cast<Eigen::Index>(i), feat::normalized_time) =
        time_s_[i] / t_max;
}

Dataset Dataset::load_csv(const std::string& path,
                          const std::optional<std::string>& clean_sidecar_path) {
  Table t = read_table(path);
  const std::size_t n = t.rows.size();
  Dataset ds;
  ds.features_.resize(n, feat::count);
  ds.targets_.resize(n, 2);
  ds.clean_targets_.resize(n, 2);
  ds.time_s_.resize(n);

  std::size_t time_col = column_index(t, kColTime, path);
  std::array<std::size_t, ch::count> sensor_cols{};
  for (std::size_t k = 0; k < ch::count; ++k)
    sensor_cols[k] = column_index(t, kChannelNames[k], path);
  std::size_t tx_col = column_index(t, kColTargetTx, path);
  std::size_t hx_col = column_index(t, kColTargetHx, path);

  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& row = t.rows[i];
    ds.time_s_[i] = row[time_col];
    for (std::size_t k = 0; k < ch::count; ++k)
      ds.features_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          row[sensor_cols[k]];
    ds.targets_(i, 0) = row[hx_col];  // targets ordered (x_HX, x_TX)
    ds.targets_(i, 1) = row[tx_col];
  }
  ds.clean_targets_ = ds.targets_;

  // Clean targets: prefer in-file columns, else the sidecar.
  if (t.columns.count(kColCleanHx) && t.columns.count(kColCleanTx)) {
    std::size_t chx = t.columns.at(kColCleanHx), ctx = t.columns.at(kColCleanTx);
    for (std::size_t i = 0; i < n; ++i) {
      ds.clean_targets_(i, 0) = t.rows[i][chx];
      ds.clean_targets_(i, 1) = t.rows[i][ctx];
    }
    ds.has_clean_ = true;
  } else if (clean_sidecar_path) {
    Table ct = read_table(*clean_sidecar_path);
    if (ct.rows.size() != n)
      throw Error(ErrorCategory::other,
                  "clean-target sidecar row count mismatch");
    std::size_t chx = column_index(ct, kColCleanHx, *clean_sidecar_path);
    std::size_t ctx = column_index(ct, kColCleanTx, *clean_sidecar_path);
    for (std::size_t i = 0; i < n; ++i) {
      ds.clean_targets_(i, 0) = ct.rows[i][chx];
      ds.clean_targets_(i, 1) = ct.rows[i][ctx];
    }
    ds.has_clean_ = true;
  }
  ds.finalize();
  return ds;
}

Dataset Dataset::from_records(const std::vector<sim::SensorRecord>& records) {
  Dataset ds;
  const std::size_t n = records.size();
  ds.features_.resize(n, feat::count);
  ds.targets_.resize(n, 2);
  ds.clean_targets_.resize(n, 2);
  ds.time_s_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const sim::SensorRecord& r = records[i];
    ds.time_s_[i] = r.time_s;
    for (std::size_t k = 0; k < ch::count; ++k)
      ds.features_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          r.sensors[k];
    ds.targets_(i, 0) = r.target_x_hx;
    ds.targets_(i, 1) = r.target_x_tx;
    ds.clean_targets_(i, 0) = r.clean_x_hx;
    ds.clean_targets_(i, 1) = r.clean_x_tx;
  }
  ds.has_clean_ = true;
  ds.finalize();
  return ds;
}

NormStats fit_norm(const Eigen::MatrixXd& features, std::size_t row_begin,
                   std::size_t row_end) {
  if (row_end <= row_begin)
    throw ConfigError("fit_norm: empty training slice");
  const Eigen::Index nf = features.cols();
  NormStats s;
  s.min.resize(nf);
  s.max.resize(nf);
  s.is_constant.assign(static_cast<std::size_t>(nf), 0);
  auto block = features.middleRows(static_cast<Eigen::Index>(row_begin),
                                   static_cast<Eigen::Index>(row_end - row_begin));
  for (Eigen::Index j = 0; j < nf; ++j) {
    s.min[j] = block.col(j).minCoeff();
    s.max[j] = block.col(j).maxCoeff();
    if (s.max[j] == s.min[j]) s.is_constant[static_cast<std::size_t>(j)] = 1;
  }
  return s;
}

Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& features,
                           const NormStats& stats) {
  Eigen::MatrixXd out(features.rows(), features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    if (stats.is_constant[static_cast<std::size_t>(j)]) {
      out.col(j).setZero();
    } else {
      out.col(j) =
          (features.col(j).array() - stats.min[j]) / (stats.max[j] - stats.min[j]);
    }
  }
  return out;
}

Eigen::MatrixXd invert_norm(const Eigen::MatrixXd& normalized,
                            const NormStats& stats) {
  Eigen::MatrixXd out(normalized.rows(), normalized.cols());
  for (Eigen::Index j = 0; j < normalized.cols(); ++j) {
    if (stats.is_constant[static_cast<std::size_t>(j)]) {
      out.col(j).setConstant(stats.min[j]);
    } else {
      out.col(j) =
          normalized.col(j).array() * (stats.max[j] - stats.min[j]) + stats.min[j];
    }
  }
  return out;
}

}  // namespace coltwin::data
