#ifndef COLTWIN_DATASET_HPP
#define COLTWIN_DATASET_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "coltwin/channels.hpp"
#include "coltwin/column_sim.hpp"

namespace coltwin::data {

struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
};

// floor(f0 N), floor(f1 N), remainder; temporal order preserved. Throws
// ConfigError when a split would be empty or fractions do not sum to 1.
SplitSizes split_sizes(std::size_t n, std::array<double, 3> fractions = {0.70,
                                                                         0.15,
                                                                         0.15});

struct NormStats {
  Eigen::ArrayXd min;  // per feature, training split only
  Eigen::ArrayXd max;
  std::vector<std::uint8_t> is_constant;  // max == min, mapped to 0.0

  std::uint64_t checksum() const;
  // denormalize feature j from normalized coordinate u
  double denorm(std::size_t j, double u) const {
    return min[j] + u * (max[j] - min[j]);
  }
  double range(std::size_t j) const { return max[j] - min[j]; }
};

// Immutable after load. Row order is the CSV order (time ascending). Feature
// matrix holds the 16 sensors plus t/T_max; targets are (x_HX, x_TX).
class Dataset {
 public:
  // Loads the generator CSV by column name; extra columns are tolerated. If
  // clean_sidecar_path is given (or the CSV itself carries clean_x_* columns)
  // the pre-noise targets are attached, else they fall back to the noisy ones.
  static Dataset load_csv(const std::string& path,
                          const std::optional<std::string>& clean_sidecar_path =
                              std::nullopt);
  static Dataset from_records(const std::vector<sim::SensorRecord>& records);

  std::size_t size() const { return static_cast<std::size_t>(features_.rows()); }
  const Eigen::MatrixXd& features() const { return features_; }  // N x 17
  const Eigen::MatrixXd& targets() const { return targets_; }    // N x 2 noisy
  const Eigen::MatrixXd& clean_targets() const { return clean_targets_; }
  const std::vector<double>& time_s() const { return time_s_; }
  bool has_clean_targets() const { return has_clean_; }

  SplitSizes split(std::array<double, 3> fractions = {0.70, 0.15, 0.15}) const {
    return split_sizes(size(), fractions);
  }

 private:
  Eigen::MatrixXd features_;
  Eigen::MatrixXd targets_;
  Eigen::MatrixXd clean_targets_;
  std::vector<double> time_s_;
  bool has_clean_ = false;

  void finalize();
};

// Min-max statistics over rows [row_begin, row_end) of the feature matrix.
NormStats fit_norm(const Eigen::MatrixXd& features, std::size_t row_begin,
                   std::size_t row_end);

// (x - min) / (max - min); constant features map to 0. Values outside the
// training range pass through unclipped.
Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& features,
                           const NormStats& stats);
Eigen::MatrixXd invert_norm(const Eigen::MatrixXd& normalized,
                            const NormStats& stats);

}  // namespace coltwin::data

#endif  // COLTWIN_DATASET_HPP
