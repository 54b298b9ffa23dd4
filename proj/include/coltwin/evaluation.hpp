#ifndef COLTWIN_EVALUATION_HPP
#define COLTWIN_EVALUATION_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "coltwin/config.hpp"
#include "coltwin/dataset.hpp"
#include "coltwin/network.hpp"
#include "coltwin/physics_loss.hpp"

namespace coltwin::evaluation {

struct TargetMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double residual_std = 0.0;
};

struct Metrics {
  TargetMetrics x_hx;
  TargetMetrics x_tx;
  TargetMetrics averaged;  // metric-wise mean of the per-target values
};

Metrics compute_metrics(const Eigen::MatrixXd& predictions,
                        const Eigen::MatrixXd& targets);

struct PhysicsConsistency {
  double mean_vle_residual = 0.0;
  double threshold = 0.0;
  bool pass = false;  // strict: residual == threshold fails
};

// Mean VLE residual over rows [row_begin, row_end) with the same
// operating-line vapor construction used in training.
PhysicsConsistency physics_consistency(const phys::PhysicsContext& ctx,
                                       const nn::NetworkParams& params,
                                       const data::Dataset& ds,
                                       std::size_t row_begin,
                                       std::size_t row_end, double threshold);

struct TrayProfile {
  std::vector<int> tray;  // 1..n_trays, then n_trays+1 for the reboiler
  std::vector<double> temp_c;
  std::vector<double> x_heavy;
  int feed_tray = 0;
  int n_trays = 0;
  bool truncated = false;
};

// McCabe-Thiele staircase seeded by the predicted distillate composition:
// alternate equilibrium and the rectifying line down to the feed tray, then
// the stripping line (saturated-liquid feed) down to the reboiler.
TrayProfile reconstruct_profile(const phys::PhysicsContext& ctx,
                                const Eigen::RowVectorXd& raw_record,
                                const nn::ModelOutput& out);

void write_profile_csv(const std::string& path, const TrayProfile& profile);

struct FeatureImportance {
  std::string feature;
  double importance = 0.0;  // mean RMSE increase over the shuffles
};

// Permutation importance on rows [row_begin, row_end); sorted descending.
std::vector<FeatureImportance> permutation_importance(
    const nn::NetworkParams& params, const data::NormStats& stats,
    const data::Dataset& ds, std::size_t row_begin, std::size_t row_end,
    std::uint64_t seed, int n_shuffles);

void write_importance_csv(const std::string& path,
                          const std::vector<FeatureImportance>& imp);

// Full metrics report for the test split as canonical JSON; also returns the
// per-row prediction residuals for histogram export.
struct EvalReport {
  std::string json;
  std::vector<double> residual_hx;  // prediction - target per test row
  std::vector<double> residual_tx;
};
EvalReport evaluate(const phys::PhysicsContext& ctx,
                    const nn::NetworkParams& params, const data::Dataset& ds,
                    double physics_threshold, const std::string& mode,
                    std::uint64_t seed, double train_fraction);

void write_residuals_csv(const std::string& path,
                         const std::vector<double>& time_s,
                         const std::vector<double>& residual_hx,
                         const std::vector<double>& residual_tx);

// Side-by-side comparison of two evaluate() reports (parsed from JSON).
std::string comparison_report_json(const std::string& report_a_json,
                                   const std::string& report_b_json);

// Shared-bin histograms of the two runs' x_HX residuals.
void write_residual_histogram_csv(const std::string& path,
                                  const std::vector<double>& residuals_a,
                                  const std::vector<double>& residuals_b,
                                  int bins);

}  // namespace coltwin::evaluation

#endif  // COLTWIN_EVALUATION_HPP
