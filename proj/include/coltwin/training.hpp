#ifndef COLTWIN_TRAINING_HPP
#define COLTWIN_TRAINING_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coltwin/config.hpp"
#include "coltwin/dataset.hpp"
#include "coltwin/network.hpp"
#include "coltwin/physics_loss.hpp"

namespace coltwin::training {

// max(lr0 * decay^floor(epoch / every), floor). Epochs are 0-based.
double lr_at(int epoch, const TrainingConfig& cfg);

struct EpochStats {
  phys::LossBreakdown terms;
  double val_loss = 0.0;  // data MSE on the validation split
  double lr = 0.0;
  double wall_ms = 0.0;
};

// Full state needed to continue a run bit-exactly.
struct TrainingSnapshot {
  long epochs_completed = 0;
  nn::NetworkParams params;
  nn::AdamState adam;
  std::uint64_t shuffle_state = 0;
  long colloc_cursor = 0;
  long pair_cursor = 0;
  double best_val = 0.0;
  long best_epoch = -1;
  nn::NetworkParams best_params;
  std::vector<EpochStats> history;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::uint64_t seed = 0;
  std::string mode;
  double train_fraction = 1.0;
  std::string resolved_config_json;
  data::NormStats stats;
  nn::NetworkParams params;  // best (reported) model
  std::optional<TrainingSnapshot> training;
};

// Versioned binary file with an integrity hash trailer. Load failures raise
// CheckpointError (bad magic/version/integrity) or MissingFileError.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct TrainResult {
  nn::NetworkParams best_params;
  long best_epoch = -1;
  double best_val = 0.0;
  std::vector<EpochStats> history;
  data::NormStats stats;
  // Instrumentation: highest dataset row index that contributed any gradient;
  // must stay inside the (possibly truncated) training split.
  std::size_t max_gradient_row = 0;
  TrainingSnapshot snapshot;  // state after the last epoch, for resume
};

// Trains on the temporal 70/15/15 split of ds. mode "baseline_mlp" pins
// lambda_d = 1 and drops the physics and boundary terms; train_fraction < 1
// truncates the training split to its first records (validation and test are
// untouched). Deterministic for a given seed. Throws on divergence
// (total > 1e3 x its first-epoch value) or non-finite loss terms.
TrainResult train(const data::Dataset& ds, const RunConfig& cfg,
                  const std::string& mode, double train_fraction,
                  const TrainingSnapshot* resume = nullptr);

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history);

}  // namespace coltwin::training

#endif  // COLTWIN_TRAINING_HPP
