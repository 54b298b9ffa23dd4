#ifndef COLTWIN_CONFIG_HPP
#define COLTWIN_CONFIG_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coltwin/channels.hpp"
#include "coltwin/thermo.hpp"

namespace coltwin {

struct ColumnConfig {
  int n_trays = 20;
  int feed_tray = 10;  // 1-based, counted from the top
  double feed_flow_kmol_h = 42.9;
  double feed_z_heavy = 0.5;
  double nominal_reflux_ratio = 0.55;
  double pressure_condenser_kpa = 101.28;
  double pressure_main_kpa = 104.43;
  double pressure_bottom_kpa = 110.49;
  double tray_holdup_kmol = 0.4;
  double condenser_holdup_kmol = 4.0;
  double condenser_capacity_kmol = 8.0;  // level sensor = 100 * M / capacity
  double reboiler_holdup_kmol = 8.0;
  double reboiler_capacity_kmol = 16.0;
  double reboiler_duty_kw = 300.0;
  double reboiler_level_gain_per_h = 2.0;  // proportional bottoms controller
  double internal_dt_s = 1.0;

  void validate() const;
};

struct ScheduleEvent {
  enum class Kind { reflux_ramp, feed_flow_step, feed_comp_step, pressure_step };
  enum class Section { condenser, main, bottom };

  Kind kind = Kind::feed_flow_step;
  double time_s = 0.0;
  double end_s = 0.0;    // reflux_ramp only
  double from = 0.0;     // reflux_ramp only
  double to = 0.0;       // reflux_ramp only
  double value = 0.0;    // step events: new flow / new z_heavy / new pressure
  Section section = Section::condenser;  // pressure_step only
};

struct NoiseConfig {
  // Uniform noise half-widths per sensor channel; the feed-z pair and the
  // target pair each take a single draw so their sums stay exactly 1.
  std::array<double, ch::count> amp{};
  double target_amp = 0.0;
};

struct DatasetGenConfig {
  double duration_s = 28800.0;
  double sample_interval_s = 30.0;
};

struct TrainingConfig {
  int epochs = 1000;
  int batch_size = 64;
  double lr0 = 1e-3;
  double lr_decay = 0.5;
  int lr_decay_every = 200;
  double lr_floor = 5e-6;
  double l2 = 1e-4;
  int collocation_points = 2000;
  int pair_batch = 32;
  std::string mode = "pinn";  // "pinn" | "baseline_mlp"
  double train_fraction = 1.0;
};

struct EvaluationConfig {
  double physics_pass_threshold = 1e-4;
  int importance_shuffles = 10;
  int histogram_bins = 40;
};

struct RunConfig {
  std::uint64_t seed = 42;
  thermo::BinarySystem system;
  ColumnConfig column;
  std::vector<ScheduleEvent> schedule;
  NoiseConfig noise;
  DatasetGenConfig dataset;
  TrainingConfig training;
  EvaluationConfig evaluation;

  void validate() const;
};

// Strict loader: unknown keys and type mismatches raise ConfigError; a
// missing file raises MissingFileError.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

// Canonical JSON serialization; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

// Snapshot written by every CLI run so any artifact can be regenerated.
void write_resolved_config(const RunConfig& cfg, const std::string& path,
                           const std::string& invocation_json);

}  // namespace coltwin

#endif  // COLTWIN_CONFIG_HPP
