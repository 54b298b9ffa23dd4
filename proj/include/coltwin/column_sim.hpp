#ifndef COLTWIN_COLUMN_SIM_HPP
#define COLTWIN_COLUMN_SIM_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coltwin/channels.hpp"
#include "coltwin/config.hpp"
#include "coltwin/thermo.hpp"

namespace coltwin::sim {

// Full column state. Trays are indexed 0..n-1 from the top; the condenser
// drum and reboiler are separate stages. Compositions are heavy (HX) liquid
// mole fractions. The column runs a total condenser with a perfect-ratio
// reflux splitter and a proportional bottoms level controller.
struct TrayState {
  std::vector<double> x;  // heavy liquid fraction per tray
  std::vector<double> m;  // molar holdup per tray, kmol (constant)
  std::vector<double> t;  // K
  std::vector<double> p;  // kPa
  std::vector<double> y;  // heavy fraction of vapor leaving each tray
  std::vector<double> l;  // liquid leaving each tray, kmol/h
  std::vector<double> v;  // vapor leaving each tray, kmol/h

  double x_condenser = 0.0, m_condenser = 0.0, t_condenser = 0.0;
  double x_reboiler = 0.0, m_reboiler = 0.0, t_reboiler = 0.0;
  double y_reboiler = 0.0;

  double reflux_flow = 0.0;      // kmol/h
  double distillate_flow = 0.0;  // kmol/h
  double bottoms_flow = 0.0;     // kmol/h
  double boilup_flow = 0.0;      // kmol/h
  double bottoms_bias_kmol_h = 0.0;

  double time_s = 0.0;
  bool instability_flag = false;
};

struct StepInputs {
  double reflux_ratio = 0.0;
  double feed_flow_kmol_h = 0.0;
  double feed_z_heavy = 0.0;
  double duty_kw = 0.0;
  double p_condenser_kpa = 0.0;
  double p_main_kpa = 0.0;
  double p_bottom_kpa = 0.0;
};

// Manipulated inputs at simulation time t under the perturbation schedule.
StepInputs schedule_inputs(const ColumnConfig& cfg,
                           const std::vector<ScheduleEvent>& schedule,
                           double time_s);

// Tray pressure from the piecewise-linear profile anchored at the condenser,
// the mid-column (main tower) sensor, and the reboiler. tray is 1-based.
double tray_pressure(const ColumnConfig& cfg, const StepInputs& in, int tray);

// One explicit-Euler step of the MESH dynamics. Pure: returns the new state.
// Throws InstabilityError on negative internal flows; compositions escaping
// [-0.01, 1.01] are clamped and flagged.
TrayState step(const TrayState& state, const StepInputs& in, double dt_s,
               const ColumnConfig& cfg, const thermo::BinarySystem& sys);

// Integrates with fixed nominal inputs until every stage satisfies
// |d(M x)/dt| < 1e-8 kmol/h (at most max_steps steps).
TrayState init_steady_state(const ColumnConfig& cfg,
                            const thermo::BinarySystem& sys,
                            long max_steps = 1000000);

struct SensorRecord {
  double time_s = 0.0;
  std::array<double, ch::count> sensors{};
  double target_x_tx = 0.0;  // noisy targets, as trained on
  double target_x_hx = 0.0;
  double clean_x_tx = 0.0;  // pre-noise targets, kept for evaluation
  double clean_x_hx = 0.0;
};

// Runs the perturbation schedule from the converged initial state and emits
// duration/interval + 1 records with seeded uniform sensor noise.
std::vector<SensorRecord> generate_dataset(const RunConfig& cfg,
                                           std::uint64_t seed);

// 19 columns: time_s, the 16 sensors, target_x_tx, target_x_hx.
void write_dataset_csv(const std::string& path,
                       const std::vector<SensorRecord>& records);
// Sidecar with the pre-noise targets: time_s, clean_x_tx, clean_x_hx.
void write_clean_targets_csv(const std::string& path,
                             const std::vector<SensorRecord>& records);

}  // namespace coltwin::sim

#endif  // COLTWIN_COLUMN_SIM_HPP
