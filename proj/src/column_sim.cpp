#include "coltwin/column_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "coltwin/errors.hpp"
#include "coltwin/rng.hpp"

namespace coltwin::sim {

namespace {

double mw_mix(double x_heavy, const thermo::BinarySystem& sys) {
  return x_heavy * sys.molar_mass_heavy + (1.0 - x_heavy) * sys.molar_mass_light;
}

// Recomputes the algebraic part of the state (pressures, bubble-point
// temperatures, equilibrium vapor compositions, internal flows) for the
// current liquid compositions and inputs.
void update_algebraic(TrayState& s, const StepInputs& in,
                      const ColumnConfig& cfg, const thermo::BinarySystem& sys) {
  const int n = cfg.n_trays;
  for (int j = 0; j < n; ++j) {
    s.p[j] = tray_pressure(cfg, in, j + 1);
    s.t[j] = thermo::bubble_point_t(s.x[j], s.p[j], sys);
    thermo::ComponentPair y = thermo::raoult_y(s.x[j], s.t[j], s.p[j], sys);
    s.y[j] = y.heavy / (y.heavy + y.light);
  }
  s.t_reboiler = thermo::bubble_point_t(s.x_reboiler, in.p_bottom_kpa, sys);
  {
    thermo::ComponentPair y =
        thermo::raoult_y(s.x_reboiler, s.t_reboiler, in.p_bottom_kpa, sys);
    s.y_reboiler = y.heavy / (y.heavy + y.light);
  }
  s.t_condenser = thermo::bubble_point_t(s.x_condenser, in.p_condenser_kpa, sys);

  // Boilup from the quasi-steady reboiler energy balance, with the reflux
  // splitter and saturated-liquid feed closing the liquid traffic:
  //   V (H_VB - H_B) = Q + L' (H_N - H_B),  L' = R V/(1+R) + F.
  const double q_kj_h = in.duty_kw * 3600.0;
  const double h_b = thermo::h_liquid(s.x_reboiler, s.t_reboiler, sys);
  const double h_vb = thermo::h_vapor(s.y_reboiler, s.t_reboiler, sys);
  const double h_n = thermo::h_liquid(s.x[n - 1], s.t[n - 1], sys);
  const double dh_nl = h_n - h_b;
  const double r = in.reflux_ratio;
  const double denom = (h_vb - h_b) - r / (1.0 + r) * dh_nl;
  const double v = (q_kj_h + in.feed_flow_kmol_h * dh_nl) / denom;
  if (!(v > 0.0))
    throw InstabilityError("boilup flow became non-positive");
  const double d = v / (1.0 + r);
  const double l_rect = r * d;
  const double l_strip = l_rect + in.feed_flow_kmol_h;
  if (l_rect < 0.0 || d < 0.0)
    throw InstabilityError("negative internal flow");

  s.boilup_flow = v;
  s.distillate_flow = d;
  s.reflux_flow = l_rect;
  s.bottoms_flow = std::max(
      0.0, s.bottoms_bias_kmol_h + cfg.reboiler_level_gain_per_h *
                                       (s.m_reboiler - cfg.reboiler_holdup_kmol));
  for (int j = 0; j < n; ++j) {
    s.v[j] = v;
    s.l[j] = (j + 1 >= cfg.feed_tray) ? l_strip : l_rect;
  }
}

TrayState fresh_state(const ColumnConfig& cfg, const thermo::BinarySystem& sys,
                      const StepInputs& in) {
  TrayState s;
  const int n = cfg.n_trays;
  s.x.assign(n, in.feed_z_heavy);
  s.m.assign(n, cfg.tray_holdup_kmol);
  s.t.assign(n, 0.0);
  s.p.assign(n, 0.0);
  s.y.assign(n, 0.0);
  s.l.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.x_condenser = in.feed_z_heavy;
  s.m_condenser = cfg.condenser_holdup_kmol;
  s.x_reboiler = in.feed_z_heavy;
  s.m_reboiler = cfg.reboiler_holdup_kmol;
  s.bottoms_bias_kmol_h = in.feed_flow_kmol_h * in.feed_z_heavy;
  update_algebraic(s, in, cfg, sys);
  return s;
}

// Stage derivatives d(M x)/dt in kmol/h; total reboiler holdup rate as well.
struct Derivatives {
  std::vector<double> tray;  // d(M_j x_j)/dt
  double condenser = 0.0;    // d(M_C x_C)/dt
  double reboiler = 0.0;     // d(M_B x_B)/dt
  double reboiler_holdup = 0.0;  // d M_B / dt
  double max_abs() const {
    double m = std::max(std::abs(condenser), std::abs(reboiler));
    for (double d : tray) m = std::max(m, std::abs(d));
    return m;
  }
};

Derivatives derivatives(const TrayState& s, const StepInputs& in,
                        const ColumnConfig& cfg) {
  const int n = cfg.n_trays;
  const int feed = cfg.feed_tray - 1;
  Derivatives d;
  d.tray.assign(n, 0.0);
  const double v = s.boilup_flow;
  for (int j = 0; j < n; ++j) {
    const double x_above = (j == 0) ? s.x_condenser : s.x[j - 1];
    const double l_in = (j == 0) ? s.reflux_flow : s.l[j - 1];
    const double y_below = (j == n - 1) ? s.y_reboiler : s.y[j + 1];
    double acc = l_in * x_above - s.l[j] * s.x[j] + v * y_below - v * s.y[j];
    if (j == feed) acc += in.feed_flow_kmol_h * in.feed_z_heavy;
    d.tray[j] = acc;
  }
  d.condenser = v * s.y[0] - (s.reflux_flow + s.distillate_flow) * s.x_condenser;
  d.reboiler = s.l[n - 1] * s.x[n - 1] - v * s.y_reboiler -
               s.bottoms_flow * s.x_reboiler;
  d.reboiler_holdup = s.l[n - 1] - v - s.bottoms_flow;
  return d;
}

bool clamp_fraction(double& x) {
  if (x < -0.01 || x > 1.01) {
    x = std::clamp(x, 0.0, 1.0);
    return true;
  }
  x = std::clamp(x, 0.0, 1.0);
  return false;
}

}  // namespace

StepInputs schedule_inputs(const ColumnConfig& cfg,
                           const std::vector<ScheduleEvent>& schedule,
                           double time_s) {
  StepInputs in;
  in.reflux_ratio = cfg.nominal_reflux_ratio;
  in.feed_flow_kmol_h = cfg.feed_flow_kmol_h;
  in.feed_z_heavy = cfg.feed_z_heavy;
  in.duty_kw = cfg.reboiler_duty_kw;
  in.p_condenser_kpa = cfg.pressure_condenser_kpa;
  in.p_main_kpa = cfg.pressure_main_kpa;
  in.p_bottom_kpa = cfg.pressure_bottom_kpa;

  std::vector<const ScheduleEvent*> ordered;
  ordered.reserve(schedule.size());
  for (const ScheduleEvent& e : schedule) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ScheduleEvent* a, const ScheduleEvent* b) {
                     return a->time_s < b->time_s;
                   });
  for (const ScheduleEvent* e : ordered) {
    switch (e->kind) {
      case ScheduleEvent::Kind::reflux_ramp:
        if (time_s >= e->time_s) {
          double frac = (std::min(time_s, e->end_s) - e->time_s) /
                        (e->end_s - e->time_s);
          in.reflux_ratio = e->from + frac * (e->to - e->from);
        }
        break;
      case ScheduleEvent::Kind::feed_flow_step:
        if (time_s >= e->time_s) in.feed_flow_kmol_h = e->value;
        break;
      case ScheduleEvent::Kind::feed_comp_step:
        if (time_s >= e->time_s) in.feed_z_heavy = e->value;
        break;
      case ScheduleEvent::Kind::pressure_step:
        if (time_s >= e->time_s) {
          switch (e->section) {
            case ScheduleEvent::Section::condenser:
              in.p_condenser_kpa = e->value;
              break;
            case ScheduleEvent::Section::main:
              in.p_main_kpa = e->value;
              break;
            case ScheduleEvent::Section::bottom:
              in.p_bottom_kpa = e->value;
              break;
          }
        }
        break;
    }
  }
  return in;
}

double tray_pressure(const ColumnConfig& cfg, const StepInputs& in, int tray) {
  // Stage positions: 0 condenser, 1..n trays, n+1 reboiler; the main-tower
  // sensor anchors the mid tray.
  const int n = cfg.n_trays;
  const int mid = (n + 1) / 2;
  if (tray <= mid) {
    double f = static_cast<double>(tray) / mid;
    return in.p_condenser_kpa + f * (in.p_main_kpa - in.p_condenser_kpa);
  }
  double f = static_cast<double>(tray - mid) / (n + 1 - mid);
  return in.p_main_kpa + f * (in.p_bottom_kpa - in.p_main_kpa);
}

TrayState step(const TrayState& state, const StepInputs& in, double dt_s,
               const ColumnConfig& cfg, const thermo::BinarySystem& sys) {
  if (!(dt_s > 0.0)) throw std::domain_error("step: dt must be > 0");
  TrayState s = state;
  update_algebraic(s, in, cfg, sys);
  Derivatives d = derivatives(s, in, cfg);

  const double dt_h = dt_s / 3600.0;
  bool clamped = false;
  for (std::size_t j = 0; j < s.x.size(); ++j) {
    double mx = s.m[j] * s.x[j] + dt_h * d.tray[j];
    s.x[j] = mx / s.m[j];
    clamped |= clamp_fraction(s.x[j]);
  }
  {
    double mx = s.m_condenser * s.x_condenser + dt_h * d.condenser;
    s.x_condenser = mx / s.m_condenser;
    clamped |= clamp_fraction(s.x_condenser);
  }
  {
    double mx = s.m_reboiler * s.x_reboiler + dt_h * d.reboiler;
    double m_new = s.m_reboiler + dt_h * d.reboiler_holdup;
    if (m_new <= 0.0) throw InstabilityError("reboiler drained");
    s.x_reboiler = mx / m_new;
    s.m_reboiler = m_new;
    clamped |= clamp_fraction(s.x_reboiler);
  }
  s.instability_flag = state.instability_flag || clamped;
  s.time_s = state.time_s + dt_s;
  update_algebraic(s, in, cfg, sys);
  return s;
}

TrayState init_steady_state(const ColumnConfig& cfg,
                            const thermo::BinarySystem& sys, long max_steps) {
  const StepInputs in = schedule_inputs(cfg, {}, 0.0);
  TrayState s = fresh_state(cfg, sys, in);
  const double dt = cfg.internal_dt_s;
  double residual = 0.0;
  for (long k = 0; k < max_steps; ++k) {
    TrayState next = step(s, in, dt, cfg, sys);
    Derivatives d = derivatives(next, in, cfg);
    residual = std::max(d.max_abs(), std::abs(d.reboiler_holdup));
    s = std::move(next);
    if (residual < 1e-8) {
      s.time_s = 0.0;
      s.instability_flag = false;
      return s;
    }
  }
  throw ConvergenceError(
      "init_steady_state: no convergence after " + std::to_string(max_steps) +
      " steps, residual " + std::to_string(residual) + " kmol/h");
}

namespace {

SensorRecord make_record(const TrayState& s, const StepInputs& in,
                         const ColumnConfig& cfg,
                         const thermo::BinarySystem& sys) {
  SensorRecord r;
  r.time_s = s.time_s;
  auto& c = r.sensors;
  c[ch::liquid_pct_condenser] = 100.0 * s.m_condenser / cfg.condenser_capacity_kmol;
  c[ch::condenser_pressure_kpa] = in.p_condenser_kpa;
  c[ch::liquid_pct_reboiler] = 100.0 * s.m_reboiler / cfg.reboiler_capacity_kmol;
  c[ch::mass_flow_feed_kg_h] = in.feed_flow_kmol_h * mw_mix(in.feed_z_heavy, sys);
  c[ch::mass_flow_top_outlet_kg_h] = s.boilup_flow * mw_mix(s.y[0], sys);
  c[ch::net_mass_flow_main_kg_h] = s.bottoms_flow * mw_mix(s.x_reboiler, sys);
  c[ch::hx_frac_reboiler] = s.x_reboiler;
  c[ch::hx_frac_top_outlet] = s.x[0];
  c[ch::feed_z_hx] = in.feed_z_heavy;
  c[ch::feed_z_tx] = 1.0 - in.feed_z_heavy;
  c[ch::feed_tray_temp_c] = s.t[cfg.feed_tray - 1] - 273.15;
  c[ch::pressure_main_kpa] = in.p_main_kpa;
  c[ch::pressure_bottom_kpa] = in.p_bottom_kpa;
  c[ch::pressure_top_kpa] = s.p[0];
  c[ch::reflux_ratio] = in.reflux_ratio;
  c[ch::duties_kw] = 0.0;
  r.clean_x_hx = s.x_condenser;
  r.clean_x_tx = 1.0 - s.x_condenser;
  r.target_x_hx = r.clean_x_hx;
  r.target_x_tx = r.clean_x_tx;
  return r;
}

void apply_noise(SensorRecord& r, const NoiseConfig& noise, Rng& rng) {
  auto& c = r.sensors;
  for (std::size_t k = 0; k < ch::count; ++k) {
    if (k == ch::feed_z_tx) continue;  // paired with feed_z_hx below
    double delta = noise.amp[k] * rng.uniform(-1.0, 1.0);
    if (k == ch::feed_z_hx) {
      double z = std::clamp(c[ch::feed_z_hx] + delta, 0.0, 1.0);
      c[ch::feed_z_hx] = z;
      c[ch::feed_z_tx] = 1.0 - z;
    } else {
      c[k] += delta;
    }
  }
  c[ch::liquid_pct_condenser] = std::clamp(c[ch::liquid_pct_condenser], 0.0, 100.0);
  c[ch::liquid_pct_reboiler] = std::clamp(c[ch::liquid_pct_reboiler], 0.0, 100.0);
  c[ch::hx_frac_reboiler] = std::clamp(c[ch::hx_frac_reboiler], 0.0, 1.0);
  c[ch::hx_frac_top_outlet] = std::clamp(c[ch::hx_frac_top_outlet], 0.0, 1.0);
  double delta = noise.target_amp * rng.uniform(-1.0, 1.0);
  double hx = std::clamp(r.clean_x_hx + delta, 0.0, 1.0);
  r.target_x_hx = hx;
  r.target_x_tx = 1.0 - hx;
}

}  // namespace

std::vector<SensorRecord> generate_dataset(const RunConfig& cfg,
                                           std::uint64_t seed) {
  cfg.validate();
  const double interval = cfg.dataset.sample_interval_s;
  const double dt = cfg.column.internal_dt_s;
  const long n_samples = std::lround(cfg.dataset.duration_s / interval);
  const long sub = std::lround(interval / dt);

  Rng noise_rng = Rng::substream(seed, "noise");
  TrayState s = init_steady_state(cfg.column, cfg.system);

  std::vector<SensorRecord> records;
  records.reserve(n_samples + 1);
  StepInputs in = schedule_inputs(cfg.column, cfg.schedule, 0.0);
  update_algebraic(s, in, cfg.column, cfg.system);
  SensorRecord r0 = make_record(s, in, cfg.column, cfg.system);
  apply_noise(r0, cfg.noise, noise_rng);
  records.push_back(r0);

  for (long k = 1; k <= n_samples; ++k) {
    for (long i = 0; i < sub; ++i) {
      in = schedule_inputs(cfg.column, cfg.schedule, s.time_s);
      s = step(s, in, dt, cfg.column, cfg.system);
      if (s.instability_flag)
        throw InstabilityError("simulator instability at t = " +
                               std::to_string(s.time_s) + " s");
    }
    // Records carry the manipulated inputs at the sample timestamp itself.
    in = schedule_inputs(cfg.column, cfg.schedule, s.time_s);
    update_algebraic(s, in, cfg.column, cfg.system);
    SensorRecord r = make_record(s, in, cfg.column, cfg.system);
    apply_noise(r, cfg.noise, noise_rng);
    records.push_back(r);
  }
  return records;
}

namespace {

void write_value(std::FILE* f, double v, bool last) {
  std::fprintf(f, "%.17g%c", v, last ? '\n' : ',');
}

}  // namespace

void write_dataset_csv(const std::string& path,
                       const std::vector<SensorRecord>& records) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(ErrorCategory::other, "cannot write " + path);
  std::fprintf(f, "%s", kColTime);
  for (const char* name : kChannelNames) std::fprintf(f, ",%s", name);
  std::fprintf(f, ",%s,%s\n", kColTargetTx, kColTargetHx);
  for (const SensorRecord& r : records) {
    write_value(f, r.time_s, false);
    for (double v : r.sensors) write_value(f, v, false);
    write_value(f, r.target_x_tx, false);
    write_value(f, r.target_x_hx, true);
  }
  std::fclose(f);
}

void write_clean_targets_csv(const std::string& path,
                             const std::vector<SensorRecord>& records) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(ErrorCategory::other, "cannot write " + path);
  std::fprintf(f, "%s,%s,%s\n", kColTime, kColCleanTx, kColCleanHx);
  for (const SensorRecord& r : records) {
    write_value(f, r.time_s, false);
    write_value(f, r.clean_x_tx, false);
    write_value(f, r.clean_x_hx, true);
  }
  std::fclose(f);
}

}  // namespace coltwin::sim
