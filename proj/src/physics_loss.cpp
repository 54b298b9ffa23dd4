#include "coltwin/physics_loss.hpp"

#include <algorithm>
#include <cmath>

#include "coltwin/channels.hpp"
#include "coltwin/column_sim.hpp"
#include "coltwin/errors.hpp"
#include "coltwin/rng.hpp"

namespace coltwin::phys {

namespace {

using thermo::ComponentPair;

struct Gated {
  double value = 0.0;
  double gate = 0.0;  // d value / d head coordinate (0 when clamped)
};

Gated denorm_gated(const PhysicsContext& ctx, std::size_t feature, double u,
                   double offset, double lo, double hi) {
  double raw = ctx.stats.denorm(feature, u) + offset;
  if (raw <= lo) return {lo, 0.0};
  if (raw >= hi) return {hi, 0.0};
  return {raw, ctx.stats.range(feature)};
}

Gated t_head(const PhysicsContext& ctx, double t_hat) {
  return denorm_gated(ctx, ch::feed_tray_temp_c, t_hat, 273.15, ctx.t_clamp_lo,
                      ctx.t_clamp_hi);
}

Gated p_head(const PhysicsContext& ctx, double p_hat) {
  return denorm_gated(ctx, ch::pressure_main_kpa, p_hat, 0.0, ctx.p_clamp_lo,
                      ctx.p_clamp_hi);
}

}  // namespace

LossWeights schedule(int epoch) {
  if (epoch < 0) throw std::domain_error("schedule: epoch must be >= 0");
  LossWeights w;
  double z = 0.02 * (static_cast<double>(epoch) - 300.0);
  w.lambda_d = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                        : std::exp(z) / (1.0 + std::exp(z));
  w.lambda_p = 1.0 - w.lambda_d;
  w.lambda_b = 0.1;
  return w;
}

CollocationSet CollocationSet::sample(int n, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "collocation");
  CollocationSet c;
  c.points.resize(n, nn::arch::input);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nn::arch::input; ++j) c.points(i, j) = rng.uniform01();
  return c;
}

double mccabe_residual(double x_n, double y_n, double reflux, double x_d) {
  if (reflux < 0.0) throw std::domain_error("mccabe_residual: reflux must be >= 0");
  double line = reflux / (reflux + 1.0) * x_n + x_d / (reflux + 1.0);
  double e = y_n - line;
  return e * e;
}

double data_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets) {
  if (outputs.rows() == 0) throw std::invalid_argument("data_loss: empty batch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    double eh = outputs(i, 0) - targets(i, 0);
    double et = outputs(i, 1) - targets(i, 1);
    acc += 0.5 * (eh * eh + et * et);
  }
  return acc / static_cast<double>(outputs.rows());
}

double denorm_reflux(const PhysicsContext& ctx, double u) {
  return std::max(0.0, ctx.stats.denorm(ch::reflux_ratio, u));
}

double denorm_s8_hx(const PhysicsContext& ctx, double u_sensor8) {
  return std::clamp(ctx.stats.denorm(ch::hx_frac_top_outlet, u_sensor8), 0.0,
                    1.0);
}

double denorm_t_head(const PhysicsContext& ctx, double t_hat) {
  return t_head(ctx, t_hat).value;
}

double denorm_p_head(const PhysicsContext& ctx, double p_hat) {
  return p_head(ctx, p_hat).value;
}

PointTerms vle_mccabe_point(const PhysicsContext& ctx, double reflux,
                            double s8_hx, const nn::ModelOutput& out) {
  const thermo::BinarySystem& sys = *ctx.sys;
  PointTerms r;
  const Gated t = t_head(ctx, out.t_tray);
  const Gated p = p_head(ctx, out.p_tray);
  const double x1_hx = std::clamp(s8_hx, 0.0, 1.0);
  const double x1_tx = 1.0 - x1_hx;

  const double ph = thermo::antoine_psat(t.value, sys.antoine_heavy);
  const double pl = thermo::antoine_psat(t.value, sys.antoine_light);
  const double dph = thermo::antoine_psat_dt(t.value, sys.antoine_heavy);
  const double dpl = thermo::antoine_psat_dt(t.value, sys.antoine_light);

  // Equilibrium vapor of the measured top-tray liquid at the predicted tray
  // state; the prediction is that vapor (total condenser).
  {
    const ComponentPair g1 = thermo::wilson_gamma(x1_hx, sys.wilson);
    const double uh = g1.heavy * ph * x1_hx / p.value;
    const double ul = g1.light * pl * x1_tx / p.value;
    const double eh = out.x_hx - uh;
    const double el = out.x_tx - ul;
    r.vle = eh * eh + el * el;
    r.d_vle[0] = 2.0 * eh;
    r.d_vle[1] = 2.0 * el;
    r.d_vle[2] = -2.0 *
                 (eh * g1.heavy * dph * x1_hx + el * g1.light * dpl * x1_tx) /
                 p.value * t.gate;
    r.d_vle[3] = 2.0 * (eh * uh + el * ul) / p.value * p.gate;
  }

  // McCabe term: the equilibrium vapor of the predicted composition at the
  // same tray state must lie on the rectifying line through the measured top
  // liquid (intercept in the TX basis).
  {
    const double a = reflux / (reflux + 1.0);
    const double b = x1_tx / (reflux + 1.0);
    const double y_line = a * out.x_tx + b;

    const ComponentPair g = thermo::wilson_gamma(out.x_hx, sys.wilson);
    const ComponentPair dg = thermo::wilson_dgamma_dx(out.x_hx, sys.wilson);
    const double uh = g.heavy * ph * out.x_hx / p.value;
    const double ul = g.light * pl * out.x_tx / p.value;
    const double duh_dxh = (dg.heavy * out.x_hx + g.heavy) * ph / p.value;
    const double dul_dxh = dg.light * pl * out.x_tx / p.value;
    const double dul_dxt = g.light * pl / p.value;
    const double duh_dt = g.heavy * dph * out.x_hx / p.value;
    const double dul_dt = g.light * dpl * out.x_tx / p.value;
    const double duh_dp = -uh / p.value;
    const double dul_dp = -ul / p.value;

    const double s = uh + ul;
    const double y_eq_l = ul / s;
    const double em = y_eq_l - y_line;
    r.mccabe = em * em;
    auto dyeq = [&](double dul, double duh) {
      return (dul * uh - ul * duh) / (s * s);
    };
    r.d_mccabe[0] = 2.0 * em * dyeq(dul_dxh, duh_dxh);
    r.d_mccabe[1] = 2.0 * em * (dyeq(dul_dxt, 0.0) - a);
    r.d_mccabe[2] = 2.0 * em * dyeq(dul_dt, duh_dt) * t.gate;
    r.d_mccabe[3] = 2.0 * em * dyeq(dul_dp, duh_dp) * p.gate;
  }
  return r;
}

BcTerms bc_point(const PhysicsContext& ctx, const nn::ModelOutput& out) {
  BcTerms r;
  const Gated t = t_head(ctx, out.t_tray);
  const Gated p = p_head(ctx, out.p_tray);

  const double closure = out.x_hx + out.x_tx - 1.0;
  r.bc = closure * closure;
  r.d_bc[0] = 2.0 * closure;
  r.d_bc[1] = 2.0 * closure;

  // The predicted tray temperature must sit at or above the dew point of the
  // predicted vapor. y_light = 1 - y_heavy is built into the dew derivative,
  // and the complement is exact through the output head, so the hinge is a
  // function of x_hx alone.
  const double y_h = std::clamp(out.x_hx, 0.0, 1.0);
  thermo::DewPoint dew = thermo::dew_point_t_grad(y_h, p.value, *ctx.sys);
  const double h = dew.t - t.value;
  if (h > 0.0) {
    r.bc += h * h;
    r.d_bc[0] += 2.0 * h * dew.dt_dy;
    r.d_bc[2] += 2.0 * h * (-t.gate);
    r.d_bc[3] += 2.0 * h * dew.dt_dp * p.gate;
  }
  return r;
}

namespace {

// Sensor-only quantities of one record used by the balance kernels.
struct RecordView {
  double m_condenser = 0.0;  // kmol
  double m_reboiler = 0.0;   // kmol
  double v_top = 0.0;        // kmol/h vapor into the condenser
  double y1_hx = 0.0;        // its composition (equilibrium at the top tray)
  double f_molar = 0.0;      // kmol/h
  double z_tx = 0.0;
  double x_b_hx = 0.0, x_b_tx = 0.0;
  double y_b_hx = 0.0;       // equilibrium vapor off the reboiler
  double reflux = 0.0;
  double h_b = 0.0, h_vb = 0.0;  // kJ/kmol at the reboiler
  double p_tray_n = 0.0;     // bottom tray pressure (interpolated profile)
  double duties_kw = 0.0;
};

RecordView view_record(const PhysicsContext& ctx, const Eigen::RowVectorXd& raw) {
  const thermo::BinarySystem& sys = *ctx.sys;
  RecordView v;
  v.m_condenser = raw[ch::liquid_pct_condenser] / 100.0 *
                  ctx.column->condenser_capacity_kmol;
  v.m_reboiler =
      raw[ch::liquid_pct_reboiler] / 100.0 * ctx.column->reboiler_capacity_kmol;

  const double x1 = std::clamp(raw[ch::hx_frac_top_outlet], 0.0, 1.0);
  const double p_top = raw[ch::pressure_top_kpa];
  const double t1 = thermo::bubble_point_t(x1, p_top, sys);
  ComponentPair y1 = thermo::raoult_y(x1, t1, p_top, sys);
  v.y1_hx = y1.heavy / (y1.heavy + y1.light);
  const double mw_y1 = v.y1_hx * sys.molar_mass_heavy +
                       (1.0 - v.y1_hx) * sys.molar_mass_light;
  v.v_top = raw[ch::mass_flow_top_outlet_kg_h] / mw_y1;

  const double z_hx = std::clamp(raw[ch::feed_z_hx], 0.0, 1.0);
  v.z_tx = 1.0 - z_hx;
  const double mw_z =
      z_hx * sys.molar_mass_heavy + (1.0 - z_hx) * sys.molar_mass_light;
  v.f_molar = raw[ch::mass_flow_feed_kg_h] / mw_z;

  v.x_b_hx = std::clamp(raw[ch::hx_frac_reboiler], 0.0, 1.0);
  v.x_b_tx = 1.0 - v.x_b_hx;
  v.reflux = std::max(0.0, raw[ch::reflux_ratio]);

  const double p_bot = raw[ch::pressure_bottom_kpa];
  const double t_b = thermo::bubble_point_t(v.x_b_hx, p_bot, sys);
  ComponentPair yb = thermo::raoult_y(v.x_b_hx, t_b, p_bot, sys);
  v.y_b_hx = yb.heavy / (yb.heavy + yb.light);
  v.h_b = thermo::h_liquid(v.x_b_hx, t_b, sys);
  v.h_vb = thermo::h_vapor(v.y_b_hx, t_b, sys);

  sim::StepInputs in;
  in.p_condenser_kpa = raw[ch::condenser_pressure_kpa];
  in.p_main_kpa = raw[ch::pressure_main_kpa];
  in.p_bottom_kpa = raw[ch::pressure_bottom_kpa];
  v.p_tray_n = sim::tray_pressure(*ctx.column, in, ctx.column->n_trays);
  v.duties_kw = raw[ch::duties_kw];
  return v;
}

// Reboiler-envelope enthalpy flow (kW) reconstructed from one record and the
// predicted distillate composition x_d_tx, with d flow / d x_d_tx.
struct EnergyFlow {
  double flow_kw = 0.0;
  double dflow_dxtx = 0.0;
};

EnergyFlow energy_flow(const PhysicsContext& ctx, const RecordView& v,
                       double x_d_tx) {
  const thermo::BinarySystem& sys = *ctx.sys;
  EnergyFlow e;
  const double denom = x_d_tx - v.x_b_tx;
  if (std::abs(denom) < 1e-6) return e;  // degenerate split carries no signal

  // Quasi-steady distillate rate from the overall component balance, clamped
  // to the physical range.
  double dist = v.f_molar * (v.z_tx - v.x_b_tx) / denom;
  double dgate = 1.0;
  if (dist < 0.0) {
    dist = 0.0;
    dgate = 0.0;
  } else if (dist > v.f_molar) {
    dist = v.f_molar;
    dgate = 0.0;
  }
  const double dd_dxtx = dgate * (-dist / denom);

  const double r = v.reflux;
  const double bott = v.f_molar - dist;
  const double l_strip = r * dist + v.f_molar;
  const double v_strip = (r + 1.0) * dist;
  if (l_strip <= 0.0) return e;

  // Liquid entering the reboiler from the stripping operating line.
  double x_n = (v_strip * v.y_b_hx + bott * v.x_b_hx) / l_strip;
  double xgate = 1.0;
  if (x_n <= 0.0) {
    x_n = 0.0;
    xgate = 0.0;
  } else if (x_n >= 1.0) {
    x_n = 1.0;
    xgate = 0.0;
  }
  const double dxn_dd =
      xgate *
      (((r + 1.0) * v.y_b_hx - v.x_b_hx) * l_strip -
       (v_strip * v.y_b_hx + bott * v.x_b_hx) * r) /
      (l_strip * l_strip);

  thermo::BubblePoint bub = thermo::bubble_point_t_grad(x_n, v.p_tray_n, sys);
  const double h_n = thermo::h_liquid(x_n, bub.t, sys);
  const double cp_mix =
      x_n * sys.cp_liquid_heavy + (1.0 - x_n) * sys.cp_liquid_light;
  const double dhn_dxn = (sys.cp_liquid_heavy - sys.cp_liquid_light) *
                             (bub.t - sys.t_ref) +
                         cp_mix * bub.dt_dx;

  const double flow_kj_h = l_strip * h_n - v_strip * v.h_vb - bott * v.h_b;
  const double dflow_dd = r * h_n + l_strip * dhn_dxn * dxn_dd -
                          (r + 1.0) * v.h_vb + v.h_b;
  e.flow_kw = flow_kj_h / 3600.0;
  e.dflow_dxtx = dflow_dd * dd_dxtx / 3600.0;
  return e;
}

}  // namespace

PairTerms balance_pair(const PhysicsContext& ctx,
                       const Eigen::RowVectorXd& raw_a,
                       const Eigen::RowVectorXd& raw_b, double dt_hours,
                       const nn::ModelOutput& out_a,
                       const nn::ModelOutput& out_b, double q_kw) {
  if (!(dt_hours > 0.0))
    throw std::domain_error("balance_pair: dt_hours must be > 0");
  PairTerms r;
  const RecordView va = view_record(ctx, raw_a);
  const RecordView vb = view_record(ctx, raw_b);

  // Component (HX) balance around the condenser drum: the drum liquid is the
  // predicted distillate; vapor in equals liquid out under the perfect-level
  // splitter, so accumulation must match V (y1 - x_pred).
  {
    const double acc = (vb.m_condenser * out_b.x_hx - va.m_condenser * out_a.x_hx) /
                       dt_hours;
    const double flow_a = va.v_top * (va.y1_hx - out_a.x_hx);
    const double flow_b = vb.v_top * (vb.y1_hx - out_b.x_hx);
    const double res = acc - 0.5 * (flow_a + flow_b);
    r.mass = res * res;
    const double dres_da = -va.m_condenser / dt_hours + 0.5 * va.v_top;
    const double dres_db = vb.m_condenser / dt_hours + 0.5 * vb.v_top;
    r.d_mass_xhx[0] = 2.0 * res * dres_da;
    r.d_mass_xhx[1] = 2.0 * res * dres_db;
  }

  // Enthalpy balance around the reboiler with reconstructed internal flows.
  {
    const EnergyFlow ea = energy_flow(ctx, va, out_a.x_tx);
    const EnergyFlow eb = energy_flow(ctx, vb, out_b.x_tx);
    const double acc_kw =
        (vb.m_reboiler * vb.h_b - va.m_reboiler * va.h_b) / dt_hours / 3600.0;
    const double q_total = q_kw + 0.5 * (va.duties_kw + vb.duties_kw);
    const double res = acc_kw - 0.5 * (ea.flow_kw + eb.flow_kw) - q_total;
    r.energy = res * res;
    r.d_energy_xtx[0] = 2.0 * res * (-0.5 * ea.dflow_dxtx);
    r.d_energy_xtx[1] = 2.0 * res * (-0.5 * eb.dflow_dxtx);
  }
  return r;
}

double mass_balance_residual(const PhysicsContext& ctx,
                             const Eigen::RowVectorXd& raw_a,
                             const Eigen::RowVectorXd& raw_b, double dt_hours,
                             const nn::ModelOutput& out_a,
                             const nn::ModelOutput& out_b) {
  return balance_pair(ctx, raw_a, raw_b, dt_hours, out_a, out_b, 0.0).mass;
}

double energy_balance_residual(const PhysicsContext& ctx,
                               const Eigen::RowVectorXd& raw_a,
                               const Eigen::RowVectorXd& raw_b, double dt_hours,
                               const nn::ModelOutput& out_a,
                               const nn::ModelOutput& out_b, double q_kw) {
  return balance_pair(ctx, raw_a, raw_b, dt_hours, out_a, out_b, q_kw).energy;
}

double phys_loss(const PhysicsContext& ctx, const nn::NetworkParams& params,
                 const CollocationSet& colloc, const data::Dataset& ds,
                 std::size_t pair_row_begin, std::size_t pair_row_end,
                 double q_kw) {
  double vle = 0.0, mcc = 0.0;
  const Eigen::Index nc = colloc.points.rows();
  if (nc > 0) {
    nn::ForwardCache cache;
    nn::forward_batch(params, colloc.points, cache);
    for (Eigen::Index i = 0; i < nc; ++i) {
      nn::ModelOutput out{cache.out(i, 0), cache.out(i, 1), cache.out(i, 2),
                          cache.out(i, 3)};
      double rr = denorm_reflux(ctx, colloc.points(i, ch::reflux_ratio));
      double s8 = denorm_s8_hx(ctx, colloc.points(i, ch::hx_frac_top_outlet));
      PointTerms t = vle_mccabe_point(ctx, rr, s8, out);
      vle += t.vle;
      mcc += t.mccabe;
    }
    vle /= static_cast<double>(nc);
    mcc /= static_cast<double>(nc);
  }

  double mass = 0.0, energy = 0.0;
  std::size_t n_pairs = 0;
  if (pair_row_end > pair_row_begin + 1) {
    const Eigen::MatrixXd& feats = ds.features();
    Eigen::MatrixXd norm = data::apply_norm(feats, ctx.stats);
    nn::ForwardCache cache;
    nn::forward_batch(params, norm, cache);
    const double fs = ctx.feed_scale() * ctx.feed_scale();
    const double qs = ctx.duty_scale() * ctx.duty_scale();
    for (std::size_t i = pair_row_begin; i + 1 < pair_row_end; ++i) {
      nn::ModelOutput oa{cache.out(i, 0), cache.out(i, 1), cache.out(i, 2),
                         cache.out(i, 3)};
      nn::ModelOutput ob{cache.out(i + 1, 0), cache.out(i + 1, 1),
                         cache.out(i + 1, 2), cache.out(i + 1, 3)};
      double dt_h = (ds.time_s()[i + 1] - ds.time_s()[i]) / 3600.0;
      PairTerms t = balance_pair(ctx, feats.row(static_cast<Eigen::Index>(i)),
                                 feats.row(static_cast<Eigen::Index>(i + 1)),
                                 dt_h, oa, ob, q_kw);
      mass += t.mass / fs;
      energy += t.energy / qs;
      ++n_pairs;
    }
    if (n_pairs > 0) {
      mass /= static_cast<double>(n_pairs);
      energy /= static_cast<double>(n_pairs);
    }
  }
  return vle + mcc + mass + energy;
}

}  // namespace coltwin::phys
