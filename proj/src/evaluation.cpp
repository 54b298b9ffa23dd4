#include "coltwin/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "coltwin/channels.hpp"
#include "coltwin/column_sim.hpp"
#include "coltwin/errors.hpp"
#include "coltwin/rng.hpp"
#include "coltwin/thermo.hpp"

namespace coltwin::evaluation {

namespace {

using nlohmann::json;

TargetMetrics column_metrics(const Eigen::VectorXd& pred,
                             const Eigen::VectorXd& truth) {
  const Eigen::Index n = pred.size();
  TargetMetrics m;
  Eigen::VectorXd res = pred - truth;
  m.mse = res.squaredNorm() / static_cast<double>(n);
  m.rmse = std::sqrt(m.mse);
  m.mae = res.cwiseAbs().sum() / static_cast<double>(n);
  const double mean_t = truth.mean();
  const double ss_tot = (truth.array() - mean_t).square().sum();
  const double ss_res = res.squaredNorm();
  m.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                      : (ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
  const double mean_r = res.mean();
  m.residual_std = std::sqrt((res.array() - mean_r).square().sum() /
                             static_cast<double>(n));
  return m;
}

json metrics_json(const TargetMetrics& m) {
  return json{{"mse", m.mse},
              {"rmse", m.rmse},
              {"mae", m.mae},
              {"r2", m.r2},
              {"residual_std", m.residual_std}};
}

TargetMetrics metrics_from_json(const json& j) {
  TargetMetrics m;
  m.mse = j.at("mse").get<double>();
  m.rmse = j.at("rmse").get<double>();
  m.mae = j.at("mae").get<double>();
  m.r2 = j.at("r2").get<double>();
  m.residual_std = j.at("residual_std").get<double>();
  return m;
}

// Inverts the normalized equilibrium light-vapor fraction at pressure p:
// finds x_heavy with y_light_eq(x_heavy) = y_light. Monotone decreasing.
double equilibrium_x_from_y(double y_light, double p,
                            const thermo::BinarySystem& sys) {
  auto y_eq_light = [&](double x_heavy) {
    double t = thermo::bubble_point_t(x_heavy, p, sys);
    thermo::ComponentPair y = thermo::raoult_y(x_heavy, t, p, sys);
    return y.light / (y.heavy + y.light);
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    if (y_eq_light(mid) > y_light)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Metrics compute_metrics(const Eigen::MatrixXd& predictions,
                        const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.rows() == 0)
    throw std::invalid_argument("compute_metrics: shape mismatch or empty");
  Metrics m;
  m.x_hx = column_metrics(predictions.col(0), targets.col(0));
  m.x_tx = column_metrics(predictions.col(1), targets.col(1));
  m.averaged.mse = 0.5 * (m.x_hx.mse + m.x_tx.mse);
  m.averaged.rmse = 0.5 * (m.x_hx.rmse + m.x_tx.rmse);
  m.averaged.mae = 0.5 * (m.x_hx.mae + m.x_tx.mae);
  m.averaged.r2 = 0.5 * (m.x_hx.r2 + m.x_tx.r2);
  m.averaged.residual_std = 0.5 * (m.x_hx.residual_std + m.x_tx.residual_std);
  return m;
}

PhysicsConsistency physics_consistency(const phys::PhysicsContext& ctx,
                                       const nn::NetworkParams& params,
                                       const data::Dataset& ds,
                                       std::size_t row_begin,
                                       std::size_t row_end, double threshold) {
  if (row_end <= row_begin)
    throw std::invalid_argument("physics_consistency: empty row range");
  const Eigen::MatrixXd norm = data::apply_norm(ds.features(), ctx.stats);
  nn::ForwardCache cache;
  nn::forward_batch(params,
                    norm.middleRows(static_cast<Eigen::Index>(row_begin),
                                    static_cast<Eigen::Index>(row_end - row_begin)),
                    cache);
  double acc = 0.0;
  for (std::size_t i = row_begin; i < row_end; ++i) {
    const Eigen::Index k = static_cast<Eigen::Index>(i - row_begin);
    nn::ModelOutput out{cache.out(k, 0), cache.out(k, 1), cache.out(k, 2),
                        cache.out(k, 3)};
    // Same construction as training: the prediction is the vapor off the top
    // tray, in equilibrium with the measured top-tray liquid.
    const double x1 = std::clamp(
        ds.features()(static_cast<Eigen::Index>(i), ch::hx_frac_top_outlet), 0.0,
        1.0);
    const double t = phys::denorm_t_head(ctx, out.t_tray);
    const double p = phys::denorm_p_head(ctx, out.p_tray);
    acc += thermo::vle_residual({x1, 1.0 - x1}, {out.x_hx, out.x_tx}, t, p,
                                *ctx.sys);
  }
  PhysicsConsistency pc;
  pc.mean_vle_residual = acc / static_cast<double>(row_end - row_begin);
  pc.threshold = threshold;
  pc.pass = pc.mean_vle_residual < threshold;
  return pc;
}

TrayProfile reconstruct_profile(const phys::PhysicsContext& ctx,
                                const Eigen::RowVectorXd& raw_record,
                                const nn::ModelOutput& out) {
  const thermo::BinarySystem& sys = *ctx.sys;
  const ColumnConfig& col = *ctx.column;
  TrayProfile profile;
  profile.feed_tray = col.feed_tray;
  profile.n_trays = col.n_trays;

  const double reflux = std::max(0.0, raw_record[ch::reflux_ratio]);
  const double xd_tx = std::clamp(out.x_tx, 0.0, 1.0);
  const double z_hx = std::clamp(raw_record[ch::feed_z_hx], 0.0, 1.0);
  const double z_tx = 1.0 - z_hx;
  const double x_b_hx = std::clamp(raw_record[ch::hx_frac_reboiler], 0.0, 1.0);
  const double x_b_tx = 1.0 - x_b_hx;
  const double mw_z = z_hx * sys.molar_mass_heavy + z_tx * sys.molar_mass_light;
  const double f_molar = raw_record[ch::mass_flow_feed_kg_h] / mw_z;

  // Quasi-steady flow reconstruction used throughout the toolkit.
  const double denom = xd_tx - x_b_tx;
  double dist = std::abs(denom) < 1e-9
                    ? 0.5 * f_molar
                    : std::clamp(f_molar * (z_tx - x_b_tx) / denom, 0.0, f_molar);
  const double l_rect = reflux * dist;
  const double v_rect = (reflux + 1.0) * dist;
  const double l_strip = l_rect + f_molar;
  const double v_strip = v_rect;
  const double bott = f_molar - dist;

  sim::StepInputs in;
  in.p_condenser_kpa = raw_record[ch::condenser_pressure_kpa];
  in.p_main_kpa = raw_record[ch::pressure_main_kpa];
  in.p_bottom_kpa = raw_record[ch::pressure_bottom_kpa];

  // Total condenser: the vapor off tray 1 is the distillate composition.
  double y_l = xd_tx;
  for (int tray = 1; tray <= col.n_trays + 1; ++tray) {
    if (y_l < 0.0 || y_l > 1.0) {
      profile.truncated = true;
      break;
    }
    const double p =
        tray <= col.n_trays ? sim::tray_pressure(col, in, tray) : in.p_bottom_kpa;
    const double x_hx = equilibrium_x_from_y(y_l, p, sys);
    const double t = thermo::bubble_point_t(x_hx, p, sys);
    profile.tray.push_back(tray);
    profile.temp_c.push_back(t - 273.15);
    profile.x_heavy.push_back(x_hx);
    if (tray > col.n_trays) break;

    const double x_tx = 1.0 - x_hx;
    if (tray < col.feed_tray) {
      if (v_rect <= 0.0) {
        profile.truncated = true;
        break;
      }
      y_l = reflux / (reflux + 1.0) * x_tx + xd_tx / (reflux + 1.0);
    } else {
      if (v_strip <= 0.0) {
        profile.truncated = true;
        break;
      }
      y_l = (l_strip * x_tx - bott * x_b_tx) / v_strip;
    }
  }
  return profile;
}

void write_profile_csv(const std::string& path, const TrayProfile& profile) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(ErrorCategory::other, "cannot write " + path);
  std::fprintf(f, "tray,temp_c,x_heavy,is_feed_tray,is_reboiler\n");
  for (std::size_t i = 0; i < profile.tray.size(); ++i) {
    std::fprintf(f, "%d,%.17g,%.17g,%d,%d\n", profile.tray[i],
                 profile.temp_c[i], profile.x_heavy[i],
                 profile.tray[i] == profile.feed_tray ? 1 : 0,
                 profile.tray[i] > profile.n_trays ? 1 : 0);
  }
  std::fclose(f);
}

std::vector<FeatureImportance> permutation_importance(
    const nn::NetworkParams& params, const data::NormStats& stats,
    const data::Dataset& ds, std::size_t row_begin, std::size_t row_end,
    std::uint64_t seed, int n_shuffles) {
  const Eigen::Index n = static_cast<Eigen::Index>(row_end - row_begin);
  if (n <= 1) throw std::invalid_argument("permutation_importance: too few rows");
  const Eigen::MatrixXd norm = data::apply_norm(ds.features(), stats);
  const Eigen::MatrixXd block =
      norm.middleRows(static_cast<Eigen::Index>(row_begin), n);
  const Eigen::MatrixXd truth =
      (ds.has_clean_targets() ? ds.clean_targets() : ds.targets())
          .middleRows(static_cast<Eigen::Index>(row_begin), n);

  auto rmse_of = [&truth](const Eigen::MatrixXd& out) {
    double acc = (out.leftCols(2) - truth).squaredNorm() /
                 static_cast<double>(2 * truth.rows());
    return std::sqrt(acc);
  };

  nn::ForwardCache cache;
  nn::forward_batch(params, block, cache);
  const double base = rmse_of(cache.out);

  Rng rng = Rng::substream(seed, "permutation");
  std::vector<FeatureImportance> out;
  for (std::size_t j = 0; j < feat::count; ++j) {
    double acc = 0.0;
    for (int s = 0; s < n_shuffles; ++s) {
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      Eigen::MatrixXd shuffled = block;
      for (Eigen::Index i = 0; i < n; ++i)
        shuffled(i, static_cast<Eigen::Index>(j)) =
            block(perm[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(j));
      nn::forward_batch(params, shuffled, cache);
      acc += rmse_of(cache.out) - base;
    }
    FeatureImportance fi;
    fi.feature = j < ch::count ? kChannelNames[j] : "normalized_time";
    fi.importance = acc / n_shuffles;
    out.push_back(fi);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) {
                     return a.importance > b.importance;
                   });
  return out;
}

void write_importance_csv(const std::string& path,
                          const std::vector<FeatureImportance>& imp) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(ErrorCategory::other, "cannot write " + path);
  std::fprintf(f, "feature,importance\n");
  for (const FeatureImportance& fi : imp)
    std::fprintf(f, "%s,%.17g\n", fi.feature.c_str(), fi.importance);
  std::fclose(f);
}

EvalReport evaluate(const phys::PhysicsContext& ctx,
                    const nn::NetworkParams& params, const data::Dataset& ds,
                    double physics_threshold, const std::string& mode,
                    std::uint64_t seed, double train_fraction) {
  const data::SplitSizes split = ds.split();
  const std::size_t test_begin = split.train + split.val;
  const std::size_t test_end = ds.size();
  const Eigen::Index n = static_cast<Eigen::Index>(test_end - test_begin);

  const Eigen::MatrixXd norm = data::apply_norm(ds.features(), ctx.stats);
  nn::ForwardCache cache;
  nn::forward_batch(params,
                    norm.middleRows(static_cast<Eigen::Index>(test_begin), n),
                    cache);
  const Eigen::MatrixXd truth =
      (ds.has_clean_targets() ? ds.clean_targets() : ds.targets())
          .middleRows(static_cast<Eigen::Index>(test_begin), n);
  Metrics m = compute_metrics(cache.out.leftCols(2), truth);
  PhysicsConsistency pc = physics_consistency(ctx, params, ds, test_begin,
                                              test_end, physics_threshold);

  EvalReport report;
  report.residual_hx.resize(static_cast<std::size_t>(n));
  report.residual_tx.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    report.residual_hx[static_cast<std::size_t>(i)] = cache.out(i, 0) - truth(i, 0);
    report.residual_tx[static_cast<std::size_t>(i)] = cache.out(i, 1) - truth(i, 1);
  }

  json j;
  j["n_test"] = static_cast<std::size_t>(n);
  j["targets"] = ds.has_clean_targets() ? "clean" : "noisy";
  j["mode"] = mode;
  j["seed"] = seed;
  j["train_fraction"] = train_fraction;
  j["metrics"] = json{{"x_hx", metrics_json(m.x_hx)},
                      {"x_tx", metrics_json(m.x_tx)},
                      {"averaged", metrics_json(m.averaged)}};
  j["physics"] = json{{"mean_vle_residual", pc.mean_vle_residual},
                      {"threshold", pc.threshold},
                      {"pass", pc.pass}};
  report.json = j.dump(2) + "\n";
  return report;
}

void write_residuals_csv(const std::string& path,
                         const std::vector<double>& time_s,
                         const std::vector<double>& residual_hx,
                         const std::vector<double>& residual_tx) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(ErrorCategory::other, "cannot write " + path);
  std::fprintf(f, "time_s,residual_x_hx,residual_x_tx\n");
  for (std::size_t i = 0; i < residual_hx.size(); ++i)
    std::fprintf(f, "%.17g,%.17g,%.17g\n",
                 i < time_s.size() ? time_s[i] : static_cast<double>(i),
                 residual_hx[i], residual_tx[i]);
  std::fclose(f);
}

std::string comparison_report_json(const std::string& report_a_json,
                                   const std::string& report_b_json) {
  json a, b;
  try {
    a = json::parse(report_a_json);
    b = json::parse(report_b_json);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::other,
                std::string("comparison: invalid report JSON: ") + e.what());
  }
  json out;
  out["a"] = a;
  out["b"] = b;
  auto rel = [](double va, double vb) {
    return va != 0.0 ? (vb - va) / va : 0.0;
  };
  json relc;
  for (const char* target : {"x_hx", "x_tx", "averaged"}) {
    TargetMetrics ma = metrics_from_json(a.at("metrics").at(target));
    TargetMetrics mb = metrics_from_json(b.at("metrics").at(target));
    relc[target] = json{{"rmse", rel(ma.rmse, mb.rmse)},
                        {"mse", rel(ma.mse, mb.mse)},
                        {"mae", rel(ma.mae, mb.mae)},
                        {"r2", rel(ma.r2, mb.r2)}};
  }
  out["relative_change"] = relc;
  const double rmse_a = a.at("metrics").at("x_hx").at("rmse").get<double>();
  const double rmse_b = b.at("metrics").at("x_hx").at("rmse").get<double>();
  out["rmse_ratio_x_hx"] = rmse_a != 0.0 ? rmse_b / rmse_a : 0.0;
  out["physics"] = json{
      {"a_pass", a.at("physics").at("pass").get<bool>()},
      {"b_pass", b.at("physics").at("pass").get<bool>()},
      {"vle_residual_ratio",
       b.at("physics").at("mean_vle_residual").get<double>() != 0.0
           ? a.at("physics").at("mean_vle_residual").get<double>() /
                 b.at("physics").at("mean_vle_residual").get<double>()
           : 0.0}};
  return out.dump(2) + "\n";
}

void write_residual_histogram_csv(const std::string& path,
                                  const std::vector<double>& residuals_a,
                                  const std::vector<double>& residuals_b,
                                  int bins) {
  double lo = 0.0, hi = 0.0;
  for (double v : residuals_a) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : residuals_b) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1e-12;
  const double width = (hi - lo) / bins;
  std::vector<long> ca(static_cast<std::size_t>(bins), 0),
      cb(static_cast<std::size_t>(bins), 0);
  auto bin_of = [&](double v) {
    int b = static_cast<int>((v - lo) / width);
    return std::clamp(b, 0, bins - 1);
  };
  for (double v : residuals_a) ca[static_cast<std::size_t>(bin_of(v))]++;
  for (double v : residuals_b) cb[static_cast<std::size_t>(bin_of(v))]++;

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(ErrorCategory::other, "cannot write " + path);
  std::fprintf(f, "bin_lo,bin_hi,count_a,count_b\n");
  for (int b = 0; b < bins; ++b)
    std::fprintf(f, "%.17g,%.17g,%ld,%ld\n", lo + b * width,
                 lo + (b + 1) * width, ca[static_cast<std::size_t>(b)],
                 cb[static_cast<std::size_t>(b)]);
  std::fclose(f);
}

}  // namespace coltwin::evaluation
