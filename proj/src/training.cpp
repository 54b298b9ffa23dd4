#include "coltwin/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "coltwin/errors.hpp"
#include "coltwin/rng.hpp"

namespace coltwin::training {

namespace {

struct TermAccum {
  double sum = 0.0;
  double count = 0.0;
  void add(double value, double n) {
    sum += value * n;
    count += n;
  }
  double mean() const { return count > 0.0 ? sum / count : 0.0; }
};

double l2_value(const nn::NetworkParams& p, double l2) {
  double s = p.w1.squaredNorm() + p.w2.squaredNorm() + p.w3.squaredNorm() +
             p.w4.squaredNorm() + p.w5.squaredNorm() + p.s13.squaredNorm() +
             p.s24.squaredNorm();
  return l2 * s;
}

void add_l2_grads(const nn::NetworkParams& p, double l2, nn::Gradients& g) {
  g.w1 += 2.0 * l2 * p.w1;
  g.w2 += 2.0 * l2 * p.w2;
  g.w3 += 2.0 * l2 * p.w3;
  g.w4 += 2.0 * l2 * p.w4;
  g.w5 += 2.0 * l2 * p.w5;
  g.s13 += 2.0 * l2 * p.s13;
  g.s24 += 2.0 * l2 * p.s24;
}

void require_finite(double v, const char* term) {
  if (!std::isfinite(v))
    throw Error(ErrorCategory::other,
                std::string("non-finite loss term: ") + term);
}

}  // namespace

double lr_at(int epoch, const TrainingConfig& cfg) {
  if (epoch < 0) throw std::domain_error("lr_at: epoch must be >= 0");
  double lr = cfg.lr0 * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
  return std::max(lr, cfg.lr_floor);
}

TrainResult train(const data::Dataset& ds, const RunConfig& cfg,
                  const std::string& mode, double train_fraction,
                  const TrainingSnapshot* resume) {
  if (mode != "pinn" && mode != "baseline_mlp")
    throw ConfigError("train: mode must be 'pinn' or 'baseline_mlp'");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw ConfigError("train: train_fraction must lie in (0, 1]");
  const bool pinn = (mode == "pinn");
  const TrainingConfig& tc = cfg.training;

  const data::SplitSizes split = ds.split();
  const std::size_t n_train_full = split.train;
  const std::size_t n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(
             static_cast<double>(n_train_full) * train_fraction)));
  const std::size_t val_begin = n_train_full;

  TrainResult result;
  result.stats = data::fit_norm(ds.features(), 0, n_train);
  const Eigen::MatrixXd norm = data::apply_norm(ds.features(), result.stats);

  phys::PhysicsContext ctx;
  ctx.sys = &cfg.system;
  ctx.column = &cfg.column;
  ctx.stats = result.stats;

  const phys::CollocationSet colloc =
      phys::CollocationSet::sample(tc.collocation_points, cfg.seed);
  const long n_pairs = static_cast<long>(n_train) - 1;

  const long steps_per_epoch =
      (static_cast<long>(n_train) + tc.batch_size - 1) / tc.batch_size;
  const long colloc_chunk =
      tc.collocation_points > 0
          ? (tc.collocation_points + steps_per_epoch - 1) / steps_per_epoch
          : 0;

  // Mutable run state (restored from the snapshot when resuming).
  nn::NetworkParams params;
  nn::AdamState adam = nn::AdamState::init();
  Rng shuffle_rng = Rng::substream(cfg.seed, "shuffle");
  long colloc_cursor = 0, pair_cursor = 0;
  long start_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  long best_epoch = -1;
  nn::NetworkParams best_params;

  if (resume) {
    params = resume->params;
    adam = resume->adam;
    shuffle_rng.set_state(resume->shuffle_state);
    colloc_cursor = resume->colloc_cursor;
    pair_cursor = resume->pair_cursor;
    start_epoch = resume->epochs_completed;
    best_val = resume->best_val;
    best_epoch = resume->best_epoch;
    best_params = resume->best_params;
    result.history = resume->history;
  } else {
    params = nn::init_params(cfg.seed);
    best_params = params;
  }

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  const Eigen::MatrixXd& raw = ds.features();
  const double fs2 = ctx.feed_scale() * ctx.feed_scale();
  const double qs2 = ctx.duty_scale() * ctx.duty_scale();
  const double q_kw = cfg.column.reboiler_duty_kw;

  nn::ForwardCache cache, colloc_cache, pair_cache;
  Eigen::MatrixXd val_x = norm.middleRows(static_cast<Eigen::Index>(val_begin),
                                          static_cast<Eigen::Index>(split.val));
  Eigen::MatrixXd val_y = ds.targets().middleRows(
      static_cast<Eigen::Index>(val_begin), static_cast<Eigen::Index>(split.val));

  for (long epoch = start_epoch; epoch < tc.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    phys::LossWeights w;
    if (pinn) {
      w = phys::schedule(static_cast<int>(epoch));
    } else {
      w.lambda_d = 1.0;
      w.lambda_p = 0.0;
      w.lambda_b = 0.0;
    }
    const double lr = lr_at(static_cast<int>(epoch), tc);

    // Fresh permutation each epoch; starting from identity keeps the order a
    // pure function of the stream state, which resume depends on.
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    TermAccum acc_data, acc_vle, acc_mcc, acc_mass, acc_energy, acc_bc, acc_reg;

    for (long s = 0; s < steps_per_epoch; ++s) {
      const std::size_t lo = static_cast<std::size_t>(s) * tc.batch_size;
      const std::size_t hi = std::min(lo + tc.batch_size, n_train);
      const Eigen::Index nb = static_cast<Eigen::Index>(hi - lo);
      if (nb <= 0) break;

      nn::Gradients grads = nn::NetworkParams::zeros();

      // --- labeled batch: data loss (+ boundary terms in pinn mode) ---
      Eigen::MatrixXd bx(nb, nn::arch::input), by(nb, 2);
      for (Eigen::Index i = 0; i < nb; ++i) {
        std::size_t row = order[lo + static_cast<std::size_t>(i)];
        result.max_gradient_row = std::max(result.max_gradient_row, row);
        bx.row(i) = norm.row(static_cast<Eigen::Index>(row));
        by.row(i) = ds.targets().row(static_cast<Eigen::Index>(row));
      }
      nn::forward_batch(params, bx, cache);
      double l_data = phys::data_loss(cache.out, by);
      require_finite(l_data, "data");
      acc_data.add(l_data, static_cast<double>(nb));

      Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(nb, 4);
      const double inv_nb = 1.0 / static_cast<double>(nb);
      for (Eigen::Index i = 0; i < nb; ++i) {
        d_out(i, 0) += w.lambda_d * (cache.out(i, 0) - by(i, 0)) * inv_nb;
        d_out(i, 1) += w.lambda_d * (cache.out(i, 1) - by(i, 1)) * inv_nb;
      }
      if (pinn) {
        double l_bc = 0.0;
        for (Eigen::Index i = 0; i < nb; ++i) {
          nn::ModelOutput out{cache.out(i, 0), cache.out(i, 1), cache.out(i, 2),
                              cache.out(i, 3)};
          phys::BcTerms bc = phys::bc_point(ctx, out);
          l_bc += bc.bc;
          for (int k = 0; k < 4; ++k)
            d_out(i, k) += w.lambda_b * bc.d_bc[k] * inv_nb;
        }
        l_bc *= inv_nb;
        require_finite(l_bc, "bc");
        acc_bc.add(l_bc, static_cast<double>(nb));
      }
      nn::backward_batch(params, cache, d_out, grads);

      if (pinn && colloc_chunk > 0 && tc.collocation_points > 0) {
        // --- collocation chunk: VLE + McCabe ---
        const long nc = std::min<long>(colloc_chunk, tc.collocation_points);
        Eigen::MatrixXd cx(nc, nn::arch::input);
        for (long i = 0; i < nc; ++i) {
          long idx = (colloc_cursor + i) % tc.collocation_points;
          cx.row(i) = colloc.points.row(idx);
        }
        colloc_cursor = (colloc_cursor + nc) % tc.collocation_points;
        nn::forward_batch(params, cx, colloc_cache);
        Eigen::MatrixXd d_colloc = Eigen::MatrixXd::Zero(nc, 4);
        double l_vle = 0.0, l_mcc = 0.0;
        const double inv_nc = 1.0 / static_cast<double>(nc);
        for (long i = 0; i < nc; ++i) {
          nn::ModelOutput out{colloc_cache.out(i, 0), colloc_cache.out(i, 1),
                              colloc_cache.out(i, 2), colloc_cache.out(i, 3)};
          double rr = phys::denorm_reflux(ctx, cx(i, ch::reflux_ratio));
          double s8 = phys::denorm_s8_hx(ctx, cx(i, ch::hx_frac_top_outlet));
          phys::PointTerms t = phys::vle_mccabe_point(ctx, rr, s8, out);
          l_vle += t.vle;
          l_mcc += t.mccabe;
          for (int k = 0; k < 4; ++k)
            d_colloc(i, k) +=
                w.lambda_p * (t.d_vle[k] + t.d_mccabe[k]) * inv_nc;
        }
        l_vle *= inv_nc;
        l_mcc *= inv_nc;
        require_finite(l_vle, "vle");
        require_finite(l_mcc, "mccabe");
        acc_vle.add(l_vle, static_cast<double>(nc));
        acc_mcc.add(l_mcc, static_cast<double>(nc));
        nn::backward_batch(params, colloc_cache, d_colloc, grads);
      }

      if (pinn && n_pairs > 0) {
        // --- consecutive-record pairs: mass and energy balances ---
        const long np = std::min<long>(tc.pair_batch, n_pairs);
        Eigen::MatrixXd px(2 * np, nn::arch::input);
        std::vector<std::size_t> pair_rows(static_cast<std::size_t>(np));
        for (long i = 0; i < np; ++i) {
          std::size_t row =
              static_cast<std::size_t>((pair_cursor + i) % n_pairs);
          pair_rows[static_cast<std::size_t>(i)] = row;
          result.max_gradient_row = std::max(result.max_gradient_row, row + 1);
          px.row(2 * i) = norm.row(static_cast<Eigen::Index>(row));
          px.row(2 * i + 1) = norm.row(static_cast<Eigen::Index>(row + 1));
        }
        pair_cursor = (pair_cursor + np) % n_pairs;
        nn::forward_batch(params, px, pair_cache);
        Eigen::MatrixXd d_pair = Eigen::MatrixXd::Zero(2 * np, 4);
        double l_mass = 0.0, l_energy = 0.0;
        const double inv_np = 1.0 / static_cast<double>(np);
        for (long i = 0; i < np; ++i) {
          std::size_t row = pair_rows[static_cast<std::size_t>(i)];
          nn::ModelOutput oa{pair_cache.out(2 * i, 0), pair_cache.out(2 * i, 1),
                             pair_cache.out(2 * i, 2), pair_cache.out(2 * i, 3)};
          nn::ModelOutput ob{pair_cache.out(2 * i + 1, 0),
                             pair_cache.out(2 * i + 1, 1),
                             pair_cache.out(2 * i + 1, 2),
                             pair_cache.out(2 * i + 1, 3)};
          double dt_h = (ds.time_s()[row + 1] - ds.time_s()[row]) / 3600.0;
          phys::PairTerms t = phys::balance_pair(
              ctx, raw.row(static_cast<Eigen::Index>(row)),
              raw.row(static_cast<Eigen::Index>(row + 1)), dt_h, oa, ob, q_kw);
          l_mass += t.mass / fs2;
          l_energy += t.energy / qs2;
          d_pair(2 * i, 0) += w.lambda_p * t.d_mass_xhx[0] / fs2 * inv_np;
          d_pair(2 * i + 1, 0) += w.lambda_p * t.d_mass_xhx[1] / fs2 * inv_np;
          d_pair(2 * i, 1) += w.lambda_p * t.d_energy_xtx[0] / qs2 * inv_np;
          d_pair(2 * i + 1, 1) += w.lambda_p * t.d_energy_xtx[1] / qs2 * inv_np;
        }
        l_mass *= inv_np;
        l_energy *= inv_np;
        require_finite(l_mass, "mass");
        require_finite(l_energy, "energy");
        acc_mass.add(l_mass, static_cast<double>(np));
        acc_energy.add(l_energy, static_cast<double>(np));
        nn::backward_batch(params, pair_cache, d_pair, grads);
      }

      const double l_reg = l2_value(params, tc.l2);
      require_finite(l_reg, "l2");
      acc_reg.add(l_reg, 1.0);
      add_l2_grads(params, tc.l2, grads);

      if (!grads.all_finite())
        throw Error(ErrorCategory::other, "non-finite gradient");
      nn::adam_step(params, grads, adam, lr);
    }

    EpochStats stats;
    stats.terms.l_data = acc_data.mean();
    stats.terms.l_vle = acc_vle.mean();
    stats.terms.l_mccabe = acc_mcc.mean();
    stats.terms.l_mass = acc_mass.mean();
    stats.terms.l_energy = acc_energy.mean();
    stats.terms.l_bc = acc_bc.mean();
    stats.terms.l_reg = acc_reg.mean();
    stats.terms.weights = w;
    stats.lr = lr;

    nn::ForwardCache val_cache;
    nn::forward_batch(params, val_x, val_cache);
    stats.val_loss = phys::data_loss(val_cache.out, val_y);
    require_finite(stats.val_loss, "validation");

    auto t1 = std::chrono::steady_clock::now();
    stats.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    result.history.push_back(stats);

    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      best_epoch = epoch;
      best_params = params;
    }

    const double first_total = result.history.front().terms.total();
    if (stats.terms.total() > 1e3 * first_total && epoch > start_epoch)
      throw Error(ErrorCategory::other,
                  "training diverged: total loss exceeded 1000x its first-epoch value");
  }

  result.best_params = best_params;
  result.best_epoch = best_epoch;
  result.best_val = best_val;

  result.snapshot.epochs_completed = tc.epochs;
  result.snapshot.params = params;
  result.snapshot.adam = adam;
  result.snapshot.shuffle_state = shuffle_rng.state();
  result.snapshot.colloc_cursor = colloc_cursor;
  result.snapshot.pair_cursor = pair_cursor;
  result.snapshot.best_val = best_val;
  result.snapshot.best_epoch = best_epoch;
  result.snapshot.best_params = best_params;
  result.snapshot.history = result.history;
  return result;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(ErrorCategory::other, "cannot write " + path);
  std::fprintf(f,
               "epoch,l_data,l_vle,l_mass,l_energy,l_mccabe,l_bc,l_reg,"
               "lambda_d,lambda_p,lambda_b,total,val_loss,lr,wall_ms\n");
  for (std::size_t i = 0; i < history.size(); ++i) {
    const EpochStats& e = history[i];
    std::fprintf(f,
                 "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                 i, e.terms.l_data, e.terms.l_vle, e.terms.l_mass,
                 e.terms.l_energy, e.terms.l_mccabe, e.terms.l_bc,
                 e.terms.l_reg, e.terms.weights.lambda_d,
                 e.terms.weights.lambda_p, e.terms.weights.lambda_b,
                 e.terms.total(), e.val_loss, e.lr, e.wall_ms);
  }
  std::fclose(f);
}

}  // namespace coltwin::training
