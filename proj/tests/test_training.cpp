#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "coltwin/column_sim.hpp"
#include "coltwin/training.hpp"
#include "test_util.hpp"

using namespace coltwin;
using namespace coltwin::training;

namespace {

// Small, fast configuration and dataset shared across the cases.
RunConfig small_cfg() {
  RunConfig cfg = testutil::default_config();
  testutil::shorten(cfg, 3000.0);  // 101 records
  cfg.training.epochs = 6;
  cfg.training.collocation_points = 64;
  cfg.training.pair_batch = 8;
  return cfg;
}

const data::Dataset& ds() {
  static data::Dataset d =
      data::Dataset::from_records(sim::generate_dataset(small_cfg(), 19));
  return d;
}

std::string params_bytes(const nn::NetworkParams& p) {
  std::string out;
  for (std::size_t i = 0; i < p.count(); ++i) {
    double v = p.get_flat(i);
    out.append(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  return out;
}

std::filesystem::path tmp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "coltwin_training_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("learning-rate schedule follows the halving rule with a floor") {
  TrainingConfig tc = small_cfg().training;
  CHECK(lr_at(0, tc) == 1e-3);
  CHECK(lr_at(199, tc) == 1e-3);
  CHECK(lr_at(200, tc) == 5e-4);
  CHECK(lr_at(400, tc) == 2.5e-4);
  CHECK(lr_at(1800, tc) == 5e-6);  // 1e-3 * 0.5^9 < floor
  CHECK_THROWS_AS(lr_at(-1, tc), std::domain_error);
}

TEST_CASE("two runs with the same seed produce identical parameters") {
  RunConfig cfg = small_cfg();
  TrainResult a = train(ds(), cfg, "pinn", 1.0);
  TrainResult b = train(ds(), cfg, "pinn", 1.0);
  CHECK(params_bytes(a.best_params) == params_bytes(b.best_params));
  CHECK(params_bytes(a.snapshot.params) == params_bytes(b.snapshot.params));
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i].terms.total() == b.history[i].terms.total());

  RunConfig other = cfg;
  other.seed = 77;
  TrainResult c = train(ds(), other, "pinn", 1.0);
  CHECK(params_bytes(a.snapshot.params) != params_bytes(c.snapshot.params));
}

TEST_CASE("baseline mode pins the weights and skips the physics terms") {
  TrainResult r = train(ds(), small_cfg(), "baseline_mlp", 1.0);
  for (const EpochStats& e : r.history) {
    CHECK(e.terms.weights.lambda_d == 1.0);
    CHECK(e.terms.weights.lambda_p == 0.0);
    CHECK(e.terms.weights.lambda_b == 0.0);
    CHECK(e.terms.l_vle == 0.0);
    CHECK(e.terms.l_mass == 0.0);
    CHECK(e.terms.l_energy == 0.0);
    CHECK(e.terms.l_mccabe == 0.0);
    CHECK(e.terms.l_bc == 0.0);
    double total = e.terms.weights.lambda_d * e.terms.l_data + e.terms.l_reg;
    CHECK(testutil::rel_err(e.terms.total(), total, 1e-30) < 1e-15);
  }
}

TEST_CASE("pinn history carries the schedule and the loss decomposition") {
  TrainResult r = train(ds(), small_cfg(), "pinn", 1.0);
  REQUIRE(r.history.size() == 6);
  for (std::size_t k = 0; k < r.history.size(); ++k) {
    const EpochStats& e = r.history[k];
    phys::LossWeights w = phys::schedule(static_cast<int>(k));
    CHECK(e.terms.weights.lambda_d == w.lambda_d);
    double total = w.lambda_d * e.terms.l_data +
                   w.lambda_p * (e.terms.l_vle + e.terms.l_mass +
                                 e.terms.l_energy + e.terms.l_mccabe) +
                   w.lambda_b * e.terms.l_bc + e.terms.l_reg;
    CHECK(testutil::rel_err(e.terms.total(), total, 1e-30) < 1e-15);
    CHECK(e.terms.l_vle > 0.0);
    CHECK(e.terms.l_bc >= 0.0);
    CHECK(e.lr == lr_at(static_cast<int>(k), small_cfg().training));
  }
}

TEST_CASE("no validation or test row ever contributes a gradient") {
  TrainResult r = train(ds(), small_cfg(), "pinn", 1.0);
  CHECK(r.max_gradient_row < ds().split().train);
}

TEST_CASE("train_fraction truncates the training split only") {
  TrainResult r = train(ds(), small_cfg(), "pinn", 0.3);
  std::size_t truncated =
      static_cast<std::size_t>(0.3 * static_cast<double>(ds().split().train));
  CHECK(r.max_gradient_row < truncated);
  TrainResult full = train(ds(), small_cfg(), "pinn", 1.0);
  CHECK(full.history.size() == r.history.size());
}

TEST_CASE("checkpoint save/load round-trips every field") {
  RunConfig cfg = small_cfg();
  TrainResult r = train(ds(), cfg, "pinn", 1.0);
  Checkpoint c;
  c.seed = cfg.seed;
  c.mode = "pinn";
  c.train_fraction = 1.0;
  c.resolved_config_json = serialize_config(cfg);
  c.stats = r.stats;
  c.params = r.best_params;
  c.training = r.snapshot;

  auto path = (tmp_dir() / "ckpt.bin").string();
  save_checkpoint(path, c);
  Checkpoint back = load_checkpoint(path);
  CHECK(back.seed == c.seed);
  CHECK(back.mode == c.mode);
  CHECK(back.resolved_config_json == c.resolved_config_json);
  CHECK(params_bytes(back.params) == params_bytes(c.params));
  CHECK(back.stats.checksum() == c.stats.checksum());
  REQUIRE(back.training.has_value());
  CHECK(back.training->epochs_completed == r.snapshot.epochs_completed);
  CHECK(back.training->shuffle_state == r.snapshot.shuffle_state);
  CHECK(params_bytes(back.training->adam.m) == params_bytes(r.snapshot.adam.m));
  CHECK(back.training->history.size() == r.snapshot.history.size());
}

TEST_CASE("corrupt and mismatched checkpoints raise explicit errors") {
  RunConfig cfg = small_cfg();
  TrainResult r = train(ds(), cfg, "baseline_mlp", 1.0);
  Checkpoint c;
  c.seed = cfg.seed;
  c.mode = "baseline_mlp";
  c.resolved_config_json = serialize_config(cfg);
  c.stats = r.stats;
  c.params = r.best_params;
  auto path = (tmp_dir() / "mangle.bin").string();
  save_checkpoint(path, c);

  SUBCASE("flipped payload byte fails the integrity check") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(200);
    char b;
    f.get(b);
    b = static_cast<char>(b ^ 0x5a);
    f.seekp(200);
    f.put(b);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("unsupported version is rejected") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    std::uint32_t v = 99;
    f.seekp(4);
    f.write(reinterpret_cast<const char*>(&v), 4);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("not a checkpoint at all") {
    std::ofstream f(path, std::ios::binary);
    f << "definitely not binary";
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), MissingFileError);
  }
}

TEST_CASE("resume reproduces the uninterrupted run exactly") {
  RunConfig cfg = small_cfg();
  cfg.training.epochs = 8;
  TrainResult full = train(ds(), cfg, "pinn", 1.0);

  RunConfig half = cfg;
  half.training.epochs = 4;
  TrainResult first = train(ds(), half, "pinn", 1.0);
  TrainResult resumed = train(ds(), cfg, "pinn", 1.0, &first.snapshot);

  CHECK(params_bytes(resumed.snapshot.params) ==
        params_bytes(full.snapshot.params));
  CHECK(params_bytes(resumed.best_params) == params_bytes(full.best_params));
  REQUIRE(resumed.history.size() == full.history.size());
  for (std::size_t i = 0; i < full.history.size(); ++i) {
    CHECK(resumed.history[i].terms.total() == full.history[i].terms.total());
    CHECK(resumed.history[i].val_loss == full.history[i].val_loss);
  }
  CHECK(resumed.best_epoch == full.best_epoch);
}

TEST_CASE("the baseline objective improves validation quickly") {
  RunConfig cfg = small_cfg();
  cfg.training.epochs = 30;
  TrainResult r = train(ds(), cfg, "baseline_mlp", 1.0);
  CHECK(r.best_val < r.history.front().val_loss);
}

TEST_CASE("divergence and non-finite guards abort the run") {
  RunConfig cfg = small_cfg();
  TrainResult first = train(ds(), cfg, "pinn", 1.0);
  RunConfig more = cfg;
  more.training.epochs = 9;

  SUBCASE("total exceeding 1000x the first-epoch value aborts") {
    TrainingSnapshot snap = first.snapshot;
    for (EpochStats& e : snap.history) {
      e.terms = phys::LossBreakdown{};
      e.terms.weights.lambda_d = 1.0;
      e.terms.l_data = 1e-30;
    }
    CHECK_THROWS_WITH_AS(train(ds(), more, "pinn", 1.0, &snap),
                         doctest::Contains("diverged"), Error);
  }
  SUBCASE("non-finite parameters are reported, not propagated") {
    TrainingSnapshot snap = first.snapshot;
    snap.params.w1(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(train(ds(), more, "pinn", 1.0, &snap), Error);
  }
}

TEST_CASE("history csv has one row per epoch with the documented header") {
  RunConfig cfg = small_cfg();
  TrainResult r = train(ds(), cfg, "baseline_mlp", 1.0);
  auto path = (tmp_dir() / "history.csv").string();
  write_history_csv(path, r.history);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "epoch,l_data,l_vle,l_mass,l_energy,l_mccabe,l_bc,l_reg,lambda_d,"
        "lambda_p,lambda_b,total,val_loss,lr,wall_ms");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == cfg.training.epochs);
}

TEST_CASE("invalid mode and fraction are rejected") {
  CHECK_THROWS_AS(train(ds(), small_cfg(), "lstm", 1.0), ConfigError);
  CHECK_THROWS_AS(train(ds(), small_cfg(), "pinn", 0.0), ConfigError);
  CHECK_THROWS_AS(train(ds(), small_cfg(), "pinn", 1.5), ConfigError);
}
