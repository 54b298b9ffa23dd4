// coltwin: transient binary-distillation dataset generation, PINN training,
// and evaluation from one shared configuration file.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coltwin/column_sim.hpp"
#include "coltwin/config.hpp"
#include "coltwin/dataset.hpp"
#include "coltwin/errors.hpp"
#include "coltwin/evaluation.hpp"
#include "coltwin/network.hpp"
#include "coltwin/physics_loss.hpp"
#include "coltwin/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_file(const std::string& path) {
  if (!fs::exists(path))
    throw coltwin::MissingFileError("input does not exist: " + path);
}

std::string clean_sidecar_path(const std::string& dataset_path) {
  fs::path p(dataset_path);
  fs::path sidecar = p.parent_path() / (p.stem().string() + "_clean.csv");
  return sidecar.string();
}

std::optional<std::string> find_sidecar(const std::string& dataset_path) {
  std::string sidecar = clean_sidecar_path(dataset_path);
  if (fs::exists(sidecar)) return sidecar;
  return std::nullopt;
}

json invocation(const std::string& command, const json& args) {
  json j;
  j["command"] = command;
  j["args"] = args;
  return j;
}

coltwin::data::Dataset load_dataset(const std::string& path) {
  require_file(path);
  return coltwin::data::Dataset::load_csv(path, find_sidecar(path));
}

coltwin::phys::PhysicsContext context_from_checkpoint(
    const coltwin::training::Checkpoint& ckpt, coltwin::RunConfig& cfg_storage) {
  cfg_storage = coltwin::parse_config(ckpt.resolved_config_json);
  coltwin::phys::PhysicsContext ctx;
  ctx.sys = &cfg_storage.system;
  ctx.column = &cfg_storage.column;
  ctx.stats = ckpt.stats;
  return ctx;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
  coltwin::RunConfig cfg = coltwin::load_config(config_path);
  if (seed) cfg.seed = *seed;
  fs::create_directories(out_dir);
  auto records = coltwin::sim::generate_dataset(cfg, cfg.seed);
  const std::string csv = (fs::path(out_dir) / "dataset.csv").string();
  coltwin::sim::write_dataset_csv(csv, records);
  coltwin::sim::write_clean_targets_csv(
      (fs::path(out_dir) / "dataset_clean.csv").string(), records);
  coltwin::write_resolved_config(
      cfg, (fs::path(out_dir) / "resolved_config.json").string(),
      invocation("generate", json{{"out", out_dir}, {"seed", cfg.seed}}).dump());
  std::printf("wrote %zu records to %s\n", records.size(), csv.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, std::optional<std::string> mode,
              std::optional<double> train_fraction,
              std::optional<std::string> resume_path,
              std::optional<std::uint64_t> seed) {
  coltwin::RunConfig cfg = coltwin::load_config(config_path);
  if (seed) cfg.seed = *seed;
  std::string run_mode = mode.value_or(cfg.training.mode);
  double fraction = train_fraction.value_or(cfg.training.train_fraction);

  coltwin::data::Dataset ds = load_dataset(data_path);

  std::optional<coltwin::training::TrainingSnapshot> snapshot;
  if (resume_path) {
    require_file(*resume_path);
    coltwin::training::Checkpoint prev =
        coltwin::training::load_checkpoint(*resume_path);
    if (!prev.training)
      throw coltwin::CheckpointError(
          "checkpoint has no training state to resume from");
    // The target epoch count comes from --config; the run identity (mode,
    // fraction, seed) stays with the checkpoint.
    run_mode = prev.mode;
    fraction = prev.train_fraction;
    coltwin::RunConfig prev_cfg = coltwin::parse_config(prev.resolved_config_json);
    cfg.seed = prev_cfg.seed;
    snapshot = std::move(prev.training);
  }

  fs::create_directories(out_dir);
  coltwin::training::TrainResult result = coltwin::training::train(
      ds, cfg, run_mode, fraction, snapshot ? &*snapshot : nullptr);

  coltwin::training::Checkpoint ckpt;
  ckpt.seed = cfg.seed;
  ckpt.mode = run_mode;
  ckpt.train_fraction = fraction;
  ckpt.resolved_config_json = coltwin::serialize_config(cfg);
  ckpt.stats = result.stats;
  ckpt.params = result.best_params;
  ckpt.training = result.snapshot;
  const std::string ckpt_path = (fs::path(out_dir) / "checkpoint.bin").string();
  coltwin::training::save_checkpoint(ckpt_path, ckpt);
  coltwin::training::write_history_csv(
      (fs::path(out_dir) / "history.csv").string(), result.history);
  coltwin::write_resolved_config(
      cfg, (fs::path(out_dir) / "resolved_config.json").string(),
      invocation("train", json{{"data", data_path},
                               {"out", out_dir},
                               {"mode", run_mode},
                               {"train_fraction", fraction},
                               {"seed", cfg.seed}})
          .dump());
  std::printf("trained %zu epochs (best epoch %ld, val %.6g); checkpoint %s\n",
              result.history.size(), result.best_epoch, result.best_val,
              ckpt_path.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& out_dir) {
  require_file(ckpt_path);
  coltwin::training::Checkpoint ckpt =
      coltwin::training::load_checkpoint(ckpt_path);
  coltwin::data::Dataset ds = load_dataset(data_path);
  coltwin::RunConfig cfg;
  coltwin::phys::PhysicsContext ctx = context_from_checkpoint(ckpt, cfg);

  coltwin::evaluation::EvalReport report = coltwin::evaluation::evaluate(
      ctx, ckpt.params, ds, cfg.evaluation.physics_pass_threshold, ckpt.mode,
      ckpt.seed, ckpt.train_fraction);

  fs::create_directories(out_dir);
  {
    std::ofstream out((fs::path(out_dir) / "metrics.json").string());
    out << report.json;
  }
  const coltwin::data::SplitSizes split = ds.split();
  std::vector<double> test_time(ds.time_s().begin() +
                                    static_cast<long>(split.train + split.val),
                                ds.time_s().end());
  coltwin::evaluation::write_residuals_csv(
      (fs::path(out_dir) / "residuals.csv").string(), test_time,
      report.residual_hx, report.residual_tx);
  coltwin::write_resolved_config(
      cfg, (fs::path(out_dir) / "resolved_config.json").string(),
      invocation("eval", json{{"checkpoint", ckpt_path}, {"data", data_path}})
          .dump());
  std::printf("%s", report.json.c_str());
  return 0;
}

int cmd_compare(const std::string& a_dir, const std::string& b_dir,
                const std::string& out_dir) {
  auto read_report = [](const std::string& dir) {
    std::string path = (fs::path(dir) / "metrics.json").string();
    require_file(path);
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  auto read_residuals = [](const std::string& dir) {
    std::string path = (fs::path(dir) / "residuals.csv").string();
    require_file(path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> out;
    while (std::getline(in, line)) {
      auto c1 = line.find(',');
      auto c2 = line.find(',', c1 + 1);
      out.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    return out;
  };
  std::string report_a = read_report(a_dir);
  std::string report_b = read_report(b_dir);
  std::string comparison =
      coltwin::evaluation::comparison_report_json(report_a, report_b);
  fs::create_directories(out_dir);
  {
    std::ofstream out((fs::path(out_dir) / "comparison.json").string());
    out << comparison;
  }
  coltwin::evaluation::write_residual_histogram_csv(
      (fs::path(out_dir) / "residual_histograms.csv").string(),
      read_residuals(a_dir), read_residuals(b_dir), 40);
  std::printf("%s", comparison.c_str());
  return 0;
}

int cmd_profiles(const std::string& ckpt_path, const std::string& data_path,
                 double time_s, const std::string& out_dir) {
  require_file(ckpt_path);
  coltwin::training::Checkpoint ckpt =
      coltwin::training::load_checkpoint(ckpt_path);
  coltwin::data::Dataset ds = load_dataset(data_path);
  coltwin::RunConfig cfg;
  coltwin::phys::PhysicsContext ctx = context_from_checkpoint(ckpt, cfg);

  // Nearest record to the requested time.
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double gap = std::abs(ds.time_s()[i] - time_s);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  Eigen::MatrixXd norm = coltwin::data::apply_norm(ds.features(), ctx.stats);
  coltwin::nn::ModelOutput out = coltwin::nn::forward(
      ckpt.params, norm.row(static_cast<Eigen::Index>(best)));
  coltwin::evaluation::TrayProfile profile =
      coltwin::evaluation::reconstruct_profile(
          ctx, ds.features().row(static_cast<Eigen::Index>(best)), out);

  fs::create_directories(out_dir);
  coltwin::evaluation::write_profile_csv(
      (fs::path(out_dir) / "profile.csv").string(), profile);
  coltwin::write_resolved_config(
      cfg, (fs::path(out_dir) / "resolved_config.json").string(),
      invocation("profiles", json{{"checkpoint", ckpt_path},
                                  {"data", data_path},
                                  {"time", time_s},
                                  {"record_time", ds.time_s()[best]}})
          .dump());
  std::printf("profile at t = %.0f s (record %zu)%s written\n",
              ds.time_s()[best], best,
              profile.truncated ? " [truncated: stepping left [0,1]]" : "");
  return 0;
}

int cmd_importance(const std::string& ckpt_path, const std::string& data_path,
                   const std::string& out_dir) {
  require_file(ckpt_path);
  coltwin::training::Checkpoint ckpt =
      coltwin::training::load_checkpoint(ckpt_path);
  coltwin::data::Dataset ds = load_dataset(data_path);
  coltwin::RunConfig cfg;
  coltwin::phys::PhysicsContext ctx = context_from_checkpoint(ckpt, cfg);
  (void)ctx;

  const coltwin::data::SplitSizes split = ds.split();
  auto imp = coltwin::evaluation::permutation_importance(
      ckpt.params, ckpt.stats, ds, split.train + split.val, ds.size(),
      ckpt.seed, cfg.evaluation.importance_shuffles);
  fs::create_directories(out_dir);
  coltwin::evaluation::write_importance_csv(
      (fs::path(out_dir) / "importance.csv").string(), imp);
  coltwin::write_resolved_config(
      cfg, (fs::path(out_dir) / "resolved_config.json").string(),
      invocation("importance",
                 json{{"checkpoint", ckpt_path}, {"data", data_path}})
          .dump());
  for (const auto& fi : imp)
    std::printf("%-28s %.6g\n", fi.feature.c_str(), fi.importance);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "coltwin: physics-informed distillation soft-sensor toolkit (simulate, "
      "train, evaluate)"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir, ckpt_path, a_dir, b_dir;
  std::string mode_flag;
  double fraction_flag = -1.0, time_flag = 0.0;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  std::string resume_flag;

  auto* generate = app.add_subcommand("generate", "simulate and emit the dataset CSV");
  generate->add_option("--config", config_path, "config file")->required();
  generate->add_option("--out", out_dir, "output directory")->required();
  generate->add_option("--seed", seed_flag, "override config seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* train = app.add_subcommand("train", "train the PINN or the data-only baseline");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--data", data_path, "dataset CSV")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--mode", mode_flag, "pinn | baseline_mlp");
  train->add_option("--train-fraction", fraction_flag,
                    "truncate the training split (low-data runs)");
  train->add_option("--resume", resume_flag, "checkpoint to resume from");
  train->add_option("--seed", seed_flag, "override config seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* eval_cmd = app.add_subcommand("eval", "metrics + physics consistency JSON");
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "dataset CSV")->required();
  eval_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* compare = app.add_subcommand("compare", "side-by-side report of two eval runs");
  compare->add_option("--a", a_dir, "first eval output directory")->required();
  compare->add_option("--b", b_dir, "second eval output directory")->required();
  compare->add_option("--out", out_dir, "output directory")->required();

  auto* profiles = app.add_subcommand("profiles", "tray profile CSV at a given time");
  profiles->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  profiles->add_option("--data", data_path, "dataset CSV")->required();
  profiles->add_option("--time", time_flag, "simulation time in seconds")->required();
  profiles->add_option("--out", out_dir, "output directory")->required();

  auto* importance = app.add_subcommand("importance", "permutation feature importance CSV");
  importance->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  importance->add_option("--data", data_path, "dataset CSV")->required();
  importance->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<std::uint64_t> seed =
        seed_set ? std::optional<std::uint64_t>(seed_flag) : std::nullopt;
    if (generate->parsed()) return cmd_generate(config_path, out_dir, seed);
    if (train->parsed()) {
      std::optional<std::string> mode =
          mode_flag.empty() ? std::nullopt : std::optional<std::string>(mode_flag);
      std::optional<double> fraction =
          fraction_flag > 0.0 ? std::optional<double>(fraction_flag) : std::nullopt;
      std::optional<std::string> resume =
          resume_flag.empty() ? std::nullopt : std::optional<std::string>(resume_flag);
      return cmd_train(config_path, data_path, out_dir, mode, fraction, resume,
                       seed);
    }
    if (eval_cmd->parsed()) return cmd_eval(ckpt_path, data_path, out_dir);
    if (compare->parsed()) return cmd_compare(a_dir, b_dir, out_dir);
    if (profiles->parsed())
      return cmd_profiles(ckpt_path, data_path, time_flag, out_dir);
    if (importance->parsed()) return cmd_importance(ckpt_path, data_path, out_dir);
  } catch (const coltwin::Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", e.category_name(), e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
