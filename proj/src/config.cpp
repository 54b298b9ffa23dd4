#include "coltwin/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coltwin/errors.hpp"

namespace coltwin {

namespace {

using nlohmann::json;

// Typed accessors that reject unknown keys and wrong types with the offending
// path in the message.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError(path_ + ": expected an object");
  }
  ~Section() = default;

  double number(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_number())
      throw ConfigError(path_ + "." + key + ": expected a number");
    return v.get<double>();
  }
  int integer(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_number_integer())
      throw ConfigError(path_ + "." + key + ": expected an integer");
    return v.get<int>();
  }
  std::uint64_t u64(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
      throw ConfigError(path_ + "." + key + ": expected an integer");
    return v.get<std::uint64_t>();
  }
  std::string text(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_string())
      throw ConfigError(path_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }
  const json& raw(const std::string& key) { return fetch(key); }
  bool has(const std::string& key) {
    if (j_.contains(key)) {
      seen_.insert(key);
      return true;
    }
    return false;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key()))
        throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& fetch(const std::string& key) {
    if (!j_.contains(key))
      throw ConfigError(path_ + ": missing key '" + key + "'");
    seen_.insert(key);
    return j_.at(key);
  }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

thermo::AntoineCoeffs parse_antoine(const json& j, const std::string& path) {
  Section s(j, path);
  thermo::AntoineCoeffs c;
  c.a = s.number("a");
  c.b = s.number("b");
  c.c = s.number("c");
  s.finish();
  return c;
}

thermo::BinarySystem parse_system(const json& j) {
  Section s(j, "system");
  thermo::BinarySystem sys;
  sys.name_heavy = s.text("name_heavy");
  sys.name_light = s.text("name_light");
  sys.antoine_heavy = parse_antoine(s.raw("antoine_heavy"), "system.antoine_heavy");
  sys.antoine_light = parse_antoine(s.raw("antoine_light"), "system.antoine_light");
  {
    Section w(s.raw("wilson"), "system.wilson");
    sys.wilson.lambda_12 = w.number("lambda_12");
    sys.wilson.lambda_21 = w.number("lambda_21");
    w.finish();
  }
  sys.cp_liquid_heavy = s.number("cp_liquid_heavy");
  sys.cp_liquid_light = s.number("cp_liquid_light");
  sys.dh_vap_heavy = s.number("dh_vap_heavy");
  sys.dh_vap_light = s.number("dh_vap_light");
  sys.t_ref = s.number("t_ref_k");
  sys.molar_mass_heavy = s.number("molar_mass_heavy");
  sys.molar_mass_light = s.number("molar_mass_light");
  s.finish();
  return sys;
}

ColumnConfig parse_column(const json& j) {
  Section s(j, "column");
  ColumnConfig c;
  c.n_trays = s.integer("n_trays");
  c.feed_tray = s.integer("feed_tray");
  c.feed_flow_kmol_h = s.number("feed_flow_kmol_h");
  c.feed_z_heavy = s.number("feed_z_heavy");
  c.nominal_reflux_ratio = s.number("nominal_reflux_ratio");
  c.pressure_condenser_kpa = s.number("pressure_condenser_kpa");
  c.pressure_main_kpa = s.number("pressure_main_kpa");
  c.pressure_bottom_kpa = s.number("pressure_bottom_kpa");
  c.tray_holdup_kmol = s.number("tray_holdup_kmol");
  c.condenser_holdup_kmol = s.number("condenser_holdup_kmol");
  c.condenser_capacity_kmol = s.number("condenser_capacity_kmol");
  c.reboiler_holdup_kmol = s.number("reboiler_holdup_kmol");
  c.reboiler_capacity_kmol = s.number("reboiler_capacity_kmol");
  c.reboiler_duty_kw = s.number("reboiler_duty_kw");
  c.reboiler_level_gain_per_h = s.number("reboiler_level_gain_per_h");
  c.internal_dt_s = s.number("internal_dt_s");
  s.finish();
  return c;
}

ScheduleEvent::Section parse_section(const std::string& name,
                                     const std::string& path) {
  if (name == "condenser") return ScheduleEvent::Section::condenser;
  if (name == "main") return ScheduleEvent::Section::main;
  if (name == "bottom") return ScheduleEvent::Section::bottom;
  throw ConfigError(path + ": unknown pressure section '" + name + "'");
}

std::vector<ScheduleEvent> parse_schedule(const json& j) {
  if (!j.is_array()) throw ConfigError("schedule: expected an array");
  std::vector<ScheduleEvent> out;
  int i = 0;
  for (const json& item : j) {
    std::string path = "schedule[" + std::to_string(i++) + "]";
    Section s(item, path);
    ScheduleEvent e;
    std::string type = s.text("type");
    if (type == "reflux_ramp") {
      e.kind = ScheduleEvent::Kind::reflux_ramp;
      e.time_s = s.number("start_s");
      e.end_s = s.number("end_s");
      e.from = s.number("from");
      e.to = s.number("to");
    } else if (type == "feed_flow_step") {
      e.kind = ScheduleEvent::Kind::feed_flow_step;
      e.time_s = s.number("time_s");
      e.value = s.number("value_kmol_h");
    } else if (type == "feed_comp_step") {
      e.kind = ScheduleEvent::Kind::feed_comp_step;
      e.time_s = s.number("time_s");
      e.value = s.number("z_heavy");
    } else if (type == "pressure_step") {
      e.kind = ScheduleEvent::Kind::pressure_step;
      e.time_s = s.number("time_s");
      e.value = s.number("value_kpa");
      e.section = parse_section(s.text("section"), path);
    } else {
      throw ConfigError(path + ": unknown event type '" + type + "'");
    }
    s.finish();
    out.push_back(e);
  }
  return out;
}

NoiseConfig parse_noise(const json& j) {
  Section s(j, "noise");
  NoiseConfig n;
  for (std::size_t k = 0; k < ch::count; ++k) {
    if (k == ch::feed_z_hx || k == ch::feed_z_tx) continue;
    n.amp[k] = s.number(kChannelNames[k]);
    if (n.amp[k] < 0.0)
      throw ConfigError(std::string("noise.") + kChannelNames[k] +
                        ": amplitude must be >= 0");
  }
  double z = s.number("feed_z");
  if (z < 0.0) throw ConfigError("noise.feed_z: amplitude must be >= 0");
  n.amp[ch::feed_z_hx] = z;
  n.amp[ch::feed_z_tx] = z;
  n.target_amp = s.number("target_x");
  if (n.target_amp < 0.0)
    throw ConfigError("noise.target_x: amplitude must be >= 0");
  s.finish();
  return n;
}

TrainingConfig parse_training(const json& j) {
  Section s(j, "training");
  TrainingConfig t;
  t.epochs = s.integer("epochs");
  t.batch_size = s.integer("batch_size");
  t.lr0 = s.number("lr0");
  t.lr_decay = s.number("lr_decay");
  t.lr_decay_every = s.integer("lr_decay_every");
  t.lr_floor = s.number("lr_floor");
  t.l2 = s.number("l2");
  t.collocation_points = s.integer("collocation_points");
  t.pair_batch = s.integer("pair_batch");
  if (s.has("mode")) t.mode = s.text("mode");
  if (s.has("train_fraction")) t.train_fraction = s.number("train_fraction");
  s.finish();
  return t;
}

EvaluationConfig parse_evaluation(const json& j) {
  Section s(j, "evaluation");
  EvaluationConfig e;
  e.physics_pass_threshold = s.number("physics_pass_threshold");
  e.importance_shuffles = s.integer("importance_shuffles");
  e.histogram_bins = s.integer("histogram_bins");
  s.finish();
  return e;
}

json antoine_json(const thermo::AntoineCoeffs& c) {
  return json{{"a", c.a}, {"b", c.b}, {"c", c.c}};
}

}  // namespace

void ColumnConfig::validate() const {
  if (n_trays < 2) throw ConfigError("column.n_trays must be >= 2");
  if (feed_tray < 1 || feed_tray > n_trays)
    throw ConfigError("column.feed_tray must lie in [1, n_trays]");
  if (!(pressure_bottom_kpa > pressure_main_kpa &&
        pressure_main_kpa > pressure_condenser_kpa))
    throw ConfigError("column pressures must satisfy bottom > main > condenser");
  if (feed_flow_kmol_h <= 0.0) throw ConfigError("column.feed_flow_kmol_h must be > 0");
  if (feed_z_heavy < 0.0 || feed_z_heavy > 1.0)
    throw ConfigError("column.feed_z_heavy must lie in [0, 1]");
  if (nominal_reflux_ratio < 0.0)
    throw ConfigError("column.nominal_reflux_ratio must be >= 0");
  for (double h : {tray_holdup_kmol, condenser_holdup_kmol, reboiler_holdup_kmol,
                   condenser_capacity_kmol, reboiler_capacity_kmol}) {
    if (h <= 0.0) throw ConfigError("column holdups and capacities must be > 0");
  }
  if (reboiler_duty_kw <= 0.0) throw ConfigError("column.reboiler_duty_kw must be > 0");
  if (reboiler_level_gain_per_h <= 0.0)
    throw ConfigError("column.reboiler_level_gain_per_h must be > 0");
  if (internal_dt_s <= 0.0) throw ConfigError("column.internal_dt_s must be > 0");
}

void RunConfig::validate() const {
  system.validate();
  column.validate();
  if (dataset.duration_s <= 0.0 || dataset.sample_interval_s <= 0.0)
    throw ConfigError("dataset duration and sample interval must be > 0");
  double ratio = dataset.duration_s / dataset.sample_interval_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("dataset.duration_s must be divisible by sample_interval_s");
  double sub = dataset.sample_interval_s / column.internal_dt_s;
  if (std::abs(sub - std::round(sub)) > 1e-9)
    throw ConfigError("sample_interval_s must be divisible by internal_dt_s");
  for (const ScheduleEvent& e : schedule) {
    if (e.time_s < 0.0 || e.time_s > dataset.duration_s)
      throw ConfigError("schedule event time outside [0, duration]");
    if (e.kind == ScheduleEvent::Kind::reflux_ramp && !(e.time_s < e.end_s))
      throw ConfigError("reflux ramp must have start < end");
  }
  if (training.epochs < 1) throw ConfigError("training.epochs must be >= 1");
  if (training.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
  if (training.lr0 <= 0.0 || training.lr_floor <= 0.0 ||
      training.lr_decay <= 0.0 || training.lr_decay_every < 1)
    throw ConfigError("training learning-rate settings must be positive");
  if (training.lr_floor >= training.lr0)
    throw ConfigError("training.lr_floor must be below lr0");
  if (training.l2 < 0.0) throw ConfigError("training.l2 must be >= 0");
  if (training.collocation_points < 0)
    throw ConfigError("training.collocation_points must be >= 0");
  if (training.pair_batch < 1) throw ConfigError("training.pair_batch must be >= 1");
  if (training.mode != "pinn" && training.mode != "baseline_mlp")
    throw ConfigError("training.mode must be 'pinn' or 'baseline_mlp'");
  if (training.train_fraction <= 0.0 || training.train_fraction > 1.0)
    throw ConfigError("training.train_fraction must lie in (0, 1]");
  if (evaluation.physics_pass_threshold <= 0.0)
    throw ConfigError("evaluation.physics_pass_threshold must be > 0");
  if (evaluation.importance_shuffles < 1)
    throw ConfigError("evaluation.importance_shuffles must be >= 1");
  if (evaluation.histogram_bins < 2)
    throw ConfigError("evaluation.histogram_bins must be >= 2");
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section root(j, "config");
  RunConfig cfg;
  cfg.seed = root.u64("seed");
  cfg.system = parse_system(root.raw("system"));
  cfg.column = parse_column(root.raw("column"));
  cfg.schedule = parse_schedule(root.raw("schedule"));
  cfg.noise = parse_noise(root.raw("noise"));
  {
    Section d(root.raw("dataset"), "dataset");
    cfg.dataset.duration_s = d.number("duration_s");
    cfg.dataset.sample_interval_s = d.number("sample_interval_s");
    d.finish();
  }
  cfg.training = parse_training(root.raw("training"));
  cfg.evaluation = parse_evaluation(root.raw("evaluation"));
  // Resolved-config snapshots carry their own invocation record; accept it so
  // a snapshot can be fed straight back in as --config.
  root.has("invocation");
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  const thermo::BinarySystem& s = cfg.system;
  j["system"] = json{
      {"name_heavy", s.name_heavy},
      {"name_light", s.name_light},
      {"antoine_heavy", antoine_json(s.antoine_heavy)},
      {"antoine_light", antoine_json(s.antoine_light)},
      {"wilson", json{{"lambda_12", s.wilson.lambda_12},
                      {"lambda_21", s.wilson.lambda_21}}},
      {"cp_liquid_heavy", s.cp_liquid_heavy},
      {"cp_liquid_light", s.cp_liquid_light},
      {"dh_vap_heavy", s.dh_vap_heavy},
      {"dh_vap_light", s.dh_vap_light},
      {"t_ref_k", s.t_ref},
      {"molar_mass_heavy", s.molar_mass_heavy},
      {"molar_mass_light", s.molar_mass_light},
  };
  const ColumnConfig& c = cfg.column;
  j["column"] = json{
      {"n_trays", c.n_trays},
      {"feed_tray", c.feed_tray},
      {"feed_flow_kmol_h", c.feed_flow_kmol_h},
      {"feed_z_heavy", c.feed_z_heavy},
      {"nominal_reflux_ratio", c.nominal_reflux_ratio},
      {"pressure_condenser_kpa", c.pressure_condenser_kpa},
      {"pressure_main_kpa", c.pressure_main_kpa},
      {"pressure_bottom_kpa", c.pressure_bottom_kpa},
      {"tray_holdup_kmol", c.tray_holdup_kmol},
      {"condenser_holdup_kmol", c.condenser_holdup_kmol},
      {"condenser_capacity_kmol", c.condenser_capacity_kmol},
      {"reboiler_holdup_kmol", c.reboiler_holdup_kmol},
      {"reboiler_capacity_kmol", c.reboiler_capacity_kmol},
      {"reboiler_duty_kw", c.reboiler_duty_kw},
      {"reboiler_level_gain_per_h", c.reboiler_level_gain_per_h},
      {"internal_dt_s", c.internal_dt_s},
  };
  json sched = json::array();
  for (const ScheduleEvent& e : cfg.schedule) {
    switch (e.kind) {
      case ScheduleEvent::Kind::reflux_ramp:
        sched.push_back(json{{"type", "reflux_ramp"},
                             {"start_s", e.time_s},
                             {"end_s", e.end_s},
                             {"from", e.from},
                             {"to", e.to}});
        break;
      case ScheduleEvent::Kind::feed_flow_step:
        sched.push_back(json{{"type", "feed_flow_step"},
                             {"time_s", e.time_s},
                             {"value_kmol_h", e.value}});
        break;
      case ScheduleEvent::Kind::feed_comp_step:
        sched.push_back(json{{"type", "feed_comp_step"},
                             {"time_s", e.time_s},
                             {"z_heavy", e.value}});
        break;
      case ScheduleEvent::Kind::pressure_step: {
        const char* sec = e.section == ScheduleEvent::Section::condenser
                              ? "condenser"
                              : e.section == ScheduleEvent::Section::main
                                    ? "main"
                                    : "bottom";
        sched.push_back(json{{"type", "pressure_step"},
                             {"time_s", e.time_s},
                             {"value_kpa", e.value},
                             {"section", sec}});
        break;
      }
    }
  }
  j["schedule"] = sched;
  json noise;
  for (std::size_t k = 0; k < ch::count; ++k) {
    if (k == ch::feed_z_hx || k == ch::feed_z_tx) continue;
    noise[kChannelNames[k]] = cfg.noise.amp[k];
  }
  noise["feed_z"] = cfg.noise.amp[ch::feed_z_hx];
  noise["target_x"] = cfg.noise.target_amp;
  j["noise"] = noise;
  j["dataset"] = json{{"duration_s", cfg.dataset.duration_s},
                      {"sample_interval_s", cfg.dataset.sample_interval_s}};
  const TrainingConfig& t = cfg.training;
  j["training"] = json{
      {"epochs", t.epochs},
      {"batch_size", t.batch_size},
      {"lr0", t.lr0},
      {"lr_decay", t.lr_decay},
      {"lr_decay_every", t.lr_decay_every},
      {"lr_floor", t.lr_floor},
      {"l2", t.l2},
      {"collocation_points", t.collocation_points},
      {"pair_batch", t.pair_batch},
      {"mode", t.mode},
      {"train_fraction", t.train_fraction},
  };
  j["evaluation"] = json{
      {"physics_pass_threshold", cfg.evaluation.physics_pass_threshold},
      {"importance_shuffles", cfg.evaluation.importance_shuffles},
      {"histogram_bins", cfg.evaluation.histogram_bins},
  };
  return j.dump(2) + "\n";
}

void write_resolved_config(const RunConfig& cfg, const std::string& path,
                           const std::string& invocation_json) {
  json j = json::parse(serialize_config(cfg));
  if (!invocation_json.empty()) j["invocation"] = json::parse(invocation_json);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::other, "cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace coltwin
