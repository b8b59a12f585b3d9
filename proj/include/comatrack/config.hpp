#pragma once

// Run configuration: one JSON document with nested sections, strict parsing
// (unknown keys are errors naming their path), every key optional with the
// defaults below, and command-line overrides by dotted key path.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "comatrack/bc.hpp"
#include "comatrack/bench.hpp"
#include "comatrack/error.hpp"
#include "comatrack/expert.hpp"
#include "comatrack/grpo.hpp"
#include "comatrack/json_util.hpp"
#include "comatrack/marl.hpp"
#include "comatrack/rewards.hpp"

namespace comatrack {

inline constexpr int kRunConfigSchemaVersion = 1;

struct PolicyConfig {
  std::vector<std::size_t> hidden{64, 64};
  double init_std = 0.05;
};

struct BcSection {
  std::size_t episodes = 300;  // expert episodes collected from the demo suite
  double action_noise = 0.2;
  BcConfig train{5, 64, 1e-3, 0.1};
};

// Which opponent the single-agent phase trains next to: none, or a
// non-learning static / random / competitive (frozen init checkpoint) agent.
enum class SingleOpponent { none, static_obstacle, random_interference, competitive };

struct GrpoSection {
  GrpoConfig cfg{8, 10, 0.2, 0.05, 0.01, 3e-4, 100, 8, 1e-8, 1, 1};
  std::size_t train_episodes = 200;
  SingleOpponent opponent = SingleOpponent::static_obstacle;
};

struct MarlSection {
  std::size_t rounds = 1;
  std::size_t iterations_per_round = 100;
  bool opponent_update = true;
  std::vector<BehaviorKind> curriculum;
  double opponent_learning_rate = 3e-4;
};

struct BenchSection {
  std::uint64_t seed = 11;
  std::size_t count = 100;
  BehaviorKind behavior = BehaviorKind::competitive;
  bool stochastic = false;
  bool record_trace = false;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t workers = 1;
  ArenaTemplate arena;
  ExpertConfig expert;
  RewardConfig rewards;
  PolicyConfig policy;
  BcSection bc;
  GrpoSection grpo;
  MarlSection marl;
  BenchSection bench;

  void validate() const;
  MarlConfig marl_config() const;
};

inline const char* to_string(SingleOpponent o) {
  switch (o) {
    case SingleOpponent::none: return "none";
    case SingleOpponent::static_obstacle: return "static";
    case SingleOpponent::random_interference: return "random";
    case SingleOpponent::competitive: return "competitive";
  }
  return "?";
}

inline SingleOpponent single_opponent_from_string(const std::string& s) {
  if (s == "none") return SingleOpponent::none;
  if (s == "static") return SingleOpponent::static_obstacle;
  if (s == "random") return SingleOpponent::random_interference;
  if (s == "competitive") return SingleOpponent::competitive;
  throw ConfigError("unknown opponent '" + s + "' (expected none, static, random or competitive)");
}

namespace detail {

// Field visitors shared by serialization and strict parsing.
template <typename V>
void visit_fields(V& v, ArenaTemplate& t) {
  ArenaSpec& b = t.base;
  v("fov_half_angle", b.fov_half_angle);
  v("step_cap_m", b.step_cap_m);
  v("turn_cap_rad", b.turn_cap_rad);
  v("max_steps", b.max_steps);
  v("agent_radius", b.agent_radius);
  v("target_radius", b.target_radius);
  v("lost_patience", b.lost_patience);
  v("success_tr_threshold", b.success_tr_threshold);
  v("track_band_min", b.track_band_min);
  v("track_band_max", b.track_band_max);
  v("ray_range", b.ray_range);
  v("width", t.width);
  v("height", t.height);
  v("min_obstacles", t.min_obstacles);
  v("max_obstacles", t.max_obstacles);
  v("obstacle_min_size", t.obstacle_min_size);
  v("obstacle_max_size", t.obstacle_max_size);
  v("spawn_wall_margin", t.spawn_wall_margin);
  v("target_distance_min", t.target_distance_min);
  v("target_distance_max", t.target_distance_max);
  v("target_bearing_max", t.target_bearing_max);
  v("target_speed", t.target_speed);
  v("target_waypoints", t.target_waypoints);
  v("random_opponent_speed", t.random_opponent_speed);
}

template <typename V>
void visit_fields(V& v, ExpertConfig& c) {
  v("pursuit_gain", c.pursuit_gain);
  v("standoff", c.standoff);
  v("avoid_weight", c.avoid_weight);
  v("avoid_range", c.avoid_range);
  v("max_speed", c.max_speed);
  v("sidestep", c.sidestep);
  v("safety_margin", c.safety_margin);
}

template <typename V>
void visit_fields(V& v, RewardConfig& c) {
  v("d_opt_trk", c.d_opt_trk);
  v("d_opt_cmp", c.d_opt_cmp);
  v("sigma", c.sigma);
  v("w_distance", c.w_distance);
  v("w_facing", c.w_facing);
  v("w_persist", c.w_persist);
  v("persist_zone_min", c.persist_zone_min);
  v("persist_zone_max", c.persist_zone_max);
  v("persist_min_run", c.persist_min_run);
  v("w_safety", c.w_safety);
  v("d_safe_int", c.d_safe_int);
  v("r_success", c.r_success);
  v("r_target_lost", c.r_target_lost);
  v("r_collision", c.r_collision);
}

template <typename V>
void visit_fields(V& v, PolicyConfig& c) {
  v("hidden", c.hidden);
  v("init_std", c.init_std);
}

template <typename V>
void visit_fields(V& v, BcSection& c) {
  v("episodes", c.episodes);
  v("action_noise", c.action_noise);
  v("epochs", c.train.epochs);
  v("batch_size", c.train.batch_size);
  v("learning_rate", c.train.learning_rate);
  v("holdout_fraction", c.train.holdout_fraction);
}

template <typename V>
void visit_fields(V& v, GrpoSection& c) {
  GrpoConfig& g = c.cfg;
  v("group_size", g.group_size);
  v("t_group", g.t_group);
  v("epsilon", g.epsilon);
  v("lambda_kl", g.lambda_kl);
  v("lambda_ent", g.lambda_ent);
  v("learning_rate", g.learning_rate);
  v("iterations", g.iterations);
  v("segments_per_iteration", g.segments_per_iteration);
  v("advantage_std_floor", g.advantage_std_floor);
  v("update_epochs", g.update_epochs);
  v("train_episodes", c.train_episodes);
  v("opponent", c.opponent);
}

template <typename V>
void visit_fields(V& v, MarlSection& c) {
  v("rounds", c.rounds);
  v("iterations_per_round", c.iterations_per_round);
  v("opponent_update", c.opponent_update);
  v("curriculum", c.curriculum);
  v("opponent_learning_rate", c.opponent_learning_rate);
}

template <typename V>
void visit_fields(V& v, BenchSection& c) {
  v("seed", c.seed);
  v("count", c.count);
  v("behavior", c.behavior);
  v("stochastic", c.stochastic);
  v("record_trace", c.record_trace);
}

struct ToJson {
  json& out;
  template <typename T>
  void operator()(const char* key, const T& value) {
    if constexpr (std::is_same_v<T, BehaviorKind>) {
      out[key] = to_string(value);
    } else if constexpr (std::is_same_v<T, SingleOpponent>) {
      out[key] = to_string(value);
    } else if constexpr (std::is_same_v<T, std::vector<BehaviorKind>>) {
      json arr = json::array();
      for (BehaviorKind k : value) arr.push_back(to_string(k));
      out[key] = arr;
    } else {
      out[key] = value;
    }
  }
};

struct FromJson {
  StrictObject& obj;
  template <typename T>
  void operator()(const char* key, T& value) {
    if (!obj.has(key)) {
      obj.touch(key);
      return;
    }
    const std::string path = obj.sub(key);
    try {
      if constexpr (std::is_same_v<T, BehaviorKind>) {
        value = behavior_from_string(obj.get<std::string>(key));
      } else if constexpr (std::is_same_v<T, SingleOpponent>) {
        value = single_opponent_from_string(obj.get<std::string>(key));
      } else if constexpr (std::is_same_v<T, std::vector<BehaviorKind>>) {
        value.clear();
        for (const auto& s : obj.get<std::vector<std::string>>(key)) value.push_back(behavior_from_string(s));
      } else if constexpr (std::is_same_v<T, bool>) {  // bool counts as unsigned
        const json& j = obj.at(key);
        if (!j.is_boolean()) throw ConfigError(path + ": expected true or false");
        value = j.get<bool>();
      } else if constexpr (std::is_unsigned_v<T>) {
        const json& j = obj.at(key);
        if (!j.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
        value = j.get<T>();
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        const json& j = obj.at(key);
        if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
        value = j.get<T>();
      } else {
        value = obj.get<T>(key);
      }
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      if (what.rfind(path, 0) == 0) throw;
      throw ConfigError(path + ": " + what);
    }
  }
};

template <typename T>
json section_to_json(const T& section) {
  json out = json::object();
  ToJson v{out};
  visit_fields(v, const_cast<T&>(section));
  return out;
}

template <typename T>
void section_from_json(StrictObject& root, const char* key, T& section) {
  if (!root.has(key)) {
    root.touch(key);
    return;
  }
  StrictObject o(root.at(key), root.sub(key));
  FromJson v{o};
  visit_fields(v, section);
  o.finish();
}

}  // namespace detail

inline void RunConfig::validate() const {
  arena.validate();
  expert.validate();
  rewards.validate();
  if (policy.hidden.empty()) throw ConfigError("policy.hidden must list at least one layer");
  for (std::size_t h : policy.hidden)
    if (h < 1) throw ConfigError("policy.hidden sizes must be >= 1");
  if (!(policy.init_std > 0.0 && policy.init_std <= 1.0)) throw ConfigError("policy.init_std must be in (0, 1]");
  if (bc.episodes < 1) throw ConfigError("bc.episodes must be >= 1");
  if (bc.action_noise < 0.0) throw ConfigError("bc.action_noise must be >= 0");
  bc.train.validate();
  grpo.cfg.validate();
  if (grpo.train_episodes < 1) throw ConfigError("grpo.train_episodes must be >= 1");
  if (!(marl.opponent_learning_rate >= 0.0)) throw ConfigError("marl.opponent_learning_rate must be >= 0");
  marl_config().validate();
  if (bench.count < 1) throw ConfigError("bench.count must be >= 1");
}

inline MarlConfig RunConfig::marl_config() const {
  MarlConfig m;
  m.tracker = grpo.cfg;
  m.tracker.workers = workers;
  m.opponent = m.tracker;
  m.opponent.learning_rate = marl.opponent_learning_rate;
  m.rounds = marl.rounds;
  m.iterations_per_round = marl.iterations_per_round;
  m.opponent_update = marl.opponent_update;
  m.curriculum = marl.curriculum;
  m.random_opponent_speed = arena.random_opponent_speed;
  return m;
}

// Full resolved configuration. The output directory and worker count are
// excluded: neither changes any result.
inline json run_config_to_json(const RunConfig& c) {
  return json{{"schema_version", kRunConfigSchemaVersion},
              {"seed", c.seed},
              {"arena", detail::section_to_json(c.arena)},
              {"expert", detail::section_to_json(c.expert)},
              {"rewards", detail::section_to_json(c.rewards)},
              {"policy", detail::section_to_json(c.policy)},
              {"bc", detail::section_to_json(c.bc)},
              {"grpo", detail::section_to_json(c.grpo)},
              {"marl", detail::section_to_json(c.marl)},
              {"bench", detail::section_to_json(c.bench)}};
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(run_config_to_json(c).dump())); }

inline RunConfig run_config_from_json(const json& j) {
  StrictObject o(j, "");
  RunConfig c;
  if (o.has("schema_version") && o.get<int>("schema_version") != kRunConfigSchemaVersion)
    throw ConfigError("schema_version: unsupported config version");
  o.touch("schema_version");
  detail::FromJson top{o};
  top("seed", c.seed);
  top("output_dir", c.output_dir);
  top("workers", c.workers);
  detail::section_from_json(o, "arena", c.arena);
  detail::section_from_json(o, "expert", c.expert);
  detail::section_from_json(o, "rewards", c.rewards);
  detail::section_from_json(o, "policy", c.policy);
  detail::section_from_json(o, "bc", c.bc);
  detail::section_from_json(o, "grpo", c.grpo);
  detail::section_from_json(o, "marl", c.marl);
  detail::section_from_json(o, "bench", c.bench);
  o.finish();
  c.validate();
  return c;
}

// "a.b.c=value": value is parsed as JSON when it parses, else taken as a string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + path + "' has an empty key segment");
    if (!node->is_object()) throw ConfigError(path + ": cannot descend into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

inline RunConfig load_run_config(const std::filesystem::path& p, const std::vector<std::string>& overrides = {}) {
  std::string text;
  try {
    text = read_file(p);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + ": invalid JSON (" + e.what() + ")");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return run_config_from_json(doc);
}

}  // namespace comatrack
