#pragma once

// Competitive tracking benchmark: seeded suite generation with an opponent
// spawned 0.5 m ahead of the tracker, episode execution against static,
// random, or competitive opponents, and SR / TR / CR scoring.
//
// Metric definitions (version "sr_tr_cr/1"):
//   SR = fraction of episodes whose termination cause is success
//   TR = mean over episodes of tracked steps / executed steps
//   CR = fraction of episodes in which the tracker collided

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "comatrack/arena.hpp"
#include "comatrack/arena_io.hpp"
#include "comatrack/checkpoint.hpp"
#include "comatrack/json_util.hpp"
#include "comatrack/parallel.hpp"
#include "comatrack/rewards.hpp"
#include "comatrack/scenario.hpp"

namespace comatrack {

inline constexpr const char* kMetricDefinitionVersion = "sr_tr_cr/1";
inline constexpr int kSuiteSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kOpponentLead = 0.5;

struct ArenaTemplate {
  ArenaSpec base;  // physical parameters; spawns, obstacles and script are generated
  double width = 16.0;
  double height = 16.0;
  int min_obstacles = 2;
  int max_obstacles = 5;
  double obstacle_min_size = 0.3;
  double obstacle_max_size = 1.0;
  double spawn_wall_margin = 1.5;
  double target_distance_min = 1.5;
  double target_distance_max = 2.5;
  double target_bearing_max = kPi / 4.0;
  double target_speed = 0.25;
  int target_waypoints = 4;
  double random_opponent_speed = 0.2;

  void validate() const {
    if (!(width > 0.0) || !(height > 0.0)) throw ConfigError("arena.width/height must be > 0");
    if (min_obstacles < 0 || max_obstacles < min_obstacles) throw ConfigError("arena obstacle count range is invalid");
    if (!(obstacle_min_size > 0.0) || obstacle_max_size < obstacle_min_size)
      throw ConfigError("arena obstacle size range is invalid");
    if (!(target_distance_min > 0.0) || target_distance_max < target_distance_min)
      throw ConfigError("arena target distance range is invalid");
    if (!(target_speed > 0.0)) throw ConfigError("arena.target_speed must be > 0");
    if (target_waypoints < 1) throw ConfigError("arena.target_waypoints must be >= 1");
  }
};

namespace detail {

inline Obstacle random_obstacle(Rng& rng, const Rect& bounds, const ArenaTemplate& t) {
  const double size = rng.uniform(t.obstacle_min_size, t.obstacle_max_size);
  const double margin = t.obstacle_max_size + 0.2;
  const Vec2 c{rng.uniform(bounds.lo.x + margin, bounds.hi.x - margin),
               rng.uniform(bounds.lo.y + margin, bounds.hi.y - margin)};
  if (rng.uniform() < 0.5) return CircleObstacle{c, size};
  const double aspect = rng.uniform(0.5, 2.0);
  const Vec2 half{size * std::sqrt(aspect), size / std::sqrt(aspect)};
  return RectObstacle{Rect{c - half, c + half}};
}

inline bool try_generate(Rng& rng, const ArenaTemplate& t, ArenaSpec& spec) {
  spec = t.base;
  spec.bounds = Rect{{-t.width / 2.0, -t.height / 2.0}, {t.width / 2.0, t.height / 2.0}};
  spec.obstacles.clear();
  const double margin = t.spawn_wall_margin;
  if (t.width <= 2.0 * margin || t.height <= 2.0 * margin) return false;

  const int n_obs = t.min_obstacles + static_cast<int>(rng.below(static_cast<std::uint64_t>(t.max_obstacles - t.min_obstacles + 1)));
  if (t.width <= 2.0 * (t.obstacle_max_size + 0.2) || t.height <= 2.0 * (t.obstacle_max_size + 0.2)) {
    if (n_obs > 0) return false;
  } else {
    for (int i = 0; i < n_obs; ++i) spec.obstacles.push_back(random_obstacle(rng, spec.bounds, t));
  }

  const double heading = rng.uniform(-kPi, kPi);
  const Vec2 tracker{rng.uniform(spec.bounds.lo.x + margin, spec.bounds.hi.x - margin),
                     rng.uniform(spec.bounds.lo.y + margin, spec.bounds.hi.y - margin)};
  spec.tracker_spawn = {tracker.x, tracker.y, heading};
  const Vec2 ahead = tracker + kOpponentLead * Vec2{std::cos(heading), std::sin(heading)};
  spec.opponent_spawn = Pose{ahead.x, ahead.y, heading};

  const double dist = rng.uniform(t.target_distance_min, t.target_distance_max);
  const double bearing = rng.uniform(-t.target_bearing_max, t.target_bearing_max);
  const Vec2 target = tracker + dist * Vec2{std::cos(heading + bearing), std::sin(heading + bearing)};
  spec.target_spawn = {target.x, target.y, rng.uniform(-kPi, kPi)};

  spec.target_script = TargetScript{{}, t.target_speed, false};
  Vec2 prev = target;
  for (int k = 0; k < t.target_waypoints; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      const double r = spec.target_radius + 0.2;
      const Vec2 w{rng.uniform(spec.bounds.lo.x + r, spec.bounds.hi.x - r),
                   rng.uniform(spec.bounds.lo.y + r, spec.bounds.hi.y - r)};
      if (distance(w, prev) < 2.0) continue;
      if (!segment_clear_for_target(spec, prev, w)) continue;
      bool clear = true;
      for (const auto& o : spec.obstacles)
        if (clearance(o, w, spec.target_radius) <= 0.0) clear = false;
      if (!clear) continue;
      spec.target_script.waypoints.push_back(w);
      prev = w;
      placed = true;
    }
    if (!placed) return false;
  }

  try {
    validate_spec(spec);
  } catch (const ConstructionError&) {
    return false;
  }
  return true;
}

}  // namespace detail

// Deterministic in (seed, count, kind, template, checkpoint).
inline std::vector<EpisodeSpec> generate_suite(std::uint64_t seed, std::size_t count, BehaviorKind kind,
                                               const ArenaTemplate& tmpl, const std::string& checkpoint = "") {
  if (count < 1) throw UsageError("suite count must be >= 1");
  tmpl.validate();
  if (kind == BehaviorKind::competitive && checkpoint.empty())
    throw UsageError("competitive suites require an opponent checkpoint reference");
  std::vector<EpisodeSpec> suite;
  suite.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, {i, 0}));
    EpisodeSpec ep;
    bool ok = false;
    for (int attempt = 0; attempt < 200 && !ok; ++attempt) ok = detail::try_generate(rng, tmpl, ep.arena);
    if (!ok) throw GenerationError(i, "could not place spawns, obstacles and target script in the template");
    ep.arena.seed = derive_seed(seed, {i, 1});
    ep.episode_id = i;
    ep.suite_seed = seed;
    ep.opponent.kind = kind;
    if (kind == BehaviorKind::random_interference) {
      ep.opponent.motion_seed = derive_seed(seed, {i, 2});
      ep.opponent.speed = tmpl.random_opponent_speed;
    } else if (kind == BehaviorKind::competitive) {
      ep.opponent.checkpoint = checkpoint;
    }
    suite.push_back(std::move(ep));
  }
  return suite;
}

// ---------------------------------------------------------------------------

struct TraceStep {
  double d_trk = 0.0;
  bool visible = false;
  bool tracked = false;
  std::optional<Pose> opponent_pose;
  RewardBreakdown tracker_reward;
};

struct EpisodeRecord {
  std::size_t episode_id = 0;
  BehaviorKind behavior = BehaviorKind::static_obstacle;
  TerminationCause cause = TerminationCause::none;
  int steps = 0;
  int tracked_steps = 0;
  bool collision = false;
  std::vector<TraceStep> trace;

  double tracking_rate() const { return steps > 0 ? static_cast<double>(tracked_steps) / steps : 0.0; }
};

struct EpisodeOptions {
  bool record_trace = false;
  RewardConfig rewards;
};

// Runs one episode to termination.
inline EpisodeRecord run_episode(const EpisodeSpec& spec, const Controller& tracker, const Controller& opponent,
                                 const EpisodeOptions& opts = {}) {
  ArenaState state = build_arena(spec.arena);
  EpisodeRecord rec;
  rec.episode_id = spec.episode_id;
  rec.behavior = spec.opponent.kind;
  ZoneRun run;
  while (!state.terminated()) {
    const ActionPlan tp = tracker(state, Role::tracker);
    std::optional<ActionPlan> op;
    if (state.opponent && opponent) op = opponent(state, Role::opponent);
    const StepEvents ev = advance(state, tp, op);
    if (ev.tracker_collided) rec.collision = true;
    if (opts.record_trace) {
      run.update(state, opts.rewards);
      TraceStep t;
      t.d_trk = distances(state).d_trk;
      t.visible = ev.tracker_sees_target;
      t.tracked = tracked_condition(state);
      if (state.opponent) t.opponent_pose = state.opponent->pose;
      t.tracker_reward = tracker_reward(state, run.tracker, ev.cause, opts.rewards);
      rec.trace.push_back(t);
    }
  }
  rec.cause = state.events.cause;
  rec.steps = state.step;
  rec.tracked_steps = state.tracked_steps;
  return rec;
}

// ---------------------------------------------------------------------------

struct MetricsSummary {
  double sr = 0.0;
  double tr = 0.0;
  double cr = 0.0;
  std::size_t episodes = 0;
  bool operator==(const MetricsSummary&) const = default;
};

struct MetricsReport {
  MetricsSummary overall;
  std::map<std::string, MetricsSummary> per_behavior;
  bool operator==(const MetricsReport&) const = default;
};

inline MetricsSummary summarize(const std::vector<const EpisodeRecord*>& recs) {
  MetricsSummary m;
  m.episodes = recs.size();
  std::size_t success = 0, collided = 0;
  double tr_sum = 0.0;
  for (const auto* r : recs) {
    success += r->cause == TerminationCause::success ? 1 : 0;
    collided += r->collision ? 1 : 0;
    tr_sum += r->tracking_rate();
  }
  const double n = static_cast<double>(recs.size());
  m.sr = static_cast<double>(success) / n;
  m.cr = static_cast<double>(collided) / n;
  m.tr = tr_sum / n;
  return m;
}

inline MetricsReport compute_metrics(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw UsageError("compute_metrics needs at least one record");
  MetricsReport report;
  std::vector<const EpisodeRecord*> all;
  std::map<std::string, std::vector<const EpisodeRecord*>> by_kind;
  for (const auto& r : records) {
    all.push_back(&r);
    by_kind[to_string(r.behavior)].push_back(&r);
  }
  report.overall = summarize(all);
  for (const auto& [kind, recs] : by_kind) report.per_behavior[kind] = summarize(recs);
  return report;
}

// Looks up competitive opponent parameters by checkpoint reference.
using CheckpointResolver = std::function<std::shared_ptr<const PolicyParams>(const std::string&)>;

inline CheckpointResolver file_checkpoint_resolver() {
  auto cache = std::make_shared<std::map<std::string, std::shared_ptr<const PolicyParams>>>();
  return [cache](const std::string& ref) {
    auto it = cache->find(ref);
    if (it != cache->end()) return it->second;
    auto params = std::make_shared<const PolicyParams>(load_checkpoint(ref).params);
    (*cache)[ref] = params;
    return params;
  };
}

struct EvaluationConfig {
  bool stochastic = false;
  std::size_t workers = 1;
  EpisodeOptions episode;
};

struct Evaluation {
  MetricsReport report;
  std::vector<EpisodeRecord> records;
};

inline Evaluation evaluate(const PolicyParams& tracker, const std::vector<EpisodeSpec>& suite,
                           const EvaluationConfig& cfg, const CheckpointResolver& resolver) {
  if (suite.empty()) throw UsageError("evaluation suite is empty");
  auto params = std::make_shared<const PolicyParams>(tracker);
  // Resolve opponents serially so file loading and caching stay single-threaded.
  std::vector<std::shared_ptr<const PolicyParams>> opponents(suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i)
    if (suite[i].opponent.kind == BehaviorKind::competitive) {
      if (!resolver) throw UsageError("competitive suite needs a checkpoint resolver");
      opponents[i] = resolver(suite[i].opponent.checkpoint);
    }
  Evaluation ev;
  ev.records.resize(suite.size());
  parallel_for(suite.size(), cfg.workers, [&](std::size_t i) {
    const auto& ep = suite[i];
    const Controller tc = cfg.stochastic
                              ? policy_sampling_controller(params, derive_seed(ep.suite_seed, {ep.episode_id, 3}))
                              : policy_mean_controller(params);
    ev.records[i] = run_episode(ep, tc, make_opponent_controller(ep.opponent, opponents[i]), cfg.episode);
  });
  ev.report = compute_metrics(ev.records);
  return ev;
}

// ---------------------------------------------------------------------------
// Files

inline json behavior_to_json(const OpponentBehavior& b) {
  return json{{"kind", to_string(b.kind)}, {"motion_seed", b.motion_seed}, {"speed", b.speed},
              {"checkpoint", b.checkpoint}};
}

inline OpponentBehavior behavior_from_json(const json& j, const std::string& path) {
  StrictObject o(j, path);
  OpponentBehavior b;
  b.kind = behavior_from_string(o.get<std::string>("kind"));
  b.motion_seed = o.get<std::uint64_t>("motion_seed");
  b.speed = o.get<double>("speed");
  b.checkpoint = o.get<std::string>("checkpoint");
  o.finish();
  if (b.kind == BehaviorKind::competitive && b.checkpoint.empty())
    throw ConfigError(path + ".checkpoint: competitive behavior requires a checkpoint");
  return b;
}

inline std::string suite_text(const std::vector<EpisodeSpec>& suite, const std::string& config_hash) {
  json eps = json::array();
  for (const auto& e : suite)
    eps.push_back({{"episode_id", e.episode_id},
                   {"suite_seed", e.suite_seed},
                   {"opponent", behavior_to_json(e.opponent)},
                   {"arena", arena_spec_to_json(e.arena)}});
  const std::uint64_t seed = suite.empty() ? 0 : suite.front().suite_seed;
  json doc{{"header", file_header("suite", config_hash, seed)},
           {"schema_version", kSuiteSchemaVersion},
           {"count", suite.size()},
           {"episodes", eps}};
  return doc.dump(1) + "\n";
}

inline std::vector<EpisodeSpec> suite_from_json(const json& doc) {
  StrictObject o(doc, "");
  o.touch("header");
  if (o.get<int>("schema_version") != kSuiteSchemaVersion) throw ConfigError("schema_version: unsupported suite version");
  const auto count = o.get<std::size_t>("count");
  const json& eps = o.at("episodes");
  if (!eps.is_array() || eps.size() != count) throw ConfigError("episodes: count does not match");
  o.finish();
  std::vector<EpisodeSpec> suite;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const std::string path = "episodes[" + std::to_string(i) + "]";
    StrictObject e(eps[i], path);
    EpisodeSpec s;
    s.episode_id = e.get<std::size_t>("episode_id");
    s.suite_seed = e.get<std::uint64_t>("suite_seed");
    s.opponent = behavior_from_json(e.at("opponent"), e.sub("opponent"));
    s.arena = arena_spec_from_json(e.at("arena"), e.sub("arena"));
    e.finish();
    suite.push_back(std::move(s));
  }
  return suite;
}

inline std::vector<EpisodeSpec> load_suite(const std::filesystem::path& p) {
  return suite_from_json(parse_json(read_file(p), p.string()));
}

inline json summary_to_json(const MetricsSummary& m) {
  return json{{"SR", m.sr}, {"TR", m.tr}, {"CR", m.cr}, {"episodes", m.episodes}};
}

inline std::string report_text(const MetricsReport& r, const std::string& checkpoint_hash,
                               const std::string& config_hash, std::uint64_t seed) {
  json per = json::object();
  for (const auto& [k, m] : r.per_behavior) per[k] = summary_to_json(m);
  json doc{{"header", file_header("metrics_report", config_hash, seed)},
           {"schema_version", kReportSchemaVersion},
           {"metric_definition_version", kMetricDefinitionVersion},
           {"checkpoint_hash", checkpoint_hash},
           {"SR", r.overall.sr},
           {"TR", r.overall.tr},
           {"CR", r.overall.cr},
           {"episodes", r.overall.episodes},
           {"per_behavior", per}};
  return doc.dump(1) + "\n";
}

inline std::string records_text(const std::vector<EpisodeRecord>& records, const std::string& config_hash,
                                std::uint64_t seed) {
  std::string out = json{{"header", file_header("episode_records", config_hash, seed)}, {"schema_version", 1}}.dump();
  out += "\n";
  for (const auto& r : records) {
    json j{{"episode_id", r.episode_id}, {"behavior", to_string(r.behavior)}, {"cause", to_string(r.cause)},
           {"steps", r.steps},           {"tracked_steps", r.tracked_steps}, {"collision", r.collision}};
    if (!r.trace.empty()) {
      json tr = json::array();
      for (const auto& t : r.trace)
        tr.push_back({{"d_trk", t.d_trk}, {"visible", t.visible}, {"reward", t.tracker_reward.total}});
      j["trace"] = tr;
    }
    out += j.dump();
    out += "\n";
  }
  return out;
}

}  // namespace comatrack
