#pragma once

// End-to-end stages driven by a RunConfig: demo collection, behavior cloning,
// single-agent GRPO, competitive co-training and evaluation. Every suite and
// stream seed is derived from the run seed so a (config, seed) pair fixes all
// outputs.

#include <memory>
#include <string>
#include <vector>

#include "comatrack/bc.hpp"
#include "comatrack/bench.hpp"
#include "comatrack/checkpoint.hpp"
#include "comatrack/config.hpp"
#include "comatrack/grpo.hpp"
#include "comatrack/marl.hpp"

namespace comatrack {

namespace stream {
inline constexpr std::uint64_t kDemoSuite = 0x64656d6f;
inline constexpr std::uint64_t kDemoRollout = 0x726f6c6c;
inline constexpr std::uint64_t kInit = 0x696e6974;
inline constexpr std::uint64_t kBc = 0x62632d74;
inline constexpr std::uint64_t kRlSuite = 0x726c7375;
inline constexpr std::uint64_t kSingle = 0x73696e67;
inline constexpr std::uint64_t kMulti = 0x6d756c74;
}  // namespace stream

// Reference string used for "the initialization checkpoint" inside generated
// training suites; resolved in memory, never read from disk.
inline constexpr const char* kInitCheckpointRef = "<init>";

inline std::vector<EpisodeSpec> demo_suite(const RunConfig& cfg) {
  return generate_suite(derive_seed(cfg.seed, {stream::kDemoSuite}), cfg.bc.episodes, BehaviorKind::static_obstacle,
                        cfg.arena);
}

inline std::vector<Demo> run_collect(const RunConfig& cfg) {
  CollectConfig cc{1, cfg.workers, cfg.bc.action_noise};
  return collect_demos(demo_suite(cfg), cc, cfg.expert, derive_seed(cfg.seed, {stream::kDemoRollout}));
}

inline PolicyParams initial_policy(const RunConfig& cfg) {
  return init_policy(MlpShape(cfg.policy.hidden), derive_seed(cfg.seed, {stream::kInit}), std::log(cfg.policy.init_std));
}

inline BcResult run_bc(const RunConfig& cfg, const std::vector<Demo>& demos, const PolicyParams& init) {
  BcResult r = train_bc(init, demos, cfg.bc.train, derive_seed(cfg.seed, {stream::kBc}));
  r.checkpoint.config_hash = config_hash(cfg);
  r.checkpoint.seed = cfg.seed;
  return r;
}

inline BcResult run_bc(const RunConfig& cfg, const std::vector<Demo>& demos) {
  return run_bc(cfg, demos, initial_policy(cfg));
}

inline std::vector<EpisodeSpec> rl_suite(const RunConfig& cfg, BehaviorKind kind) {
  return generate_suite(derive_seed(cfg.seed, {stream::kRlSuite}), cfg.grpo.train_episodes, kind, cfg.arena,
                        kind == BehaviorKind::competitive ? kInitCheckpointRef : "");
}

inline TrainResult run_single(const RunConfig& cfg, const Checkpoint& init, const DiagnosticsSink& sink = {}) {
  GrpoConfig g = cfg.grpo.cfg;
  g.workers = cfg.workers;
  std::vector<EpisodeSpec> suite;
  OpponentFactory opponents;
  switch (cfg.grpo.opponent) {
    case SingleOpponent::none:
      suite = rl_suite(cfg, BehaviorKind::static_obstacle);
      for (auto& ep : suite) ep.arena = without_opponent(ep.arena);
      break;
    case SingleOpponent::static_obstacle:
      suite = rl_suite(cfg, BehaviorKind::static_obstacle);
      opponents = suite_opponents();
      break;
    case SingleOpponent::random_interference:
      suite = rl_suite(cfg, BehaviorKind::random_interference);
      opponents = suite_opponents();
      break;
    case SingleOpponent::competitive: {
      suite = rl_suite(cfg, BehaviorKind::competitive);
      auto frozen = std::make_shared<const PolicyParams>(init.params);
      opponents = suite_opponents([frozen](const std::string&) { return frozen; });
      break;
    }
  }
  TrainResult r = train_single_agent(init, suite, cfg.rewards, g, derive_seed(cfg.seed, {stream::kSingle}), opponents, sink);
  r.checkpoint.config_hash = config_hash(cfg);
  r.checkpoint.seed = cfg.seed;
  return r;
}

inline MarlResult run_multi(const RunConfig& cfg, const Checkpoint& init, const DiagnosticsSink& sink = {}) {
  MarlResult r = train_multi_agent(init, rl_suite(cfg, BehaviorKind::competitive), cfg.rewards, cfg.marl_config(),
                                   derive_seed(cfg.seed, {stream::kMulti}), sink);
  const std::string h = config_hash(cfg);
  r.tracker.config_hash = h;
  r.opponent.config_hash = h;
  r.tracker.seed = cfg.seed;
  r.opponent.seed = cfg.seed;
  return r;
}

// The evaluation suite depends on the bench section only, so every training
// seed is scored on the same episodes.
inline std::vector<EpisodeSpec> bench_suite(const RunConfig& cfg, const std::string& opponent_checkpoint = "") {
  return generate_suite(cfg.bench.seed, cfg.bench.count, cfg.bench.behavior, cfg.arena, opponent_checkpoint);
}

inline EvaluationConfig evaluation_config(const RunConfig& cfg) {
  EvaluationConfig e;
  e.stochastic = cfg.bench.stochastic;
  e.workers = cfg.workers;
  e.episode.record_trace = cfg.bench.record_trace;
  e.episode.rewards = cfg.rewards;
  return e;
}

}  // namespace comatrack
