#pragma once

// Group Relative Policy Optimization. G short rollouts start from one shared
// arena snapshot; each rollout's undiscounted return is standardized against
// its group to give a critic-free advantage, which is broadcast to every step
// of the rollout and optimized through the clipped ratio surrogate with a KL
// penalty toward the behavior-cloned reference and an entropy bonus.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "comatrack/arena.hpp"
#include "comatrack/bench.hpp"
#include "comatrack/checkpoint.hpp"
#include "comatrack/json_util.hpp"
#include "comatrack/optimizer.hpp"
#include "comatrack/parallel.hpp"
#include "comatrack/policy.hpp"
#include "comatrack/rewards.hpp"
#include "comatrack/scenario.hpp"

namespace comatrack {

struct GrpoConfig {
  std::size_t group_size = 8;
  int t_group = 10;
  double epsilon = 0.2;
  double lambda_kl = 0.05;
  double lambda_ent = 0.01;
  double learning_rate = 3e-4;
  std::size_t iterations = 100;
  std::size_t segments_per_iteration = 8;  // groups (start contexts) per update
  double advantage_std_floor = 1e-8;
  std::size_t update_epochs = 1;
  std::size_t workers = 1;

  void validate() const {
    if (group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
    if (t_group < 1) throw ConfigError("grpo.t_group must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("grpo.epsilon must be in (0, 1)");
    if (lambda_kl < 0.0) throw ConfigError("grpo.lambda_kl must be >= 0");
    if (lambda_ent < 0.0) throw ConfigError("grpo.lambda_ent must be >= 0");
    if (learning_rate < 0.0) throw ConfigError("grpo.learning_rate must be >= 0");
    if (segments_per_iteration < 1) throw ConfigError("grpo.segments_per_iteration must be >= 1");
    if (!(advantage_std_floor > 0.0)) throw ConfigError("grpo.advantage_std_floor must be > 0");
    if (update_epochs < 1) throw ConfigError("grpo.update_epochs must be >= 1");
  }
};

struct RolloutSegment {
  std::vector<Observation> observations;
  std::vector<ActionVector> actions;
  std::vector<double> old_log_probs;
  std::vector<double> rewards;
  std::vector<ArenaState> states;  // state after each step
  double segment_return = 0.0;
  std::size_t context_id = 0;

  std::size_t size() const { return actions.size(); }
};

struct GroupBatch {
  std::vector<RolloutSegment> segments;
  std::vector<double> advantages;
};

// A shared starting point for one group.
struct StartContext {
  ArenaState state;
  ZoneRun run;
  std::size_t id = 0;
  std::size_t episode = 0;          // index into the training suite
  std::uint64_t context_seed = 0;   // arena seed used for this context
};

// (R_i - mean) / (population std + floor).
inline std::vector<double> group_advantages(std::span<const double> returns, const GrpoConfig& cfg) {
  if (returns.size() < 2) throw UsageError("group advantages need at least two returns");
  const double n = static_cast<double>(returns.size());
  const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) adv[i] = (returns[i] - mean) / std::max(sd, cfg.advantage_std_floor);
  return adv;
}

inline std::vector<double> group_advantages(const std::vector<double>& returns, const GrpoConfig& cfg) {
  return group_advantages(std::span<const double>(returns), cfg);
}

inline void assign_advantages(GroupBatch& batch, const GrpoConfig& cfg) {
  std::vector<double> returns;
  for (const auto& s : batch.segments) returns.push_back(s.segment_return);
  batch.advantages = group_advantages(returns, cfg);
}

inline Role other_role(Role r) { return r == Role::tracker ? Role::opponent : Role::tracker; }

// The agent that is not learning in this rollout, if any.
using OtherAgent = Controller;

// G segments of at most t_group steps from identical copies of `start`;
// member g draws from rng.split(g) (or rng.split(0) for every member when
// `shared_substream` is set).
inline GroupBatch collect_group(const StartContext& start, const PolicyParams& params, Role role,
                                const OtherAgent& other, const RewardConfig& rewards, const GrpoConfig& cfg,
                                const Rng& rng, bool shared_substream = false) {
  if (start.state.terminated()) throw UsageError("collect_group called on a terminated start state");
  if (role == Role::opponent && !start.state.opponent) throw UsageError("opponent role requested without an opponent");
  GroupBatch batch;
  batch.segments.resize(cfg.group_size);
  ForwardCache cache;
  for (std::size_t g = 0; g < cfg.group_size; ++g) {
    Rng member = rng.split(shared_substream ? 0 : g).split(0);
    ArenaState state = start.state;
    ZoneRun run = start.run;
    RolloutSegment& seg = batch.segments[g];
    seg.context_id = start.id;
    for (int t = 0; t < cfg.t_group && !state.terminated(); ++t) {
      const Observation obs = observe(state, role);
      forward_into(params, obs, cache);
      const ActionSample a = sample_from(cache.head, member);
      const ActionPlan plan = ActionPlan::from_flat(a.action);
      std::optional<ActionPlan> other_plan;
      const bool other_present = role == Role::tracker ? state.opponent.has_value() : true;
      if (other && other_present) other_plan = other(state, other_role(role));
      StepEvents ev;
      if (role == Role::tracker) {
        ev = advance(state, plan, other_plan);
      } else {
        ev = advance(state, other_plan.value_or(zero_plan()), plan);
      }
      run.update(state, rewards);
      const double r = role_reward(role, state, ev, run, rewards).total;
      seg.observations.push_back(obs);
      seg.actions.push_back(a.action);
      seg.old_log_probs.push_back(a.log_prob);
      seg.rewards.push_back(r);
      seg.states.push_back(state);
      seg.segment_return += r;
    }
  }
  assign_advantages(batch, cfg);
  return batch;
}

struct GrpoDiagnostics {
  double loss = 0.0;
  double surrogate = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double kl = 0.0;
  double entropy = 0.0;
  std::size_t steps = 0;
};

struct GrpoLoss {
  double loss = 0.0;
  Gradient grad;
  GrpoDiagnostics diagnostics;
};

// Per-step clipped surrogate min(r A, clip(r, 1-eps, 1+eps) A) and whether
// the clipped branch is the active (lower) one.
struct ClippedTerm {
  double value = 0.0;
  bool clipped = false;
};

inline ClippedTerm clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  if (clipped < unclipped) return {clipped, true};
  return {unclipped, false};
}

// loss = -mean_steps(surrogate) - lambda_ent * H + lambda_kl * mean_steps(KL(pi || ref)).
inline GrpoLoss grpo_loss(const PolicyParams& params, const PolicyParams& ref, std::span<const GroupBatch> batches,
                          const GrpoConfig& cfg) {
  if (!(ref.shape == params.shape)) throw UsageError("reference shape mismatch");
  std::size_t n = 0;
  for (const auto& b : batches) {
    if (b.advantages.size() != b.segments.size()) throw UsageError("batch advantages not computed");
    for (const auto& s : b.segments) {
      if (s.observations.size() != s.actions.size() || s.old_log_probs.size() != s.actions.size())
        throw UsageError("segment lists have inconsistent lengths");
      n += s.size();
    }
  }
  GrpoLoss out{0.0, Gradient(params.shape), {}};
  if (n == 0) throw UsageError("grpo_loss needs at least one step");
  const double inv_n = 1.0 / static_cast<double>(n);

  ForwardCache cache;
  std::vector<double> scratch;
  double surrogate = 0.0, kl_sum = 0.0, ratio_sum = 0.0;
  std::size_t clipped = 0, step_index = 0;
  for (const auto& b : batches) {
    for (std::size_t si = 0; si < b.segments.size(); ++si) {
      const RolloutSegment& seg = b.segments[si];
      const double adv = b.advantages[si];
      for (std::size_t t = 0; t < seg.size(); ++t, ++step_index) {
        forward_into(params, seg.observations[t], cache);
        const GaussianHead ref_head = forward(ref, seg.observations[t]);
        const double lp = gaussian_log_prob(cache.head, seg.actions[t]);
        const double ratio = std::exp(lp - seg.old_log_probs[t]);
        if (!std::isfinite(ratio))
          throw TrainingError("non-finite probability ratio at step " + std::to_string(step_index));
        const ClippedTerm term = clipped_surrogate(ratio, adv, cfg.epsilon);
        surrogate += term.value;
        clipped += term.clipped ? 1 : 0;
        ratio_sum += ratio;
        const double kl = gaussian_kl(cache.head, ref_head);
        kl_sum += kl;

        LossAdjoints adj;
        adj.log_prob = term.clipped ? 0.0 : -inv_n * ratio * adv;
        adj.kl = cfg.lambda_kl * inv_n;
        ActionVector d_mean{}, d_log_std{};
        head_adjoints(cache.head, seg.actions[t], adj, &ref_head, d_mean, d_log_std);
        backward_head(params, cache, d_mean, d_log_std, out.grad, scratch);
      }
    }
  }
  const double h = entropy(params);
  for (double& g : out.grad.log_std()) g -= cfg.lambda_ent;

  out.diagnostics.surrogate = surrogate * inv_n;
  out.diagnostics.kl = kl_sum * inv_n;
  out.diagnostics.entropy = h;
  out.diagnostics.mean_ratio = ratio_sum * inv_n;
  out.diagnostics.clip_fraction = static_cast<double>(clipped) * inv_n;
  out.diagnostics.steps = n;
  out.loss = -out.diagnostics.surrogate - cfg.lambda_ent * h + cfg.lambda_kl * out.diagnostics.kl;
  out.diagnostics.loss = out.loss;
  return out;
}

inline GrpoLoss grpo_loss(const PolicyParams& params, const PolicyParams& ref, const GroupBatch& batch,
                          const GrpoConfig& cfg) {
  return grpo_loss(params, ref, std::span<const GroupBatch>(&batch, 1), cfg);
}

// ---------------------------------------------------------------------------
// Diagnostics stream: JSON lines, one record per iteration and agent.

inline constexpr int kDiagnosticsSchemaVersion = 1;

struct IterationRecord {
  std::size_t round = 0;
  std::size_t iteration = 0;
  std::string agent = "tracker";
  double mean_return = 0.0;
  double mean_advantage_std = 0.0;
  double clip_fraction = 0.0;
  double kl = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double loss = 0.0;
  double wall_time_s = 0.0;
};

inline json iteration_to_json(const IterationRecord& r) {
  return json{{"round", r.round},
              {"iteration", r.iteration},
              {"agent", r.agent},
              {"mean_return", r.mean_return},
              {"mean_advantage_std", r.mean_advantage_std},
              {"clip_fraction", r.clip_fraction},
              {"kl", r.kl},
              {"entropy", r.entropy},
              {"mean_ratio", r.mean_ratio},
              {"loss", r.loss},
              {"wall_time_s", r.wall_time_s}};
}

inline std::string diagnostics_header_line(const std::string& config_hash, std::uint64_t seed) {
  return json{{"header", file_header("diagnostics", config_hash, seed)}, {"schema_version", kDiagnosticsSchemaVersion}}
             .dump() +
         "\n";
}

inline std::string diagnostics_text(const std::vector<IterationRecord>& recs, const std::string& config_hash,
                                    std::uint64_t seed) {
  std::string out = diagnostics_header_line(config_hash, seed);
  for (const auto& r : recs) out += iteration_to_json(r).dump() + "\n";
  return out;
}

inline IterationRecord summarize_iteration(std::span<const GroupBatch> batches, const GrpoDiagnostics& d) {
  IterationRecord rec;
  double ret = 0.0, adv_sd = 0.0;
  std::size_t segs = 0;
  for (const auto& b : batches) {
    double m = 0.0;
    for (double a : b.advantages) m += a;
    m /= static_cast<double>(b.advantages.size());
    double v = 0.0;
    for (double a : b.advantages) v += (a - m) * (a - m);
    adv_sd += std::sqrt(v / static_cast<double>(b.advantages.size()));
    for (const auto& s : b.segments) {
      ret += s.segment_return;
      ++segs;
    }
  }
  rec.mean_return = segs ? ret / static_cast<double>(segs) : 0.0;
  rec.mean_advantage_std = batches.empty() ? 0.0 : adv_sd / static_cast<double>(batches.size());
  rec.clip_fraction = d.clip_fraction;
  rec.kl = d.kl;
  rec.entropy = d.entropy;
  rec.mean_ratio = d.mean_ratio;
  rec.loss = d.loss;
  return rec;
}

// ---------------------------------------------------------------------------
// Start contexts: replay the current mean policies from an episode start for a
// random number of steps and snapshot the result.

inline StartContext make_start_context(const EpisodeSpec& episode, std::uint64_t arena_seed, int warmup_steps,
                                       const Controller& tracker, const Controller& opponent,
                                       const RewardConfig& rewards, int t_group, std::size_t id) {
  ArenaSpec spec = episode.arena;
  spec.seed = arena_seed;
  ArenaState state = build_arena(spec);
  ZoneRun run;
  std::vector<std::pair<ArenaState, ZoneRun>> history;
  history.reserve(static_cast<std::size_t>(warmup_steps) + 1);
  history.emplace_back(state, run);
  for (int k = 0; k < warmup_steps; ++k) {
    std::optional<ActionPlan> op;
    if (state.opponent && opponent) op = opponent(state, Role::opponent);
    advance(state, tracker(state, Role::tracker), op);
    if (state.terminated()) break;
    run.update(state, rewards);
    history.emplace_back(state, run);
  }
  std::size_t pick = history.size() - 1;
  if (state.terminated()) pick = history.size() > static_cast<std::size_t>(t_group) ? history.size() - 1 - t_group : 0;
  return StartContext{history[pick].first, history[pick].second, id, 0, arena_seed};
}

// What the non-learning agent does during single-agent training.
// Rollout stream per training iteration. Shared with the multi-agent loop so a
// frozen opponent reproduces single-agent training exactly.
inline constexpr std::uint64_t kIterationStream = 0x67727030ULL;

using OpponentFactory = std::function<Controller(const EpisodeSpec&, std::uint64_t context_seed)>;

inline OpponentFactory suite_opponents(const CheckpointResolver& resolver = {}) {
  return [resolver](const EpisodeSpec& ep, std::uint64_t context_seed) -> Controller {
    std::shared_ptr<const PolicyParams> comp;
    if (ep.opponent.kind == BehaviorKind::random_interference)
      return random_controller(derive_seed(ep.opponent.motion_seed, {context_seed}), ep.opponent.speed);
    if (ep.opponent.kind == BehaviorKind::competitive) {
      if (!resolver) throw UsageError("competitive training opponent needs a resolver");
      comp = resolver(ep.opponent.checkpoint);
    }
    return make_opponent_controller(ep.opponent, comp);
  };
}

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<IterationRecord> diagnostics;
};

using DiagnosticsSink = std::function<void(const IterationRecord&)>;

inline std::vector<StartContext> sample_contexts(const std::vector<EpisodeSpec>& suite, std::uint64_t seed,
                                                 std::size_t iteration, std::size_t count, int t_group,
                                                 const Controller& tracker, const OpponentFactory& opponents,
                                                 const RewardConfig& rewards, std::size_t workers) {
  Rng rng(derive_seed(seed, {0x637478ULL, iteration}));
  struct Pick {
    std::size_t episode;
    std::uint64_t arena_seed;
    int warmup;
  };
  std::vector<Pick> picks;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t e = rng.below(suite.size());
    const int horizon = std::max(1, suite[e].arena.max_steps - t_group);
    picks.push_back({e, rng.next_u64(), static_cast<int>(rng.below(static_cast<std::uint64_t>(horizon)))});
  }
  std::vector<StartContext> contexts(count);
  parallel_for(count, workers, [&](std::size_t c) {
    const auto& p = picks[c];
    const Controller opp = opponents ? opponents(suite[p.episode], p.arena_seed) : Controller{};
    contexts[c] = make_start_context(suite[p.episode], p.arena_seed, p.warmup, tracker, opp, rewards, t_group, c);
    contexts[c].episode = p.episode;
  });
  return contexts;
}

// Single-agent GRPO from a behavior-cloned checkpoint. The BC parameters are
// both the initialization and the fixed KL reference.
inline TrainResult train_single_agent(const Checkpoint& bc, const std::vector<EpisodeSpec>& suite,
                                      const RewardConfig& rewards, const GrpoConfig& cfg, std::uint64_t seed,
                                      const OpponentFactory& opponents = {}, const DiagnosticsSink& sink = {}) {
  if (bc.phase != phase::kBc) throw UsageError("single-agent training requires a bc checkpoint, got '" + bc.phase + "'");
  if (suite.empty()) throw UsageError("training suite is empty");
  cfg.validate();
  rewards.validate();
  TrainResult result;
  result.checkpoint = bc;
  result.checkpoint.phase = phase::kSingleRl;
  result.checkpoint.seed = seed;
  PolicyParams& params = result.checkpoint.params;
  const PolicyParams& ref = bc.params;
  AdamState opt;
  const AdamConfig adam{cfg.learning_rate};
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    try {
      auto snapshot = std::make_shared<const PolicyParams>(params);
      const auto contexts = sample_contexts(suite, seed, it, cfg.segments_per_iteration, cfg.t_group,
                                            policy_mean_controller(snapshot), opponents, rewards, cfg.workers);
      std::vector<GroupBatch> batches(contexts.size());
      const Rng it_rng(derive_seed(seed, {kIterationStream, it}));
      parallel_for(contexts.size(), cfg.workers, [&](std::size_t c) {
        const auto& ctx = contexts[c];
        const Controller opp = opponents ? opponents(suite[ctx.episode], ctx.context_seed) : Controller{};
        batches[c] = collect_group(ctx, *snapshot, Role::tracker, opp, rewards, cfg, it_rng.split(c));
      });
      GrpoDiagnostics last;
      for (std::size_t e = 0; e < cfg.update_epochs; ++e) {
        GrpoLoss l = grpo_loss(params, ref, batches, cfg);
        adam_step(params, l.grad, opt, adam);
        if (e == 0) last = l.diagnostics;
      }
      IterationRecord rec = summarize_iteration(batches, last);
      rec.iteration = it;
      rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.diagnostics.push_back(rec);
      if (sink) sink(rec);
    } catch (const TrainingError& e) {
      throw TrainingError("iteration " + std::to_string(it) + ": " + e.what());
    }
  }
  return result;
}

}  // namespace comatrack
