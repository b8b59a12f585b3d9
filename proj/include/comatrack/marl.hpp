#pragma once

// Competitive co-training. Tracker and opponent start from the same
// behavior-cloned checkpoint, share joint rollouts, and each takes a GRPO step
// on its own reward (tracker: standard objective plus a proximity penalty;
// opponent: nearer preferred standoff). The other agent's parameters are
// frozen while a batch is collected; both update after collection.

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "comatrack/grpo.hpp"

namespace comatrack {

struct MarlConfig {
  GrpoConfig tracker;
  GrpoConfig opponent;
  std::size_t rounds = 1;
  std::size_t iterations_per_round = 10;
  bool opponent_update = true;
  // Scripted opponent behaviors for the first rounds (static or random); the
  // learned opponent takes over once the list is exhausted.
  std::vector<BehaviorKind> curriculum;
  double random_opponent_speed = 0.2;

  void validate() const {
    if (rounds < 1) throw ConfigError("marl.rounds must be >= 1");
    tracker.validate();
    opponent.validate();
    if (tracker.group_size != opponent.group_size || tracker.t_group != opponent.t_group)
      throw ConfigError("marl: tracker and opponent must share group_size and t_group");
    for (BehaviorKind k : curriculum)
      if (k == BehaviorKind::competitive) throw ConfigError("marl.curriculum entries must be static or random");
  }
};

// How the opponent acts during a joint rollout.
struct OpponentActor {
  const PolicyParams* params = nullptr;  // learned opponent
  bool stochastic = true;                // sample (learning) or act with the mean (frozen)
  Controller scripted;                   // used instead of params when set
};

struct JointBatch {
  GroupBatch tracker;
  GroupBatch opponent;  // empty when the opponent is scripted or frozen
};

// G joint trajectories from one start context. Member g samples the tracker
// from rng.split(g).split(0) and the opponent from rng.split(g).split(1), so a
// non-sampling opponent leaves the tracker's stream identical to collect_group.
inline JointBatch joint_rollout(const StartContext& start, const PolicyParams& tracker, const OpponentActor& opponent,
                                const RewardConfig& rewards, const GrpoConfig& cfg, const Rng& rng) {
  if (!start.state.opponent) throw UsageError("joint_rollout requires an arena with an opponent");
  if (start.state.terminated()) throw UsageError("joint_rollout called on a terminated start state");
  if (!opponent.scripted && !opponent.params) throw UsageError("joint_rollout needs opponent parameters or a script");
  const bool opponent_learns = !opponent.scripted && opponent.stochastic;
  JointBatch out;
  out.tracker.segments.resize(cfg.group_size);
  if (opponent_learns) out.opponent.segments.resize(cfg.group_size);
  ForwardCache cache;
  for (std::size_t g = 0; g < cfg.group_size; ++g) {
    Rng trk_rng = rng.split(g).split(0);
    Rng opp_rng = rng.split(g).split(1);
    ArenaState state = start.state;
    ZoneRun run = start.run;
    RolloutSegment& ts = out.tracker.segments[g];
    ts.context_id = start.id;
    RolloutSegment* os = opponent_learns ? &out.opponent.segments[g] : nullptr;
    if (os) os->context_id = start.id;
    for (int t = 0; t < cfg.t_group && !state.terminated(); ++t) {
      const Observation tobs = observe(state, Role::tracker);
      forward_into(tracker, tobs, cache);
      const ActionSample ta = sample_from(cache.head, trk_rng);

      Observation oobs;
      ActionSample oa;
      ActionPlan oplan;
      if (opponent.scripted) {
        oplan = opponent.scripted(state, Role::opponent);
      } else {
        oobs = observe(state, Role::opponent);
        forward_into(*opponent.params, oobs, cache);
        if (opponent_learns) {
          oa = sample_from(cache.head, opp_rng);
          oplan = ActionPlan::from_flat(oa.action);
        } else {
          oplan = ActionPlan::from_flat(cache.head.mean);
        }
      }

      const StepEvents ev = advance(state, ActionPlan::from_flat(ta.action), oplan);
      run.update(state, rewards);
      const double tr = tracker_reward(state, run.tracker, ev.cause, rewards).total;
      ts.observations.push_back(tobs);
      ts.actions.push_back(ta.action);
      ts.old_log_probs.push_back(ta.log_prob);
      ts.rewards.push_back(tr);
      ts.states.push_back(state);
      ts.segment_return += tr;
      if (os) {
        const double orw = opponent_reward(state, run.opponent, opponent_cause(ev), rewards).total;
        os->observations.push_back(oobs);
        os->actions.push_back(oa.action);
        os->old_log_probs.push_back(oa.log_prob);
        os->rewards.push_back(orw);
        os->states.push_back(state);
        os->segment_return += orw;
      }
    }
  }
  assign_advantages(out.tracker, cfg);
  if (opponent_learns) assign_advantages(out.opponent, cfg);
  return out;
}

struct MarlResult {
  Checkpoint tracker;
  Checkpoint opponent;
  std::vector<IterationRecord> diagnostics;  // tracker and opponent records interleaved
};

inline MarlResult train_multi_agent(const Checkpoint& bc, const std::vector<EpisodeSpec>& suite,
                                    const RewardConfig& rewards, const MarlConfig& cfg, std::uint64_t seed,
                                    const DiagnosticsSink& sink = {}) {
  if (bc.phase != phase::kBc) throw UsageError("multi-agent training requires a bc checkpoint, got '" + bc.phase + "'");
  if (suite.empty()) throw UsageError("training suite is empty");
  for (const auto& ep : suite)
    if (!ep.arena.opponent_spawn) throw UsageError("multi-agent training suite episodes need an opponent spawn");
  cfg.validate();
  rewards.validate();

  MarlResult result;
  result.tracker = bc;
  result.tracker.phase = phase::kMultiRl;
  result.tracker.seed = seed;
  result.opponent = bc;
  result.opponent.phase = phase::kMultiRlOpponent;
  result.opponent.seed = seed;
  PolicyParams& trk = result.tracker.params;
  PolicyParams& opp = result.opponent.params;
  const PolicyParams& ref = bc.params;
  AdamState trk_opt, opp_opt;
  const AdamConfig trk_adam{cfg.tracker.learning_rate};
  const AdamConfig opp_adam{cfg.opponent.learning_rate};
  const std::size_t workers = cfg.tracker.workers;
  const auto t0 = std::chrono::steady_clock::now();

  std::size_t global = 0;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    const bool scripted_round = round < cfg.curriculum.size();
    const std::optional<BehaviorKind> script =
        scripted_round ? std::optional<BehaviorKind>(cfg.curriculum[round]) : std::nullopt;
    const bool opponent_learns = !scripted_round && cfg.opponent_update;
    for (std::size_t it = 0; it < cfg.iterations_per_round; ++it, ++global) {
      try {
        auto trk_snap = std::make_shared<const PolicyParams>(trk);
        auto opp_snap = std::make_shared<const PolicyParams>(opp);
        auto scripted_for = [&](std::uint64_t context_seed) -> Controller {
          if (!script) return {};
          if (*script == BehaviorKind::random_interference)
            return random_controller(derive_seed(seed, {0x726e64ULL, context_seed}), cfg.random_opponent_speed);
          return static_controller();
        };
        const OpponentFactory warm_opp = [&](const EpisodeSpec&, std::uint64_t context_seed) -> Controller {
          if (script) return scripted_for(context_seed);
          return policy_mean_controller(opp_snap);
        };
        const auto contexts =
            sample_contexts(suite, seed, global, cfg.tracker.segments_per_iteration, cfg.tracker.t_group,
                            policy_mean_controller(trk_snap), warm_opp, rewards, workers);

        std::vector<JointBatch> joint(contexts.size());
        const Rng it_rng(derive_seed(seed, {kIterationStream, global}));
        parallel_for(contexts.size(), workers, [&](std::size_t c) {
          OpponentActor actor;
          actor.scripted = scripted_for(contexts[c].context_seed);
          actor.params = opp_snap.get();
          actor.stochastic = opponent_learns;
          joint[c] = joint_rollout(contexts[c], *trk_snap, actor, rewards, cfg.tracker, it_rng.split(c));
        });

        std::vector<GroupBatch> trk_batches, opp_batches;
        for (auto& j : joint) {
          trk_batches.push_back(std::move(j.tracker));
          if (opponent_learns) opp_batches.push_back(std::move(j.opponent));
        }

        GrpoDiagnostics trk_diag;
        for (std::size_t e = 0; e < cfg.tracker.update_epochs; ++e) {
          GrpoLoss l = grpo_loss(trk, ref, trk_batches, cfg.tracker);
          adam_step(trk, l.grad, trk_opt, trk_adam);
          if (e == 0) trk_diag = l.diagnostics;
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        IterationRecord tr = summarize_iteration(trk_batches, trk_diag);
        tr.round = round;
        tr.iteration = global;
        tr.agent = "tracker";
        tr.wall_time_s = wall;
        result.diagnostics.push_back(tr);
        if (sink) sink(tr);

        if (opponent_learns) {
          GrpoDiagnostics opp_diag;
          for (std::size_t e = 0; e < cfg.opponent.update_epochs; ++e) {
            GrpoLoss l = grpo_loss(opp, ref, opp_batches, cfg.opponent);
            adam_step(opp, l.grad, opp_opt, opp_adam);
            if (e == 0) opp_diag = l.diagnostics;
          }
          IterationRecord orec = summarize_iteration(opp_batches, opp_diag);
          orec.round = round;
          orec.iteration = global;
          orec.agent = "opponent";
          orec.wall_time_s = wall;
          result.diagnostics.push_back(orec);
          if (sink) sink(orec);
        }
      } catch (const TrainingError& e) {
        throw TrainingError("round " + std::to_string(round) + ", iteration " + std::to_string(global) + ": " + e.what());
      }
    }
  }
  return result;
}

}  // namespace comatrack
