#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "comatrack/bench.hpp"
#include "comatrack/marl.hpp"
#include "test_support.hpp"

using namespace comatrack;
using namespace comatrack::testing;

namespace {

const MlpShape kFull;

Checkpoint bc_checkpoint(std::uint64_t seed) {
  Checkpoint c;
  c.params = init_policy(kFull, seed);
  c.phase = phase::kBc;
  return c;
}

std::vector<StartContext> contexts(std::size_t n) {
  const auto suite = generate_suite(21, n, BehaviorKind::static_obstacle, ArenaTemplate{});
  std::vector<StartContext> out;
  for (std::size_t e = 0; e < n; ++e)
    out.push_back(make_start_context(suite[e], e, 3, static_controller(), static_controller(), RewardConfig{}, 10, e));
  return out;
}

void expect_same_segments(const GroupBatch& a, const GroupBatch& b) {
  ASSERT_EQ(a.segments.size(), b.segments.size());
  for (std::size_t g = 0; g < a.segments.size(); ++g) {
    const auto& x = a.segments[g];
    const auto& y = b.segments[g];
    EXPECT_EQ(x.actions, y.actions) << "member " << g;
    EXPECT_EQ(x.old_log_probs, y.old_log_probs) << "member " << g;
    EXPECT_EQ(x.rewards, y.rewards) << "member " << g;
    EXPECT_EQ(x.segment_return, y.segment_return) << "member " << g;
  }
  EXPECT_EQ(a.advantages, b.advantages);
}

MarlConfig small_marl() {
  MarlConfig m;
  m.rounds = 1;
  m.iterations_per_round = 3;
  m.tracker.segments_per_iteration = 3;
  m.opponent.segments_per_iteration = 3;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Joint rollouts

TEST(JointRollout, ScriptedStaticOpponentMatchesCollectGroup) {
  const PolicyParams trk = init_policy(kFull, 1);
  OpponentActor actor;
  actor.scripted = static_controller();
  for (const auto& ctx : contexts(6)) {
    const Rng rng(ctx.id + 100);
    const JointBatch j = joint_rollout(ctx, trk, actor, RewardConfig{}, GrpoConfig{}, rng);
    EXPECT_TRUE(j.opponent.segments.empty());
    expect_same_segments(
        j.tracker, collect_group(ctx, trk, Role::tracker, static_controller(), RewardConfig{}, GrpoConfig{}, rng));
  }
}

TEST(JointRollout, FrozenOpponentMatchesMeanController) {
  const PolicyParams trk = init_policy(kFull, 1);
  auto opp = std::make_shared<const PolicyParams>(init_policy(kFull, 2));
  OpponentActor actor;
  actor.params = opp.get();
  actor.stochastic = false;
  for (const auto& ctx : contexts(6)) {
    const Rng rng(ctx.id + 200);
    const JointBatch j = joint_rollout(ctx, trk, actor, RewardConfig{}, GrpoConfig{}, rng);
    EXPECT_TRUE(j.opponent.segments.empty());
    expect_same_segments(j.tracker, collect_group(ctx, trk, Role::tracker, policy_mean_controller(opp),
                                                  RewardConfig{}, GrpoConfig{}, rng));
  }
}

TEST(JointRollout, LearningOpponentSharesTrajectory) {
  const PolicyParams trk = init_policy(kFull, 1);
  const PolicyParams opp = init_policy(kFull, 2);
  OpponentActor actor;
  actor.params = &opp;
  const RewardConfig rewards;
  for (const auto& ctx : contexts(6)) {
    const Rng rng(ctx.id + 300);
    const JointBatch j = joint_rollout(ctx, trk, actor, rewards, GrpoConfig{}, rng);
    ASSERT_EQ(j.opponent.segments.size(), j.tracker.segments.size());
    for (std::size_t g = 0; g < j.tracker.segments.size(); ++g) {
      const auto& ts = j.tracker.segments[g];
      const auto& os = j.opponent.segments[g];
      ASSERT_EQ(ts.size(), os.size());
      EXPECT_EQ(ts.states, os.states);
      EXPECT_EQ(os.observations[0].values, observe(ctx.state, Role::opponent).values);
      for (std::size_t t = 0; t < os.size(); ++t) {
        EXPECT_NEAR(os.old_log_probs[t], log_prob(opp, os.observations[t], os.actions[t]), 1e-12);
        // Each agent is scored by its own reward: distance terms peak at different ranges.
        const auto d = distances(ts.states[t]);
        const double want_trk = distance_reward(d.d_trk, rewards.d_opt_trk, rewards.sigma, rewards.w_distance);
        const double want_opp = distance_reward(*d.d_cmp, rewards.d_opt_cmp, rewards.sigma, rewards.w_distance);
        EXPECT_NEAR(tracker_reward(ts.states[t], 0, TerminationCause::none, rewards).distance, want_trk, 1e-12);
        EXPECT_NEAR(opponent_reward(os.states[t], 0, TerminationCause::none, rewards).distance, want_opp, 1e-12);
      }
    }
    EXPECT_EQ(joint_rollout(ctx, trk, actor, rewards, GrpoConfig{}, rng).opponent.segments[0].actions,
              j.opponent.segments[0].actions);
  }
}

TEST(JointRollout, Preconditions) {
  const PolicyParams trk = init_policy(kFull, 1);
  OpponentActor none;
  const StartContext ctx = contexts(1)[0];
  EXPECT_THROW(joint_rollout(ctx, trk, none, RewardConfig{}, GrpoConfig{}, Rng(1)), UsageError);
  StartContext lone{build_arena(empty_spec()), {}, 0, 0, 0};
  OpponentActor scripted;
  scripted.scripted = static_controller();
  EXPECT_THROW(joint_rollout(lone, trk, scripted, RewardConfig{}, GrpoConfig{}, Rng(1)), UsageError);
}

// ---------------------------------------------------------------------------
// Training

TEST(TrainMultiAgent, FrozenOpponentReducesToSingleAgent) {
  const auto suite = generate_suite(22, 8, BehaviorKind::static_obstacle, ArenaTemplate{});
  const Checkpoint bc = bc_checkpoint(3);
  MarlConfig m = small_marl();
  m.opponent_update = false;
  const MarlResult multi = train_multi_agent(bc, suite, RewardConfig{}, m, 9);

  GrpoConfig g = m.tracker;
  g.iterations = m.iterations_per_round;
  auto frozen = std::make_shared<const PolicyParams>(bc.params);
  const TrainResult single = train_single_agent(
      bc, suite, RewardConfig{}, g, 9,
      [frozen](const EpisodeSpec&, std::uint64_t) { return policy_mean_controller(frozen); });

  EXPECT_EQ(multi.tracker.params, single.checkpoint.params);
  ASSERT_EQ(multi.diagnostics.size(), single.diagnostics.size());
  for (std::size_t i = 0; i < single.diagnostics.size(); ++i) {
    IterationRecord a = multi.diagnostics[i], b = single.diagnostics[i];
    a.wall_time_s = b.wall_time_s = 0.0;
    EXPECT_EQ(a.agent, "tracker");
    EXPECT_EQ(iteration_to_json(a).dump(), iteration_to_json(b).dump());
  }
  EXPECT_EQ(multi.opponent.params, bc.params);
  EXPECT_EQ(multi.opponent.phase, phase::kMultiRlOpponent);
  EXPECT_EQ(multi.tracker.phase, phase::kMultiRl);
}

TEST(TrainMultiAgent, AgentsUpdateFromTheirOwnBatches) {
  // Collection uses snapshots from before the update, so after one iteration
  // the tracker cannot depend on anything about the opponent's optimizer.
  const auto suite = generate_suite(23, 6, BehaviorKind::static_obstacle, ArenaTemplate{});
  const Checkpoint bc = bc_checkpoint(4);
  MarlConfig a = small_marl();
  a.iterations_per_round = 1;
  MarlConfig b = a;
  b.opponent.learning_rate = 10.0 * a.opponent.learning_rate;
  b.opponent.lambda_kl = 0.0;
  const MarlResult ra = train_multi_agent(bc, suite, RewardConfig{}, a, 5);
  const MarlResult rb = train_multi_agent(bc, suite, RewardConfig{}, b, 5);
  EXPECT_EQ(ra.tracker.params, rb.tracker.params);
  EXPECT_NE(ra.opponent.params, rb.opponent.params);
  EXPECT_NE(ra.opponent.params, bc.params);
  ASSERT_EQ(ra.diagnostics.size(), 2u);
  EXPECT_EQ(ra.diagnostics[0].agent, "tracker");
  EXPECT_EQ(ra.diagnostics[1].agent, "opponent");
}

TEST(TrainMultiAgent, DeterministicAcrossRunsAndWorkers) {
  const auto suite = generate_suite(24, 6, BehaviorKind::static_obstacle, ArenaTemplate{});
  const Checkpoint bc = bc_checkpoint(5);
  MarlConfig m = small_marl();
  m.rounds = 2;
  m.iterations_per_round = 2;
  m.curriculum = {BehaviorKind::random_interference};
  const MarlResult a = train_multi_agent(bc, suite, RewardConfig{}, m, 7);
  const MarlResult b = train_multi_agent(bc, suite, RewardConfig{}, m, 7);
  m.tracker.workers = 3;
  const MarlResult c = train_multi_agent(bc, suite, RewardConfig{}, m, 7);
  for (const MarlResult* r : {&b, &c}) {
    EXPECT_EQ(checkpoint_text(a.tracker), checkpoint_text(r->tracker));
    EXPECT_EQ(checkpoint_text(a.opponent), checkpoint_text(r->opponent));
    ASSERT_EQ(a.diagnostics.size(), r->diagnostics.size());
  }
  // Round 0 is scripted (tracker only), round 1 trains both.
  EXPECT_EQ(a.diagnostics.size(), 2u + 4u);
  EXPECT_EQ(a.diagnostics[0].round, 0u);
  EXPECT_EQ(a.diagnostics.back().round, 1u);
  EXPECT_EQ(a.diagnostics.back().agent, "opponent");
}

TEST(TrainMultiAgent, ConfigAndUsageErrors) {
  const auto suite = generate_suite(25, 2, BehaviorKind::static_obstacle, ArenaTemplate{});
  MarlConfig m = small_marl();
  m.rounds = 0;
  EXPECT_THROW(m.validate(), ConfigError);
  m = small_marl();
  m.curriculum = {BehaviorKind::competitive};
  EXPECT_THROW(m.validate(), ConfigError);
  m = small_marl();
  m.opponent.group_size = 4;
  EXPECT_THROW(m.validate(), ConfigError);

  Checkpoint init = bc_checkpoint(1);
  init.phase = phase::kInit;
  EXPECT_THROW(train_multi_agent(init, suite, RewardConfig{}, small_marl(), 1), UsageError);
  auto lone = suite;
  lone[0].arena = without_opponent(lone[0].arena);
  EXPECT_THROW(train_multi_agent(bc_checkpoint(1), lone, RewardConfig{}, small_marl(), 1), UsageError);
}
