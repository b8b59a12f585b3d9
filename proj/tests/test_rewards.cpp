#include <cmath>

#include <gtest/gtest.h>

#include "comatrack/rewards.hpp"
#include "test_support.hpp"

using namespace comatrack;
using comatrack::testing::empty_spec;

namespace {

// Written out separately from the library on purpose.
double gaussian_oracle(double d, double mu, double sigma, double w) {
  const double diff = d - mu;
  return w * std::exp(-(diff * diff) / (2.0 * sigma * sigma));
}

}  // namespace

TEST(DistanceReward, Examples) {
  EXPECT_EQ(distance_reward(2.25, 2.25, 0.75, 1.0), 1.0);
  EXPECT_NEAR(distance_reward(3.0, 2.25, 0.75, 1.0), 0.6065307, 1e-7);
  EXPECT_NEAR(distance_reward(0.75, 2.25, 0.75, 1.0), 0.1353353, 1e-7);
  EXPECT_THROW(distance_reward(1.0, 2.25, 0.0, 1.0), ConfigError);
  EXPECT_THROW(distance_reward(1.0, 2.25, -1.0, 1.0), ConfigError);
}

TEST(DistanceReward, ClosedFormGrid) {
  const RewardConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    const double d = 8.0 * i / 999.0;
    for (double mu : {cfg.d_opt_trk, cfg.d_opt_cmp}) {
      for (double w : {1.0, 0.3, 2.5}) {
        EXPECT_NEAR(distance_reward(d, mu, cfg.sigma, w), gaussian_oracle(d, mu, cfg.sigma, w), 1e-12);
      }
    }
  }
}

TEST(DistanceReward, PeaksAtRoleOptimum) {
  const RewardConfig cfg;
  for (double mu : {cfg.d_opt_trk, cfg.d_opt_cmp}) {
    const double peak = distance_reward(mu, mu, cfg.sigma, 1.0);
    EXPECT_EQ(peak, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const double d = 8.0 * i / 999.0;
      if (d != mu) EXPECT_LT(distance_reward(d, mu, cfg.sigma, 1.0), peak);
      EXPECT_GT(distance_reward(d, mu, cfg.sigma, 1.0), 0.0);
    }
  }
  EXPECT_EQ(cfg.d_opt_trk, 2.25);
  EXPECT_EQ(cfg.d_opt_cmp, 1.25);
}

TEST(DistanceReward, SymmetricAboutOptimum) {
  for (int i = 0; i < 100; ++i) {
    const double off = 0.02 * i;
    EXPECT_NEAR(distance_reward(2.25 + off, 2.25, 0.75, 1.0), distance_reward(2.25 - off, 2.25, 0.75, 1.0), 1e-15);
  }
}

TEST(FacingReward, Examples) {
  RewardConfig cfg;
  ArenaSpec spec = empty_spec();
  spec.fov_half_angle = kPi;
  EXPECT_DOUBLE_EQ(facing_reward(build_arena(spec), Role::tracker, cfg), cfg.w_facing);

  spec.tracker_spawn.heading = kPi / 2.0;  // target now at bearing -pi/2
  EXPECT_NEAR(facing_reward(build_arena(spec), Role::tracker, cfg), 0.0, 1e-15);

  spec.tracker_spawn.heading = kPi / 3.0;
  EXPECT_NEAR(facing_reward(build_arena(spec), Role::tracker, cfg), cfg.w_facing * 0.5, 1e-12);

  ArenaSpec blocked = empty_spec();
  blocked.obstacles.push_back(CircleObstacle{{1.0, 0.0}, 0.3});
  EXPECT_EQ(facing_reward(build_arena(blocked), Role::tracker, cfg), 0.0);
}

TEST(PersistenceBonus, Threshold) {
  RewardConfig cfg;
  EXPECT_EQ(persistence_bonus(0, cfg), 0.0);
  EXPECT_EQ(persistence_bonus(cfg.persist_min_run, cfg), cfg.w_persist);
  EXPECT_EQ(persistence_bonus(cfg.persist_min_run - 1, cfg), 0.0);
  EXPECT_EQ(persistence_bonus(cfg.persist_min_run + 40, cfg), cfg.w_persist);
}

TEST(TerminalReward, Table) {
  RewardConfig cfg;
  EXPECT_EQ(terminal_reward(TerminationCause::success, cfg), cfg.r_success);
  EXPECT_EQ(terminal_reward(TerminationCause::collision, cfg), cfg.r_collision);
  EXPECT_EQ(terminal_reward(TerminationCause::target_lost, cfg), cfg.r_target_lost);
  EXPECT_EQ(terminal_reward(TerminationCause::none, cfg), 0.0);
  EXPECT_EQ(terminal_reward(TerminationCause::timeout, cfg), 0.0);
}

TEST(TrackerReward, ComponentsSumWithoutOpponent) {
  RewardConfig cfg;
  ArenaSpec spec = empty_spec({2.25, 0.0});
  const RewardBreakdown r = tracker_reward(build_arena(spec), cfg.persist_min_run, TerminationCause::none, cfg);
  EXPECT_EQ(r.distance, cfg.w_distance);
  EXPECT_EQ(r.facing, cfg.w_facing);
  EXPECT_EQ(r.persistence, cfg.w_persist);
  EXPECT_EQ(r.safety, 0.0);
  EXPECT_EQ(r.terminal, 0.0);
  EXPECT_EQ(r.total, cfg.w_distance + cfg.w_facing + cfg.w_persist);
}

TEST(TrackerReward, SafetyHinge) {
  RewardConfig cfg;
  ArenaSpec spec = empty_spec({0.0, 2.25});
  spec.opponent_spawn = Pose{cfg.d_safe_int, 0.0, 0.0};
  EXPECT_EQ(tracker_reward(build_arena(spec), 0, TerminationCause::none, cfg).safety, 0.0);

  spec.opponent_spawn = Pose{cfg.d_safe_int / 2.0, 0.0, 0.0};
  EXPECT_NEAR(tracker_reward(build_arena(spec), 0, TerminationCause::none, cfg).safety, -cfg.w_safety / 2.0, 1e-15);

  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double d = rng.uniform(0.0, 4.0);
    const double want = d >= cfg.d_safe_int ? 0.0 : -cfg.w_safety * (1.0 - d / cfg.d_safe_int);
    EXPECT_NEAR(safety_term(d, cfg), want, 1e-15);
    EXPECT_LE(safety_term(d, cfg), 0.0);
  }
}

TEST(OpponentReward, Examples) {
  RewardConfig cfg;
  ArenaSpec spec = empty_spec({0.0, 3.0});
  spec.opponent_spawn = Pose{0.0, 3.0 - 1.25, kPi / 2.0};
  EXPECT_EQ(opponent_reward(build_arena(spec), 0, TerminationCause::none, cfg).distance, cfg.w_distance);

  spec.opponent_spawn = Pose{0.0, 1.0, kPi / 2.0};
  EXPECT_NEAR(opponent_reward(build_arena(spec), 0, TerminationCause::none, cfg).distance, 0.6065307, 1e-7);
  EXPECT_EQ(opponent_reward(build_arena(spec), 0, TerminationCause::collision, cfg).terminal, cfg.r_collision);
  EXPECT_EQ(opponent_reward(build_arena(spec), 0, TerminationCause::none, cfg).safety, 0.0);

  EXPECT_THROW(opponent_reward(build_arena(empty_spec()), 0, TerminationCause::none, cfg), UsageError);
}

TEST(Rewards, BreakdownSumsExactlyOnRandomStates) {
  RewardConfig cfg;
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    ArenaSpec spec = empty_spec({rng.uniform(-5, 5), rng.uniform(-5, 5)});
    spec.tracker_spawn = {rng.uniform(-8, -6), rng.uniform(-8, 8), rng.uniform(-kPi, kPi)};
    spec.opponent_spawn = Pose{rng.uniform(6, 8), rng.uniform(-8, 8), rng.uniform(-kPi, kPi)};
    const ArenaState s = build_arena(spec);
    const int run = static_cast<int>(rng.below(10));
    for (const RewardBreakdown& r : {tracker_reward(s, run, TerminationCause::none, cfg),
                                     opponent_reward(s, run, TerminationCause::success, cfg)}) {
      EXPECT_EQ(r.total, r.distance + r.facing + r.persistence + r.safety + r.terminal);
      EXPECT_LE(r.safety, 0.0);
    }
  }
}

TEST(Rewards, AsymmetryAtEqualTargetDistance) {
  // Same distance d to the target for both agents. The opponent's Gaussian is
  // centred nearer, so it scores higher exactly when d is below the midpoint
  // of the two optima (1.75 m) and lower above it.
  RewardConfig cfg;
  const double mid = 0.5 * (cfg.d_opt_trk + cfg.d_opt_cmp);
  for (int i = 0; i <= 100; ++i) {
    const double d = 0.5 + i * 0.03;
    ArenaSpec spec = empty_spec({0.0, 0.0});
    spec.target_spawn = {0.0, 0.0, 0.0};
    spec.tracker_spawn = {-d, 0.0, 0.0};
    spec.opponent_spawn = Pose{d, 0.0, kPi};
    const ArenaState s = build_arena(spec);
    const double opp = opponent_reward(s, 0, TerminationCause::none, cfg).distance;
    const double trk = tracker_reward(s, 0, TerminationCause::none, cfg).distance;
    if (d < mid - 1e-9) EXPECT_GT(opp, trk) << d;
    if (d > mid + 1e-9) EXPECT_LT(opp, trk) << d;
  }
}

TEST(RewardConfig, ValidateRejectsBadValues) {
  RewardConfig cfg;
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RewardConfig{};
  cfg.r_collision = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(RewardConfig{}.validate());
}
