#include <cmath>
#include <variant>

#include <gtest/gtest.h>

#include "comatrack/arena.hpp"
#include "comatrack/arena_io.hpp"
#include "comatrack/bench.hpp"
#include "test_support.hpp"

using namespace comatrack;
using comatrack::testing::empty_spec;

namespace {

ActionPlan plan_of(Waypoint w) {
  ActionPlan p;
  p.waypoints[0] = w;
  return p;
}

// Independent overlap check: penetration depth of a disc into everything else.
double worst_overlap(const ArenaState& s) {
  const ArenaSpec& spec = *s.spec;
  double worst = 0.0;
  auto disc_vs_world = [&](const AgentBody& b) {
    const Vec2 p = b.pose.position();
    worst = std::max(worst, b.radius - (p.x - spec.bounds.lo.x));
    worst = std::max(worst, b.radius - (spec.bounds.hi.x - p.x));
    worst = std::max(worst, b.radius - (p.y - spec.bounds.lo.y));
    worst = std::max(worst, b.radius - (spec.bounds.hi.y - p.y));
    for (const auto& o : spec.obstacles) {
      double gap;
      if (const auto* c = std::get_if<CircleObstacle>(&o)) {
        gap = distance(p, c->center) - c->radius;
      } else {
        const Rect& r = std::get<RectObstacle>(o).box;
        const Vec2 q{std::clamp(p.x, r.lo.x, r.hi.x), std::clamp(p.y, r.lo.y, r.hi.y)};
        gap = (q == p) ? -1.0 : distance(p, q);
      }
      worst = std::max(worst, b.radius - gap);
    }
  };
  auto pair = [&](const AgentBody& a, const AgentBody& b) {
    worst = std::max(worst, a.radius + b.radius - distance(a.pose.position(), b.pose.position()));
  };
  disc_vs_world(s.tracker);
  pair(s.tracker, s.target);
  if (s.opponent) {
    disc_vs_world(*s.opponent);
    pair(*s.opponent, s.target);
    pair(s.tracker, *s.opponent);
  }
  return worst;
}

ActionPlan random_plan(Rng& rng) {
  ActionPlan p;
  for (auto& w : p.waypoints) w = {rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), rng.uniform(-1.2, 1.2)};
  return p;
}

const std::vector<EpisodeSpec>& scenario_bank() {
  static const auto bank = generate_suite(20240601, 1000, BehaviorKind::random_interference, ArenaTemplate{});
  return bank;
}

}  // namespace

TEST(ArenaBuild, EmptyArenaStartsClean) {
  const ArenaState s = build_arena(empty_spec());
  EXPECT_EQ(s.step, 0);
  EXPECT_FALSE(s.events.tracker_collided);
  EXPECT_FALSE(s.terminated());
  EXPECT_EQ(s.events.cause, TerminationCause::none);
}

TEST(ArenaBuild, TrackerInsideObstacleIsRejected) {
  ArenaSpec spec = empty_spec();
  spec.obstacles.push_back(CircleObstacle{{0.1, 0.0}, 0.5});
  try {
    build_arena(spec);
    FAIL() << "expected a construction error";
  } catch (const ConstructionError& e) {
    EXPECT_NE(std::string(e.what()).find("tracker spawn"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("obstacle 0"), std::string::npos);
  }
}

TEST(ArenaBuild, OutOfBoundsObstacleIsRejected) {
  ArenaSpec spec = empty_spec();
  spec.obstacles.push_back(RectObstacle{Rect{{9.0, 0.0}, {11.0, 1.0}}});
  EXPECT_THROW(build_arena(spec), ConstructionError);
}

TEST(ArenaBuild, SameSpecGivesIdenticalStates) {
  for (std::size_t i = 0; i < 20; ++i) {
    const ArenaSpec& spec = scenario_bank()[i].arena;
    const ArenaState a = build_arena(spec), b = build_arena(spec);
    EXPECT_EQ(a, b);
    EXPECT_EQ(arena_state_to_json(a).dump(), arena_state_to_json(b).dump());
  }
}

TEST(ArenaStep, ZeroPlanLeavesAgentsAndParkedTargetInPlace) {
  ArenaSpec spec = empty_spec();
  spec.opponent_spawn = Pose{0.0, 1.0, 0.3};
  ArenaState s = build_arena(spec);
  const ArenaState before = s;
  advance(s, ActionPlan{}, ActionPlan{});
  EXPECT_EQ(s.tracker.pose, before.tracker.pose);
  EXPECT_EQ(s.opponent->pose, before.opponent->pose);
  EXPECT_EQ(s.target.pose.position(), before.target.pose.position());
  EXPECT_EQ(s.step, 1);
}

TEST(ArenaStep, ZeroPlanWithScriptedTargetOnlyMovesTarget) {
  ArenaSpec spec = empty_spec();
  spec.target_script = {{{5.0, 0.0}}, 0.25, false};
  ArenaState s = build_arena(spec);
  advance(s, ActionPlan{});
  EXPECT_EQ(s.tracker.pose, spec.tracker_spawn);
  EXPECT_NEAR(s.target.pose.x, 2.25, 1e-12);
  EXPECT_NEAR(s.target.pose.y, 0.0, 1e-12);
}

TEST(ArenaStep, FrameIdentity) {
  ArenaSpec spec = empty_spec({6.0, 6.0});
  ArenaState s = build_arena(spec);
  advance(s, plan_of({1.0, 0.0, 0.0}));  // clamped to the 0.5 m cap
  EXPECT_NEAR(s.tracker.pose.x, 0.5, 1e-12);
  EXPECT_NEAR(s.tracker.pose.y, 0.0, 1e-12);
  EXPECT_EQ(s.tracker.pose.heading, 0.0);

  spec.step_cap_m = 2.0;
  ArenaState t = build_arena(spec);
  advance(t, plan_of({1.0, 0.0, 0.0}));
  EXPECT_NEAR(t.tracker.pose.x, 1.0, 1e-12);
}

TEST(ArenaStep, OnlyFirstWaypointIsExecuted) {
  ArenaState s = build_arena(empty_spec({6.0, 6.0}));
  ActionPlan p;
  for (auto& w : p.waypoints) w = {0.0, 0.4, 0.0};
  p.waypoints[0] = {0.1, 0.0, 0.0};
  advance(s, p);
  EXPECT_NEAR(s.tracker.pose.x, 0.1, 1e-12);
  EXPECT_NEAR(s.tracker.pose.y, 0.0, 1e-12);
}

TEST(ArenaStep, DrivingIntoWallStopsAtContact) {
  ArenaSpec spec = empty_spec({7.0, 0.0});
  spec.tracker_spawn = {9.5, 0.0, 0.0};  // disc edge 0.3 m from the wall at x = 10
  ArenaState s = build_arena(spec);
  const StepEvents ev = advance(s, plan_of({1.0, 0.0, 0.0}));
  EXPECT_TRUE(ev.tracker_collided);
  EXPECT_NEAR(s.tracker.pose.x, 10.0 - spec.agent_radius, 1e-9);
  EXPECT_LE(s.tracker.pose.x, 10.0 - spec.agent_radius);
  EXPECT_EQ(ev.cause, TerminationCause::collision);
  EXPECT_TRUE(ev.terminated);
}

TEST(ArenaStep, TrackerOpponentContactFlagsBoth) {
  ArenaSpec spec = empty_spec({0.0, 5.0});
  spec.opponent_spawn = Pose{0.8, 0.0, 0.0};
  ArenaState s = build_arena(spec);
  const StepEvents ev = advance(s, plan_of({0.5, 0.0, 0.0}), ActionPlan{});
  EXPECT_TRUE(ev.tracker_collided);
  EXPECT_TRUE(ev.opponent_collided);
  EXPECT_NEAR(distance(s.tracker.pose.position(), s.opponent->pose.position()), 0.4, 1e-9);
}

TEST(ArenaStep, OpponentCollisionAloneDoesNotEndEpisode) {
  ArenaSpec spec = empty_spec({0.0, 3.0});
  spec.opponent_spawn = Pose{9.5, 0.0, 0.0};
  ArenaState s = build_arena(spec);
  const StepEvents ev = advance(s, ActionPlan{}, plan_of({0.5, 0.0, 0.0}));
  EXPECT_TRUE(ev.opponent_collided);
  EXPECT_FALSE(ev.tracker_collided);
  EXPECT_FALSE(ev.terminated);
}

TEST(ArenaStep, TerminatedStateRejectsStep) {
  ArenaSpec spec = empty_spec({7.0, 0.0});
  spec.tracker_spawn = {9.7, 0.0, 0.0};
  ArenaState s = build_arena(spec);
  advance(s, plan_of({0.5, 0.0, 0.0}));
  ASSERT_TRUE(s.terminated());
  EXPECT_THROW(advance(s, ActionPlan{}), UsageError);
  EXPECT_THROW(step(s, ActionPlan{}), UsageError);
}

TEST(ArenaStep, StationaryTrackerLosesRecedingTarget) {
  ArenaSpec spec = empty_spec();
  spec.target_script = {{{9.0, 0.0}}, 0.25, true};
  spec.target_script.waypoints.push_back({9.0, 5.0});
  ArenaState s = build_arena(spec);
  while (!s.terminated()) advance(s, ActionPlan{});
  EXPECT_EQ(s.events.cause, TerminationCause::target_lost);
  EXPECT_LT(s.step, spec.max_steps);
}

TEST(ArenaStep, ParkedTargetInBandSucceedsAtMaxSteps) {
  ArenaSpec spec = empty_spec();
  spec.max_steps = 40;
  ArenaState s = build_arena(spec);
  while (!s.terminated()) advance(s, ActionPlan{});
  EXPECT_EQ(s.events.cause, TerminationCause::success);
  EXPECT_EQ(s.step, 40);
  EXPECT_EQ(s.tracked_steps, 40);
}

TEST(ArenaStep, TimeoutWhenTrackedFractionTooLow) {
  ArenaSpec spec = empty_spec({4.0, 0.0});  // outside the 1-3 m band
  spec.max_steps = 10;
  spec.lost_patience = 100;
  ArenaState s = build_arena(spec);
  while (!s.terminated()) advance(s, ActionPlan{});
  EXPECT_EQ(s.events.cause, TerminationCause::timeout);
}

TEST(LineOfSight, EmptyArenaIsAlwaysClear) {
  ArenaState s = build_arena(empty_spec({9.0, 9.0}));
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec2 a{rng.uniform(-9, 9), rng.uniform(-9, 9)}, b{rng.uniform(-9, 9), rng.uniform(-9, 9)};
    // Keep the agent discs off the segment.
    if (distance_to_segment(s.tracker.pose.position(), a, b) <= 0.2) continue;
    if (distance_to_segment(s.target.pose.position(), a, b) <= 0.25) continue;
    EXPECT_TRUE(line_of_sight(s, a, b));
  }
}

TEST(LineOfSight, DiscOnMidpointBlocks) {
  ArenaSpec spec = empty_spec({-5.0, 5.0});
  spec.opponent_spawn = Pose{3.0, 3.0, 0.0};
  spec.agent_radius = 0.3;
  ArenaState s = build_arena(spec);
  EXPECT_FALSE(line_of_sight(s, {1.0, 3.0}, {5.0, 3.0}));
}

TEST(LineOfSight, TangentSegmentIsClear) {
  ArenaSpec spec = empty_spec({-5.0, 5.0});
  spec.obstacles.push_back(CircleObstacle{{3.0, 0.3}, 0.3});
  ArenaState s = build_arena(spec);
  EXPECT_TRUE(line_of_sight(s, {2.0, 0.0}, {4.0, 0.0}));
  EXPECT_FALSE(line_of_sight(s, {2.0, 0.01}, {4.0, 0.01}));
}

TEST(Visibility, AheadBehindAndBlocked) {
  ArenaSpec spec = empty_spec();
  EXPECT_TRUE(target_visible(build_arena(spec), Role::tracker));

  spec.fov_half_angle = kPi / 2.0;
  spec.target_spawn = {-2.0, 0.0, 0.0};
  EXPECT_FALSE(target_visible(build_arena(spec), Role::tracker));

  ArenaSpec blocked = empty_spec();
  blocked.opponent_spawn = Pose{1.0, 0.0, 0.0};
  EXPECT_FALSE(target_visible(build_arena(blocked), Role::tracker));
  EXPECT_THROW(target_visible(build_arena(empty_spec()), Role::opponent), UsageError);
}

TEST(Distances, Examples) {
  ArenaSpec spec = empty_spec({3.0, 4.0});
  EXPECT_DOUBLE_EQ(distances(build_arena(spec)).d_trk, 5.0);
  EXPECT_FALSE(distances(build_arena(spec)).d_cmp.has_value());

  ArenaSpec three = empty_spec({1.0, 1.0});
  three.target_radius = 0.1;
  three.agent_radius = 0.1;
  three.opponent_spawn = Pose{1.0, 0.0, 0.0};
  const Distances d = distances(build_arena(three));
  EXPECT_DOUBLE_EQ(d.d_trk, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(*d.d_cmp, 1.0);
  EXPECT_DOUBLE_EQ(*d.d_int, 1.0);

  ArenaState same = build_arena(empty_spec());
  same.target.pose = same.tracker.pose;
  EXPECT_EQ(distances(same).d_trk, 0.0);
}

TEST(Observe, VisibleTargetSlot) {
  const Observation o = observe(build_arena(empty_spec()), Role::tracker);
  EXPECT_NEAR(o[obs::kTargetX], 2.0, 1e-12);
  EXPECT_NEAR(o[obs::kTargetY], 0.0, 1e-12);
  EXPECT_EQ(o[obs::kTargetVisible], 1.0);
  EXPECT_EQ(o[obs::kTargetAge], 0.0);
  EXPECT_EQ(o[obs::kOtherPresent], 0.0);
}

TEST(Observe, OccludedTargetUsesCacheAndAges) {
  ArenaSpec spec = empty_spec();
  spec.obstacles.push_back(CircleObstacle{{1.0, 0.0}, 0.3});
  ArenaState s = build_arena(spec);
  for (int k = 0; k < 3; ++k) advance(s, ActionPlan{});
  const Observation o = observe(s, Role::tracker);
  EXPECT_NEAR(o[obs::kTargetX], 2.0, 1e-12);
  EXPECT_NEAR(o[obs::kTargetY], 0.0, 1e-12);
  EXPECT_EQ(o[obs::kTargetVisible], 0.0);
  EXPECT_EQ(s.tracker_memory.age, 3);
  EXPECT_DOUBLE_EQ(o[obs::kTargetAge], 3.0 / spec.lost_patience);
}

TEST(Observe, EqualStatesGiveEqualObservations) {
  for (std::size_t i = 0; i < 50; ++i) {
    ArenaState a = build_arena(scenario_bank()[i].arena);
    ArenaState b = build_arena(scenario_bank()[i].arena);
    Rng ra(i), rb(i);
    for (int k = 0; k < 10 && !a.terminated(); ++k) {
      advance(a, random_plan(ra), random_plan(ra));
      advance(b, random_plan(rb), random_plan(rb));
    }
    ASSERT_EQ(a, b);
    EXPECT_EQ(observe(a, Role::tracker).values, observe(b, Role::tracker).values);
    EXPECT_EQ(observe(a, Role::opponent).values, observe(b, Role::opponent).values);
  }
}

TEST(ArenaIo, SpecRoundTrip) {
  for (std::size_t i = 0; i < 100; ++i) {
    const ArenaSpec& spec = scenario_bank()[i].arena;
    const json j = arena_spec_to_json(spec);
    const ArenaSpec back = arena_spec_from_json(json::parse(j.dump()));
    EXPECT_EQ(back, spec);
  }
}

// ---------------------------------------------------------------------------
// Physics properties over 1000 randomized scenarios.

TEST(ArenaProperties, FrameRoundTrip) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    ArenaSpec spec = empty_spec({9.0, 9.0});
    spec.tracker_spawn = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-kPi, kPi)};
    ArenaState s = build_arena(spec);
    const Pose start = s.tracker.pose;
    const double dx = rng.uniform(-0.25, 0.25), dy = rng.uniform(-0.25, 0.25), dt = rng.uniform(-0.7, 0.7);
    advance(s, plan_of({dx, dy, dt}));
    advance(s, plan_of({-dx * std::cos(dt) - dy * std::sin(dt), dx * std::sin(dt) - dy * std::cos(dt), -dt}));
    EXPECT_NEAR(s.tracker.pose.x, start.x, 1e-9);
    EXPECT_NEAR(s.tracker.pose.y, start.y, 1e-9);
    EXPECT_NEAR(normalize_angle(s.tracker.pose.heading - start.heading), 0.0, 1e-9);
  }
}

TEST(ArenaProperties, CollisionSoundnessHeadingsAndTermination) {
  const auto& bank = scenario_bank();
  std::size_t collisions = 0, terminated = 0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    ArenaState s = build_arena(bank[i].arena);
    Rng rng(derive_seed(99, {i}));
    for (int k = 0; k < 60 && !s.terminated(); ++k) {
      const StepEvents ev = advance(s, random_plan(rng), random_plan(rng));
      ASSERT_LE(worst_overlap(s), 1e-9) << "scenario " << i << " step " << k;
      for (const Pose* p : {&s.tracker.pose, &s.target.pose, &s.opponent->pose}) {
        ASSERT_GT(p->heading, -kPi);
        ASSERT_LE(p->heading, kPi);
      }
      // Exactly one cause when terminated, none otherwise.
      ASSERT_EQ(ev.terminated, ev.cause != TerminationCause::none);
      ASSERT_EQ(ev.cause == TerminationCause::collision, ev.tracker_collided);
      ASSERT_EQ(ev, s.events);
      collisions += ev.tracker_collided ? 1 : 0;
      terminated += ev.terminated ? 1 : 0;
    }
  }
  // The random drive must actually exercise contacts.
  EXPECT_GT(collisions, 100u);
  EXPECT_GT(terminated, 100u);
}

TEST(ArenaProperties, RemovingObstacleNeverHidesTarget) {
  const auto& bank = scenario_bank();
  std::size_t checked = 0, flips = 0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    ArenaState s = build_arena(bank[i].arena);
    Rng rng(derive_seed(7, {i}));
    for (int k = 0; k < 5 && !s.terminated(); ++k) advance(s, random_plan(rng), random_plan(rng));
    for (std::size_t o = 0; o < s.spec->obstacles.size(); ++o) {
      ArenaSpec fewer = *s.spec;
      fewer.obstacles.erase(fewer.obstacles.begin() + static_cast<std::ptrdiff_t>(o));
      ArenaState t = s;
      t.spec = std::make_shared<const ArenaSpec>(fewer);
      for (Role r : {Role::tracker, Role::opponent}) {
        const bool before = target_visible(s, r), after = target_visible(t, r);
        if (before) EXPECT_TRUE(after) << "scenario " << i << " obstacle " << o;
        flips += (!before && after) ? 1 : 0;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 1000u);
  EXPECT_GT(flips, 0u);  // some obstacles really occlude
}

TEST(Geometry, NormalizeAngleRange) {
  Rng rng(5);
  EXPECT_EQ(normalize_angle(kPi), kPi);
  EXPECT_EQ(normalize_angle(-kPi), kPi);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double n = normalize_angle(a);
    EXPECT_GT(n, -kPi);
    EXPECT_LE(n, kPi);
    EXPECT_NEAR(std::sin(n), std::sin(a), 1e-9);
    EXPECT_NEAR(std::cos(n), std::cos(a), 1e-9);
  }
}
