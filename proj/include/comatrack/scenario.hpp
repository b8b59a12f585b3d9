#pragma once

// Episode definitions and the controllers that drive non-learning agents.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "comatrack/arena.hpp"
#include "comatrack/policy.hpp"
#include "comatrack/rng.hpp"

namespace comatrack {

enum class BehaviorKind { static_obstacle, random_interference, competitive };

inline const char* to_string(BehaviorKind k) {
  switch (k) {
    case BehaviorKind::static_obstacle: return "static";
    case BehaviorKind::random_interference: return "random";
    case BehaviorKind::competitive: return "competitive";
  }
  return "?";
}

inline BehaviorKind behavior_from_string(const std::string& s) {
  if (s == "static") return BehaviorKind::static_obstacle;
  if (s == "random") return BehaviorKind::random_interference;
  if (s == "competitive") return BehaviorKind::competitive;
  throw ConfigError("unknown opponent behavior '" + s + "' (expected static, random or competitive)");
}

struct OpponentBehavior {
  BehaviorKind kind = BehaviorKind::static_obstacle;
  std::uint64_t motion_seed = 0;  // random only
  double speed = 0.0;             // random only, meters per step
  std::string checkpoint;         // competitive only
  bool operator==(const OpponentBehavior&) const = default;
};

struct EpisodeSpec {
  ArenaSpec arena;
  OpponentBehavior opponent;
  std::size_t episode_id = 0;
  std::uint64_t suite_seed = 0;
  bool operator==(const EpisodeSpec&) const = default;
};

// Plan for one agent given the full state.
using Controller = std::function<ActionPlan(const ArenaState&, Role)>;

inline ActionPlan zero_plan() { return {}; }

inline Controller static_controller() {
  return [](const ArenaState&, Role) { return zero_plan(); };
}

inline constexpr int kRandomHeadingPeriod = 10;

// World heading the random opponent follows during the block containing `step`.
inline double random_heading(std::uint64_t motion_seed, int step) {
  Rng rng(derive_seed(motion_seed, {static_cast<std::uint64_t>(step / kRandomHeadingPeriod)}));
  return rng.uniform(-kPi, kPi);
}

// Random interference: constant speed along a heading resampled every ten
// steps. The commanded motion depends only on (motion_seed, step index).
inline ActionPlan random_plan(const ArenaState& s, Role self, std::uint64_t motion_seed, double speed) {
  const Pose& pose = s.body(self).pose;
  const double heading = random_heading(motion_seed, s.step);
  const Vec2 local = rotate({speed, 0.0}, heading - pose.heading);
  ActionPlan p;
  for (auto& w : p.waypoints) w = {local.x, local.y, 0.0};
  p.waypoints[0].dtheta = normalize_angle(heading - pose.heading);
  return p;
}

inline Controller random_controller(std::uint64_t motion_seed, double speed) {
  return [motion_seed, speed](const ArenaState& s, Role self) { return random_plan(s, self, motion_seed, speed); };
}

// Zero-noise policy evaluation: the Gaussian mean is the plan.
inline Controller policy_mean_controller(std::shared_ptr<const PolicyParams> params) {
  return [params](const ArenaState& s, Role self) { return mean_plan(*params, observe(s, self)); };
}

inline Controller policy_sampling_controller(std::shared_ptr<const PolicyParams> params, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [params, rng](const ArenaState& s, Role self) {
    return ActionPlan::from_flat(sample_action(*params, observe(s, self), *rng).action);
  };
}

// Controller for the opponent of an episode. Competitive behavior needs the
// resolved opponent parameters.
inline Controller make_opponent_controller(const OpponentBehavior& b, std::shared_ptr<const PolicyParams> competitive) {
  switch (b.kind) {
    case BehaviorKind::static_obstacle: return static_controller();
    case BehaviorKind::random_interference: return random_controller(b.motion_seed, b.speed);
    case BehaviorKind::competitive:
      if (!competitive) throw UsageError("competitive opponent requires a checkpoint");
      return policy_mean_controller(std::move(competitive));
  }
  return static_controller();
}

inline ArenaSpec without_opponent(ArenaSpec spec) {
  spec.opponent_spawn.reset();
  return spec;
}

}  // namespace comatrack
