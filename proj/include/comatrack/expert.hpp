#pragma once

// Privileged scripted tracker used to produce demonstrations. It reads the
// true target position (not the observation) and steers toward the point at
// the standoff distance on the target->viewer line, turning to face the
// target, with ray-based repulsion from walls, obstacles and the other agent.

#include <algorithm>
#include <cmath>

#include "comatrack/arena.hpp"
#include "comatrack/error.hpp"
#include "comatrack/scenario.hpp"

namespace comatrack {

struct ExpertConfig {
  double pursuit_gain = 0.6;
  double standoff = 2.25;
  double avoid_weight = 0.6;
  double avoid_range = 1.0;
  double max_speed = 0.45;
  // Lateral step taken when the target is occluded, meters per step.
  double sidestep = 0.25;
  // Minimum clearance kept along the chosen step (privileged geometry check).
  double safety_margin = 0.15;

  void validate() const {
    if (!(standoff > 0.0)) throw ConfigError("expert.standoff must be > 0");
    if (!(max_speed > 0.0)) throw ConfigError("expert.max_speed must be > 0");
    if (pursuit_gain < 0.0 || avoid_weight < 0.0 || avoid_range <= 0.0 || sidestep < 0.0 || safety_margin < 0.0)
      throw ConfigError("expert gains must be non-negative");
  }
};

namespace detail {

// Free space around a candidate viewer position, counting scenery, the other
// agent and the target.
inline double expert_clearance(const ArenaState& s, Role viewer, Vec2 p) {
  const ArenaSpec& spec = *s.spec;
  const double r = s.body(viewer).radius;
  double c = std::min({p.x - spec.bounds.lo.x, spec.bounds.hi.x - p.x, p.y - spec.bounds.lo.y, spec.bounds.hi.y - p.y}) - r;
  for (const auto& o : spec.obstacles) c = std::min(c, clearance(o, p, r));
  c = std::min(c, distance(p, s.target.pose.position()) - r - s.target.radius);
  const AgentBody* other = viewer == Role::tracker ? (s.opponent ? &*s.opponent : nullptr) : &s.tracker;
  if (other) c = std::min(c, distance(p, other->pose.position()) - r - other->radius);
  return c;
}

// Closest feasible step to `desired`: rotated and shortened candidates are
// tried in order of deviation; a step is feasible when clearance along it
// stays above the margin (or does not shrink, when already inside it).
inline Vec2 safe_step(const ArenaState& s, Role viewer, Vec2 desired, double margin) {
  const Vec2 p = s.body(viewer).pose.position();
  const double here = expert_clearance(s, viewer, p);
  auto feasible = [&](Vec2 step) {
    for (int k = 1; k <= 4; ++k) {
      const double c = expert_clearance(s, viewer, p + (0.25 * k) * step);
      if (c < margin && c < here - 1e-9) return false;
    }
    return true;
  };
  if (feasible(desired)) return desired;
  Vec2 best{0.0, 0.0};
  double best_cost = norm(desired) * norm(desired);
  for (int a = -8; a <= 8; ++a) {
    for (double scale : {1.0, 0.6, 0.3}) {
      const Vec2 cand = scale * rotate(desired, a * kPi / 8.0);
      const Vec2 diff = cand - desired;
      const double cost = dot(diff, diff);
      if (cost < best_cost && feasible(cand)) {
        best = cand;
        best_cost = cost;
      }
    }
  }
  return best;
}

}  // namespace detail

inline ActionPlan expert_policy(const ArenaState& state, Role viewer, const ExpertConfig& cfg) {
  if (viewer == Role::target) throw UsageError("target has no expert");
  const ArenaSpec& spec = *state.spec;
  const Pose pose = state.body(viewer).pose;
  const Vec2 p = pose.position();
  const Vec2 t = state.target.pose.position();

  Vec2 away = p - t;
  double away_len = norm(away);
  if (away_len < 1e-9) {
    away = rotate({-1.0, 0.0}, pose.heading);
    away_len = 1.0;
  }
  const Vec2 away_unit = (1.0 / away_len) * away;
  const Vec2 goal = t + cfg.standoff * away_unit;
  Vec2 desired = cfg.pursuit_gain * (goal - p);

  // Occluded: slide sideways around whatever blocks the sight line.
  if (!line_of_sight(state, p, t)) {
    Vec2 side{-away_unit.y, away_unit.x};
    const AgentBody* other =
        viewer == Role::tracker ? (state.opponent ? &*state.opponent : nullptr) : &state.tracker;
    if (other && cross(t - p, other->pose.position() - p) > 0.0) side = -side;
    desired += cfg.sidestep * side;
  }

  for (std::size_t k = 0; k < kRayCount; ++k) {
    const double local_angle = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(kRayCount);
    const double hit = ray_distance(state, viewer, local_angle);
    if (hit < cfg.avoid_range) {
      const Vec2 u = rotate({1.0, 0.0}, pose.heading + local_angle);
      desired -= cfg.avoid_weight * (cfg.avoid_range - hit) / cfg.avoid_range * u;
    }
  }

  const double speed = norm(desired);
  if (speed > cfg.max_speed) desired = (cfg.max_speed / speed) * desired;
  desired = detail::safe_step(state, viewer, desired, cfg.safety_margin);

  // Roll the kinematic model forward assuming a static world.
  ActionPlan plan;
  Pose cur = pose;
  for (std::size_t i = 0; i < kPlanLength; ++i) {
    Vec2 local = rotate(desired, -cur.heading);
    local.x = std::clamp(local.x, -spec.step_cap_m, spec.step_cap_m);
    local.y = std::clamp(local.y, -spec.step_cap_m, spec.step_cap_m);
    const double turn = std::clamp(bearing_to(cur, t), -spec.turn_cap_rad, spec.turn_cap_rad);
    plan.waypoints[i] = {local.x, local.y, turn};
    const Vec2 next = to_world(cur, local);
    cur = {next.x, next.y, normalize_angle(cur.heading + turn)};
  }
  return plan;
}

inline Controller expert_controller(const ExpertConfig& cfg) {
  return [cfg](const ArenaState& s, Role self) { return expert_policy(s, self, cfg); };
}

}  // namespace comatrack
