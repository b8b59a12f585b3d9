#pragma once

// Deterministic 2D tracking arena: a tracker, an optional opponent, and a
// scripted target moving among static obstacles inside a walled rectangle.
//
// Agents are kinematic discs. Each control step executes the first waypoint of
// each agent's plan (receding horizon) and resolves motion by an exact swept
// disc test; on contact the mover stops at the contact point and its collided
// flag is raised. The tracker moves first, then the opponent, then the target.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "comatrack/error.hpp"
#include "comatrack/geometry.hpp"
#include "comatrack/observation.hpp"
#include "comatrack/rng.hpp"

namespace comatrack {

enum class Role { tracker, opponent, target };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::tracker: return "tracker";
    case Role::opponent: return "opponent";
    case Role::target: return "target";
  }
  return "?";
}

enum class TerminationCause { none, success, target_lost, collision, timeout };

inline const char* to_string(TerminationCause c) {
  switch (c) {
    case TerminationCause::none: return "none";
    case TerminationCause::success: return "success";
    case TerminationCause::target_lost: return "target_lost";
    case TerminationCause::collision: return "collision";
    case TerminationCause::timeout: return "timeout";
  }
  return "?";
}

// Relative motion in the agent frame: forward, left, turn.
struct Waypoint {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
  bool operator==(const Waypoint&) const = default;
};

inline constexpr std::size_t kPlanLength = 5;
inline constexpr std::size_t kActionSize = 3 * kPlanLength;

struct ActionPlan {
  std::array<Waypoint, kPlanLength> waypoints{};

  bool operator==(const ActionPlan&) const = default;

  std::array<double, kActionSize> flatten() const {
    std::array<double, kActionSize> out{};
    for (std::size_t i = 0; i < kPlanLength; ++i) {
      out[3 * i] = waypoints[i].dx;
      out[3 * i + 1] = waypoints[i].dy;
      out[3 * i + 2] = waypoints[i].dtheta;
    }
    return out;
  }

  static ActionPlan from_flat(std::span<const double> v) {
    if (v.size() != kActionSize) throw UsageError("action vector must have 15 entries");
    ActionPlan p;
    for (std::size_t i = 0; i < kPlanLength; ++i) p.waypoints[i] = {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
    return p;
  }
};

struct CircleObstacle {
  Vec2 center;
  double radius = 0.0;
  bool operator==(const CircleObstacle&) const = default;
};

struct RectObstacle {
  Rect box;
  bool operator==(const RectObstacle&) const = default;
};

using Obstacle = std::variant<CircleObstacle, RectObstacle>;

struct TargetScript {
  std::vector<Vec2> waypoints;
  double speed = 0.25;  // meters per control step
  bool loop = false;    // when false, fresh waypoints are drawn from the arena RNG after the list
  bool operator==(const TargetScript&) const = default;
};

struct ArenaSpec {
  Rect bounds{{-10.0, -10.0}, {10.0, 10.0}};
  std::vector<Obstacle> obstacles;
  Pose tracker_spawn;
  std::optional<Pose> opponent_spawn;
  Pose target_spawn{2.0, 0.0, 0.0};
  TargetScript target_script;
  double fov_half_angle = kPi / 3.0;
  double step_cap_m = 0.5;
  double turn_cap_rad = kPi / 4.0;
  int max_steps = 300;
  std::uint64_t seed = 0;
  double agent_radius = 0.2;
  double target_radius = 0.25;
  int lost_patience = 20;
  double success_tr_threshold = 0.5;
  double track_band_min = 1.0;
  double track_band_max = 3.0;
  double ray_range = 5.0;

  bool operator==(const ArenaSpec&) const = default;
};

struct AgentBody {
  Pose pose;
  double radius = 0.2;
  Role role = Role::tracker;
  bool operator==(const AgentBody&) const = default;
};

struct StepEvents {
  bool tracker_collided = false;
  bool opponent_collided = false;
  bool tracker_sees_target = false;
  bool opponent_sees_target = false;
  bool terminated = false;
  TerminationCause cause = TerminationCause::none;
  bool operator==(const StepEvents&) const = default;
};

// Last-seen target cache for one viewer.
struct ObserverMemory {
  Vec2 last_seen;
  int age = 0;
  bool operator==(const ObserverMemory&) const = default;
};

struct ScriptCursor {
  std::size_t index = 0;  // index of `goal` in the script, or npos once resampling
  Vec2 goal;
  Vec2 previous_goal;
  bool operator==(const ScriptCursor&) const = default;
};

struct ArenaState {
  std::shared_ptr<const ArenaSpec> spec;
  int step = 0;
  AgentBody tracker;
  std::optional<AgentBody> opponent;
  AgentBody target;
  ScriptCursor cursor;
  Rng rng;
  StepEvents events;
  ObserverMemory tracker_memory;
  ObserverMemory opponent_memory;
  Waypoint tracker_last;
  Waypoint opponent_last;
  int tracked_steps = 0;
  int lost_streak = 0;

  bool terminated() const { return events.terminated; }

  const AgentBody& body(Role r) const {
    if (r == Role::tracker) return tracker;
    if (r == Role::target) return target;
    if (!opponent) throw UsageError("arena has no opponent");
    return *opponent;
  }

  friend bool operator==(const ArenaState& a, const ArenaState& b) {
    const bool same_spec = a.spec == b.spec || (a.spec && b.spec && *a.spec == *b.spec);
    return same_spec && a.step == b.step && a.tracker == b.tracker && a.opponent == b.opponent &&
           a.target == b.target && a.cursor == b.cursor && a.rng == b.rng && a.events == b.events &&
           a.tracker_memory == b.tracker_memory && a.opponent_memory == b.opponent_memory &&
           a.tracker_last == b.tracker_last && a.opponent_last == b.opponent_last &&
           a.tracked_steps == b.tracked_steps && a.lost_streak == b.lost_streak;
  }
};

struct Distances {
  double d_trk = 0.0;
  std::optional<double> d_cmp;
  std::optional<double> d_int;
};

namespace detail {

inline constexpr double kContactBackoff = 1e-10;
inline constexpr std::size_t kResampled = static_cast<std::size_t>(-1);

inline Rect obstacle_bbox(const Obstacle& o) {
  if (const auto* c = std::get_if<CircleObstacle>(&o))
    return {{c->center.x - c->radius, c->center.y - c->radius}, {c->center.x + c->radius, c->center.y + c->radius}};
  return std::get<RectObstacle>(o).box;
}

// Signed clearance between a disc and an obstacle (negative when overlapping).
inline double clearance(const Obstacle& o, Vec2 p, double radius) {
  if (const auto* c = std::get_if<CircleObstacle>(&o)) return distance(p, c->center) - c->radius - radius;
  const Rect& r = std::get<RectObstacle>(o).box;
  if (r.contains(p)) return -radius;
  return distance_to_rect(r, p) - radius;
}

inline bool disc_inside(const Rect& bounds, Vec2 p, double radius) {
  return p.x - radius >= bounds.lo.x && p.x + radius <= bounds.hi.x && p.y - radius >= bounds.lo.y &&
         p.y + radius <= bounds.hi.y;
}

inline std::optional<double> sweep_obstacle(const Obstacle& o, Vec2 p, Vec2 d, double radius) {
  if (const auto* c = std::get_if<CircleObstacle>(&o)) return sweep_circle(p, d, c->center, c->radius + radius);
  return sweep_rounded_rect(p, d, std::get<RectObstacle>(o).box, radius);
}

struct Blocker {
  Vec2 center;
  double radius;
};

// Earliest contact time of a disc moving p -> p + d against scenery and blockers.
inline std::optional<double> first_contact(const ArenaSpec& spec, Vec2 p, Vec2 d, double radius,
                                           std::span<const Blocker> blockers) {
  std::optional<double> best = sweep_inside(p, d, spec.bounds, radius);
  auto take = [&best](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  for (const auto& o : spec.obstacles) take(sweep_obstacle(o, p, d, radius));
  for (const auto& b : blockers) take(sweep_circle(p, d, b.center, b.radius + radius));
  return best;
}

// Moves `pos` along `d`; returns true when the motion was cut short by contact.
inline bool sweep_move(const ArenaSpec& spec, Vec2& pos, Vec2 d, double radius, std::span<const Blocker> blockers) {
  const double len = norm(d);
  if (len == 0.0) return false;
  const auto hit = first_contact(spec, pos, d, radius, blockers);
  if (!hit) {
    pos += d;
    return false;
  }
  const double t = std::max(0.0, *hit - kContactBackoff / len);
  pos += t * d;
  return true;
}

inline bool segment_clear_for_target(const ArenaSpec& spec, Vec2 a, Vec2 b) {
  const double r = spec.target_radius;
  if (!disc_inside(spec.bounds, b, r)) return false;
  for (const auto& o : spec.obstacles) {
    if (clearance(o, b, r) <= 0.0) return false;
    if (sweep_obstacle(o, a, b - a, r)) return false;
  }
  return true;
}

inline Vec2 resample_goal(const ArenaSpec& spec, Rng& rng, Vec2 from, Vec2 fallback) {
  const double margin = spec.target_radius + 0.1;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Vec2 p{rng.uniform(spec.bounds.lo.x + margin, spec.bounds.hi.x - margin),
                 rng.uniform(spec.bounds.lo.y + margin, spec.bounds.hi.y - margin)};
    if (distance(p, from) < 1.0) continue;
    if (segment_clear_for_target(spec, from, p)) return p;
  }
  return fallback;
}

inline void advance_cursor(const ArenaSpec& spec, ScriptCursor& cur, Rng& rng, Vec2 at) {
  const auto& wps = spec.target_script.waypoints;
  cur.previous_goal = cur.goal;
  if (cur.index != kResampled && cur.index + 1 < wps.size()) {
    cur.index += 1;
    cur.goal = wps[cur.index];
  } else if (spec.target_script.loop && !wps.empty()) {
    cur.index = 0;
    cur.goal = wps[0];
  } else {
    cur.index = kResampled;
    cur.goal = resample_goal(spec, rng, at, cur.previous_goal);
  }
}

inline Waypoint clamp_waypoint(const ArenaSpec& spec, Waypoint w) {
  if (!std::isfinite(w.dx) || !std::isfinite(w.dy) || !std::isfinite(w.dtheta))
    throw UsageError("waypoint has non-finite components");
  w.dx = std::clamp(w.dx, -spec.step_cap_m, spec.step_cap_m);
  w.dy = std::clamp(w.dy, -spec.step_cap_m, spec.step_cap_m);
  w.dtheta = std::clamp(w.dtheta, -spec.turn_cap_rad, spec.turn_cap_rad);
  return w;
}

inline void check_pose(const ArenaSpec& spec, const Pose& p, double radius, const std::string& name) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.heading))
    throw ConstructionError(name + " is not finite");
  if (!disc_inside(spec.bounds, p.position(), radius)) throw ConstructionError(name + " is outside the arena bounds");
  for (std::size_t i = 0; i < spec.obstacles.size(); ++i)
    if (clearance(spec.obstacles[i], p.position(), radius) < 0.0)
      throw ConstructionError(name + " overlaps obstacle " + std::to_string(i));
}

}  // namespace detail

inline void validate_spec(const ArenaSpec& spec) {
  using detail::check_pose;
  if (!(spec.bounds.width() > 0.0) || !(spec.bounds.height() > 0.0)) throw ConstructionError("bounds are degenerate");
  if (!(spec.fov_half_angle > 0.0) || spec.fov_half_angle > kPi) throw ConstructionError("fov_half_angle must be in (0, pi]");
  if (!(spec.step_cap_m > 0.0) || !(spec.turn_cap_rad > 0.0)) throw ConstructionError("motion caps must be positive");
  if (spec.max_steps < 1) throw ConstructionError("max_steps must be >= 1");
  if (!(spec.agent_radius > 0.0) || !(spec.target_radius > 0.0)) throw ConstructionError("body radii must be positive");
  if (spec.lost_patience < 1) throw ConstructionError("lost_patience must be >= 1");
  if (spec.success_tr_threshold < 0.0 || spec.success_tr_threshold > 1.0)
    throw ConstructionError("success_tr_threshold must be in [0, 1]");
  if (!(spec.track_band_min < spec.track_band_max)) throw ConstructionError("track band is empty");
  if (!(spec.ray_range > 0.0)) throw ConstructionError("ray_range must be positive");

  for (std::size_t i = 0; i < spec.obstacles.size(); ++i) {
    const auto& o = spec.obstacles[i];
    const std::string name = "obstacle " + std::to_string(i);
    if (const auto* c = std::get_if<CircleObstacle>(&o)) {
      if (!(c->radius > 0.0)) throw ConstructionError(name + " has non-positive radius");
    } else {
      const Rect& r = std::get<RectObstacle>(o).box;
      if (!(r.width() > 0.0) || !(r.height() > 0.0)) throw ConstructionError(name + " has no area");
    }
    const Rect bb = detail::obstacle_bbox(o);
    if (!(bb.lo.x > spec.bounds.lo.x && bb.lo.y > spec.bounds.lo.y && bb.hi.x < spec.bounds.hi.x &&
          bb.hi.y < spec.bounds.hi.y))
      throw ConstructionError(name + " is not strictly inside the arena bounds");
  }

  check_pose(spec, spec.tracker_spawn, spec.agent_radius, "tracker spawn");
  check_pose(spec, spec.target_spawn, spec.target_radius, "target spawn");
  if (spec.opponent_spawn) check_pose(spec, *spec.opponent_spawn, spec.agent_radius, "opponent spawn");

  auto apart = [](const Pose& a, double ra, const Pose& b, double rb) {
    return distance(a.position(), b.position()) >= ra + rb;
  };
  if (!apart(spec.tracker_spawn, spec.agent_radius, spec.target_spawn, spec.target_radius))
    throw ConstructionError("tracker spawn overlaps target spawn");
  if (spec.opponent_spawn) {
    if (!apart(spec.tracker_spawn, spec.agent_radius, *spec.opponent_spawn, spec.agent_radius))
      throw ConstructionError("opponent spawn overlaps tracker spawn");
    if (!apart(*spec.opponent_spawn, spec.agent_radius, spec.target_spawn, spec.target_radius))
      throw ConstructionError("opponent spawn overlaps target spawn");
  }

  const auto& script = spec.target_script;
  if (!(script.speed >= 0.0)) throw ConstructionError("target script speed must be non-negative");
  Vec2 prev = spec.target_spawn.position();
  for (std::size_t i = 0; i < script.waypoints.size(); ++i) {
    const Vec2 w = script.waypoints[i];
    const std::string name = "target waypoint " + std::to_string(i);
    if (i > 0 && w == script.waypoints[i - 1]) throw ConstructionError(name + " repeats its predecessor");
    if (!detail::disc_inside(spec.bounds, w, spec.target_radius)) throw ConstructionError(name + " is outside the bounds");
    for (const auto& o : spec.obstacles)
      if (detail::clearance(o, w, spec.target_radius) <= 0.0) throw ConstructionError(name + " collides with an obstacle");
    if (w != prev && !detail::segment_clear_for_target(spec, prev, w))
      throw ConstructionError(name + " is not reachable without collision");
    prev = w;
  }
}

inline ArenaState build_arena(std::shared_ptr<const ArenaSpec> spec) {
  if (!spec) throw UsageError("null arena spec");
  validate_spec(*spec);
  ArenaState s;
  s.spec = spec;
  s.rng = Rng(spec->seed);
  s.tracker = {spec->tracker_spawn, spec->agent_radius, Role::tracker};
  s.tracker.pose.heading = normalize_angle(s.tracker.pose.heading);
  if (spec->opponent_spawn) {
    s.opponent = AgentBody{*spec->opponent_spawn, spec->agent_radius, Role::opponent};
    s.opponent->pose.heading = normalize_angle(s.opponent->pose.heading);
  }
  s.target = {spec->target_spawn, spec->target_radius, Role::target};
  s.target.pose.heading = normalize_angle(s.target.pose.heading);

  const Vec2 start = spec->target_spawn.position();
  s.cursor.previous_goal = start;
  if (!spec->target_script.waypoints.empty()) {
    s.cursor.index = 0;
    s.cursor.goal = spec->target_script.waypoints[0];
  } else {
    s.cursor.index = detail::kResampled;
    s.cursor.goal = detail::resample_goal(*spec, s.rng, start, start);
  }
  // Observers are told where the target starts; afterwards they only learn by sight.
  s.tracker_memory = {start, 0};
  s.opponent_memory = {start, 0};
  return s;
}

inline ArenaState build_arena(const ArenaSpec& spec) { return build_arena(std::make_shared<const ArenaSpec>(spec)); }

// True iff the open segment from -> to crosses no obstacle interior and no
// agent disc other than the ones containing an endpoint.
inline bool line_of_sight(const ArenaState& state, Vec2 from, Vec2 to) {
  for (const auto& o : state.spec->obstacles) {
    if (const auto* c = std::get_if<CircleObstacle>(&o)) {
      if (segment_hits_disc(from, to, c->center, c->radius)) return false;
    } else if (segment_hits_rect(from, to, std::get<RectObstacle>(o).box)) {
      return false;
    }
  }
  auto blocks = [&](const AgentBody& b) {
    const Vec2 c = b.pose.position();
    if (distance(c, from) < b.radius || distance(c, to) < b.radius) return false;
    return segment_hits_disc(from, to, c, b.radius);
  };
  if (blocks(state.tracker) || blocks(state.target)) return false;
  if (state.opponent && blocks(*state.opponent)) return false;
  return true;
}

inline bool target_visible(const ArenaState& state, Role viewer) {
  if (viewer == Role::target) throw UsageError("target cannot be a viewer");
  const AgentBody& v = state.body(viewer);
  const Vec2 target = state.target.pose.position();
  if (std::abs(bearing_to(v.pose, target)) > state.spec->fov_half_angle) return false;
  return line_of_sight(state, v.pose.position(), target);
}

inline Distances distances(const ArenaState& state) {
  Distances d;
  const Vec2 t = state.target.pose.position();
  d.d_trk = distance(state.tracker.pose.position(), t);
  if (state.opponent) {
    d.d_cmp = distance(state.opponent->pose.position(), t);
    d.d_int = distance(state.opponent->pose.position(), state.tracker.pose.position());
  }
  return d;
}

// Tracked condition: target inside the distance band and in the tracker's view.
inline bool tracked_condition(const ArenaState& state) {
  const double d = distances(state).d_trk;
  return d >= state.spec->track_band_min && d <= state.spec->track_band_max && target_visible(state, Role::tracker);
}

// Distance from the viewer center along a viewer-frame direction to the first
// obstacle, wall, or other agent disc.
inline double ray_distance(const ArenaState& state, Role viewer, double local_angle) {
  const AgentBody& v = state.body(viewer);
  const Vec2 o = v.pose.position();
  const double a = v.pose.heading + local_angle;
  const Vec2 u{std::cos(a), std::sin(a)};
  double best = ray_bounds_exit(o, u, state.spec->bounds);
  auto take = [&best](std::optional<double> t) {
    if (t && *t < best) best = *t;
  };
  for (const auto& ob : state.spec->obstacles) {
    if (const auto* c = std::get_if<CircleObstacle>(&ob)) take(ray_circle(o, u, c->center, c->radius));
    else take(ray_rect(o, u, std::get<RectObstacle>(ob).box));
  }
  const AgentBody* other = viewer == Role::tracker ? (state.opponent ? &*state.opponent : nullptr) : &state.tracker;
  if (other) take(ray_circle(o, u, other->pose.position(), other->radius));
  return std::min(best, state.spec->ray_range);
}

inline Observation observe(const ArenaState& state, Role viewer) {
  if (viewer == Role::target) throw UsageError("target cannot observe");
  const AgentBody& v = state.body(viewer);
  const ObserverMemory& mem = viewer == Role::tracker ? state.tracker_memory : state.opponent_memory;
  const bool visible = target_visible(state, viewer);

  Observation o;
  const Vec2 seen = visible ? state.target.pose.position() : mem.last_seen;
  const Vec2 rel = to_local(v.pose, seen);
  o[obs::kTargetX] = rel.x;
  o[obs::kTargetY] = rel.y;
  o[obs::kTargetVisible] = visible ? 1.0 : 0.0;
  o[obs::kTargetDistance] = norm(rel);
  o[obs::kTargetBearing] = (rel.x == 0.0 && rel.y == 0.0) ? 0.0 : std::atan2(rel.y, rel.x);
  const int age = visible ? 0 : mem.age;
  const double age_cap = static_cast<double>(state.spec->lost_patience);
  o[obs::kTargetAge] = std::min(static_cast<double>(age), age_cap) / age_cap;

  const AgentBody* other = viewer == Role::tracker ? (state.opponent ? &*state.opponent : nullptr) : &state.tracker;
  if (other) {
    const Vec2 orel = to_local(v.pose, other->pose.position());
    o[obs::kOtherX] = orel.x;
    o[obs::kOtherY] = orel.y;
    o[obs::kOtherPresent] = 1.0;
    o[obs::kInterDistance] = norm(orel);
  }
  for (std::size_t k = 0; k < kRayCount; ++k) {
    const double angle = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(kRayCount);
    o[obs::kRays + k] = ray_distance(state, viewer, angle) / state.spec->ray_range;
  }
  const Waypoint& last = viewer == Role::tracker ? state.tracker_last : state.opponent_last;
  o[obs::kPrevWaypoint] = last.dx;
  o[obs::kPrevWaypoint + 1] = last.dy;
  o[obs::kPrevWaypoint + 2] = last.dtheta;
  return o;
}

// Advances the state in place by one control step.
inline StepEvents advance(ArenaState& state, const ActionPlan& tracker_plan,
                          const std::optional<ActionPlan>& opponent_plan = std::nullopt) {
  using detail::Blocker;
  if (state.terminated()) throw UsageError("step called on a terminated arena state");
  const ArenaSpec& spec = *state.spec;
  StepEvents ev;

  auto move = [&](AgentBody& body, Waypoint w, std::span<const Blocker> blockers) {
    const Vec2 d = rotate({w.dx, w.dy}, body.pose.heading);
    Vec2 pos = body.pose.position();
    const bool hit = detail::sweep_move(spec, pos, d, body.radius, blockers);
    body.pose.x = pos.x;
    body.pose.y = pos.y;
    body.pose.heading = normalize_angle(body.pose.heading + w.dtheta);
    return hit;
  };

  const Blocker target_blocker{state.target.pose.position(), state.target.radius};

  const Waypoint tw = detail::clamp_waypoint(spec, tracker_plan.waypoints[0]);
  {
    std::vector<Blocker> blockers{target_blocker};
    if (state.opponent) blockers.push_back({state.opponent->pose.position(), state.opponent->radius});
    ev.tracker_collided = move(state.tracker, tw, blockers);
    // Contact with the opponent is a collision for both parties.
    if (ev.tracker_collided && state.opponent &&
        distance(state.tracker.pose.position(), state.opponent->pose.position()) <=
            state.tracker.radius + state.opponent->radius + 1e-6)
      ev.opponent_collided = true;
  }
  state.tracker_last = tw;

  if (state.opponent) {
    const Waypoint ow =
        opponent_plan ? detail::clamp_waypoint(spec, opponent_plan->waypoints[0]) : Waypoint{};
    const Blocker blockers[] = {target_blocker, {state.tracker.pose.position(), state.tracker.radius}};
    const bool hit = move(*state.opponent, ow, blockers);
    if (hit) {
      ev.opponent_collided = true;
      if (distance(state.tracker.pose.position(), state.opponent->pose.position()) <=
          state.tracker.radius + state.opponent->radius + 1e-6)
        ev.tracker_collided = true;
    }
    state.opponent_last = ow;
  }

  // Target follows its script; agents in the way simply hold it up.
  {
    std::vector<Blocker> blockers{{state.tracker.pose.position(), state.tracker.radius}};
    if (state.opponent) blockers.push_back({state.opponent->pose.position(), state.opponent->radius});
    double remaining = spec.target_script.speed;
    for (int hop = 0; hop < 8 && remaining > 0.0; ++hop) {
      Vec2 pos = state.target.pose.position();
      const Vec2 to_goal = state.cursor.goal - pos;
      const double dist = norm(to_goal);
      if (dist == 0.0) {
        detail::advance_cursor(spec, state.cursor, state.rng, pos);
        continue;
      }
      const double len = std::min(dist, remaining);
      const Vec2 d = (len / dist) * to_goal;
      const bool blocked = detail::sweep_move(spec, pos, d, state.target.radius, blockers);
      state.target.pose.x = pos.x;
      state.target.pose.y = pos.y;
      state.target.pose.heading = normalize_angle(std::atan2(to_goal.y, to_goal.x));
      if (blocked) break;
      remaining -= len;
      if (len == dist) detail::advance_cursor(spec, state.cursor, state.rng, pos);
    }
  }

  ev.tracker_sees_target = target_visible(state, Role::tracker);
  if (ev.tracker_sees_target) state.tracker_memory = {state.target.pose.position(), 0};
  else state.tracker_memory.age += 1;
  if (state.opponent) {
    ev.opponent_sees_target = target_visible(state, Role::opponent);
    if (ev.opponent_sees_target) state.opponent_memory = {state.target.pose.position(), 0};
    else state.opponent_memory.age += 1;
  }

  const bool tracked = tracked_condition(state);
  state.tracked_steps += tracked ? 1 : 0;
  state.lost_streak = tracked ? 0 : state.lost_streak + 1;
  state.step += 1;

  if (ev.tracker_collided) {
    ev.cause = TerminationCause::collision;
  } else if (state.lost_streak >= spec.lost_patience) {
    ev.cause = TerminationCause::target_lost;
  } else if (state.step >= spec.max_steps) {
    const double fraction = static_cast<double>(state.tracked_steps) / static_cast<double>(state.step);
    ev.cause = fraction >= spec.success_tr_threshold ? TerminationCause::success : TerminationCause::timeout;
  }
  ev.terminated = ev.cause != TerminationCause::none;
  state.events = ev;
  return ev;
}

inline std::pair<ArenaState, StepEvents> step(const ArenaState& state, const ActionPlan& tracker_plan,
                                              const std::optional<ActionPlan>& opponent_plan = std::nullopt) {
  ArenaState next = state;
  StepEvents ev = advance(next, tracker_plan, opponent_plan);
  return {std::move(next), ev};
}

}  // namespace comatrack
