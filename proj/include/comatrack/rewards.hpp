#pragma once

// Tracker and opponent rewards. Both agents share the same dense structure
// (Gaussian distance term, facing term, persistence bonus) plus a sparse
// terminal term; they differ in the preferred standoff distance, and only the
// tracker pays an inter-agent proximity penalty.

#include <algorithm>
#include <cmath>

#include "comatrack/arena.hpp"
#include "comatrack/error.hpp"

namespace comatrack {

struct RewardConfig {
  double d_opt_trk = 2.25;
  double d_opt_cmp = 1.25;
  double sigma = 0.75;
  double w_distance = 1.0;
  double w_facing = 0.5;
  double w_persist = 0.25;
  double persist_zone_min = 1.0;
  double persist_zone_max = 3.0;
  int persist_min_run = 5;
  double w_safety = 1.0;
  double d_safe_int = 1.0;
  double r_success = 10.0;
  double r_target_lost = -5.0;
  double r_collision = -10.0;

  void validate() const {
    if (!(sigma > 0.0)) throw ConfigError("rewards.sigma must be > 0");
    if (!(d_opt_trk > 0.0)) throw ConfigError("rewards.d_opt_trk must be > 0");
    if (!(d_opt_cmp > 0.0)) throw ConfigError("rewards.d_opt_cmp must be > 0");
    if (!(persist_zone_min < persist_zone_max)) throw ConfigError("rewards.persist_zone must have lower < upper");
    if (persist_min_run < 0) throw ConfigError("rewards.persist_min_run must be >= 0");
    if (!(d_safe_int > 0.0)) throw ConfigError("rewards.d_safe_int must be > 0");
    if (!(r_success > 0.0)) throw ConfigError("rewards.r_success must be > 0");
    if (!(r_target_lost < 0.0)) throw ConfigError("rewards.r_target_lost must be < 0");
    if (!(r_collision < 0.0)) throw ConfigError("rewards.r_collision must be < 0");
  }
};

struct RewardBreakdown {
  double distance = 0.0;
  double facing = 0.0;
  double persistence = 0.0;
  double safety = 0.0;
  double terminal = 0.0;
  double total = 0.0;
};

inline RewardBreakdown make_breakdown(double distance, double facing, double persistence, double safety,
                                      double terminal) {
  return {distance, facing, persistence, safety, terminal, distance + facing + persistence + safety + terminal};
}

inline double distance_reward(double d, double d_opt, double sigma, double w) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  const double z = (d - d_opt) / sigma;
  return std::exp(-0.5 * z * z) * w;
}

// Clipped cosine of the bearing error, gated on visibility.
inline double facing_reward(const ArenaState& state, Role viewer, const RewardConfig& cfg) {
  if (!target_visible(state, viewer)) return 0.0;
  const double bearing = bearing_to(state.body(viewer).pose, state.target.pose.position());
  return cfg.w_facing * std::max(0.0, std::cos(bearing));
}

inline double persistence_bonus(int zone_run_length, const RewardConfig& cfg) {
  return zone_run_length >= cfg.persist_min_run && zone_run_length > 0 ? cfg.w_persist : 0.0;
}

inline double terminal_reward(TerminationCause cause, const RewardConfig& cfg) {
  switch (cause) {
    case TerminationCause::success: return cfg.r_success;
    case TerminationCause::target_lost: return cfg.r_target_lost;
    case TerminationCause::collision: return cfg.r_collision;
    case TerminationCause::none:
    case TerminationCause::timeout: return 0.0;
  }
  return 0.0;
}

inline double safety_term(double d_int, const RewardConfig& cfg) {
  return -cfg.w_safety * std::max(0.0, 1.0 - d_int / cfg.d_safe_int);
}

inline RewardBreakdown tracker_reward(const ArenaState& state, int run_length, TerminationCause cause,
                                      const RewardConfig& cfg) {
  const Distances d = distances(state);
  return make_breakdown(distance_reward(d.d_trk, cfg.d_opt_trk, cfg.sigma, cfg.w_distance),
                        facing_reward(state, Role::tracker, cfg), persistence_bonus(run_length, cfg),
                        d.d_int ? safety_term(*d.d_int, cfg) : 0.0, terminal_reward(cause, cfg));
}

inline RewardBreakdown opponent_reward(const ArenaState& state, int run_length, TerminationCause cause,
                                       const RewardConfig& cfg) {
  if (!state.opponent) throw UsageError("opponent_reward requires an opponent");
  const Distances d = distances(state);
  return make_breakdown(distance_reward(*d.d_cmp, cfg.d_opt_cmp, cfg.sigma, cfg.w_distance),
                        facing_reward(state, Role::opponent, cfg), persistence_bonus(run_length, cfg), 0.0,
                        terminal_reward(cause, cfg));
}

// Consecutive-steps-in-zone counter for one agent, carried next to the state.
struct ZoneRun {
  int tracker = 0;
  int opponent = 0;

  void update(const ArenaState& s, const RewardConfig& cfg) {
    const Distances d = distances(s);
    auto in_zone = [&cfg](double x) { return x >= cfg.persist_zone_min && x <= cfg.persist_zone_max; };
    tracker = in_zone(d.d_trk) ? tracker + 1 : 0;
    opponent = d.d_cmp && in_zone(*d.d_cmp) ? opponent + 1 : 0;
  }
};

// Terminal cause as seen by the opponent: it only ever pays for its own
// collisions; episode success or loss belongs to the tracker.
inline TerminationCause opponent_cause(const StepEvents& ev) {
  return ev.opponent_collided ? TerminationCause::collision : TerminationCause::none;
}

// Reward for `role` after a step whose events are `ev`.
inline RewardBreakdown role_reward(Role role, const ArenaState& after, const StepEvents& ev, const ZoneRun& run,
                                   const RewardConfig& cfg) {
  if (role == Role::tracker) return tracker_reward(after, run.tracker, ev.cause, cfg);
  return opponent_reward(after, run.opponent, opponent_cause(ev), cfg);
}

}  // namespace comatrack
