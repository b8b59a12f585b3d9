#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace comatrack {

// Fixed-layout conditioning vector consumed by the policy. Bump
// kObservationLayoutVersion whenever the layout below changes; checkpoints
// and demo datasets embed it and refuse to load across versions.
inline constexpr int kObservationLayoutVersion = 1;
inline constexpr std::size_t kObservationSize = 21;
inline constexpr std::size_t kRayCount = 8;

namespace obs {
inline constexpr std::size_t kTargetX = 0;         // viewer frame, meters (last seen when occluded)
inline constexpr std::size_t kTargetY = 1;
inline constexpr std::size_t kTargetVisible = 2;   // {0, 1}
inline constexpr std::size_t kTargetDistance = 3;  // meters
inline constexpr std::size_t kTargetBearing = 4;   // radians
inline constexpr std::size_t kTargetAge = 5;       // steps since seen / age cap, in [0, 1]
inline constexpr std::size_t kOtherX = 6;          // other agent, viewer frame, meters
inline constexpr std::size_t kOtherY = 7;
inline constexpr std::size_t kOtherPresent = 8;    // {0, 1}
inline constexpr std::size_t kInterDistance = 9;   // meters
inline constexpr std::size_t kRays = 10;           // 8 rays, distance / range cap, in [0, 1]
inline constexpr std::size_t kPrevWaypoint = 18;   // dx, dy, dtheta of last executed waypoint
}  // namespace obs

struct Observation {
  std::array<double, kObservationSize> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const Observation&) const = default;

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

}  // namespace comatrack
