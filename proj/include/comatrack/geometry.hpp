#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace comatrack {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Wraps into (-pi, pi].
inline double normalize_angle(double a) {
  if (!std::isfinite(a)) return a;
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose&) const = default;
};

inline Vec2 to_world(const Pose& frame, Vec2 local) { return frame.position() + rotate(local, frame.heading); }
inline Vec2 to_local(const Pose& frame, Vec2 world) { return rotate(world - frame.position(), -frame.heading); }

// Bearing of a world point in the frame's coordinates, in (-pi, pi].
inline double bearing_to(const Pose& frame, Vec2 world) {
  const Vec2 local = to_local(frame, world);
  if (local.x == 0.0 && local.y == 0.0) return 0.0;
  return normalize_angle(std::atan2(local.y, local.x));
}

struct Rect {
  Vec2 lo;
  Vec2 hi;
  bool operator==(const Rect&) const = default;
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
};

inline Vec2 closest_point(const Rect& r, Vec2 p) {
  return {std::clamp(p.x, r.lo.x, r.hi.x), std::clamp(p.y, r.lo.y, r.hi.y)};
}

// Distance from a point to a closed rectangle (0 inside).
inline double distance_to_rect(const Rect& r, Vec2 p) { return distance(p, closest_point(r, p)); }

// Distance from point to closed segment [a, b].
inline double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

// ---------------------------------------------------------------------------
// Swept-disc queries. A disc whose center moves along p + t*d, t in [0, 1], is
// tested against a shape already inflated by the disc radius. Contact times
// follow the open-set convention: grazing (distance exactly equal to the
// inflated radius) is not a hit.

// First time the moving point enters the open disc |x - c| < radius.
inline std::optional<double> sweep_circle(Vec2 p, Vec2 d, Vec2 c, double radius) {
  const Vec2 m = p - c;
  const double a = dot(d, d);
  const double b = dot(m, d);
  const double k = dot(m, m) - radius * radius;
  if (a == 0.0) return std::nullopt;
  if (k <= 0.0) {
    // Touching or inside already: any non-receding motion is blocked at once.
    if (b <= 0.0) return 0.0;
    return std::nullopt;
  }
  if (b >= 0.0) return std::nullopt;
  const double disc = b * b - a * k;
  if (disc <= 0.0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / a;
  if (t > 1.0) return std::nullopt;
  return std::max(t, 0.0);
}

// First time the moving point enters the open box (lo, hi).
inline std::optional<double> sweep_box(Vec2 p, Vec2 d, Vec2 lo, Vec2 hi) {
  double t0 = -kInf, t1 = kInf;
  const double ps[2] = {p.x, p.y}, ds[2] = {d.x, d.y}, los[2] = {lo.x, lo.y}, his[2] = {hi.x, hi.y};
  for (int i = 0; i < 2; ++i) {
    if (ds[i] == 0.0) {
      if (ps[i] <= los[i] || ps[i] >= his[i]) return std::nullopt;
      continue;
    }
    double ta = (los[i] - ps[i]) / ds[i];
    double tb = (his[i] - ps[i]) / ds[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 >= t1 || t1 <= 0.0 || t0 > 1.0) return std::nullopt;
  return std::max(t0, 0.0);
}

// Moving disc of `radius` against a rectangle: the Minkowski sum is the union
// of two inflated boxes and four corner discs.
inline std::optional<double> sweep_rounded_rect(Vec2 p, Vec2 d, const Rect& r, double radius) {
  std::optional<double> best;
  auto take = [&best](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  take(sweep_box(p, d, {r.lo.x - radius, r.lo.y}, {r.hi.x + radius, r.hi.y}));
  take(sweep_box(p, d, {r.lo.x, r.lo.y - radius}, {r.hi.x, r.hi.y + radius}));
  take(sweep_circle(p, d, r.lo, radius));
  take(sweep_circle(p, d, r.hi, radius));
  take(sweep_circle(p, d, {r.lo.x, r.hi.y}, radius));
  take(sweep_circle(p, d, {r.hi.x, r.lo.y}, radius));
  return best;
}

// Moving disc constrained inside `bounds`: first time the disc would poke out.
// Reaching the wall exactly at t = 1 is tangency, not a hit.
inline std::optional<double> sweep_inside(Vec2 p, Vec2 d, const Rect& bounds, double radius) {
  double t_exit = kInf;
  const double ps[2] = {p.x, p.y}, ds[2] = {d.x, d.y};
  const double los[2] = {bounds.lo.x + radius, bounds.lo.y + radius};
  const double his[2] = {bounds.hi.x - radius, bounds.hi.y - radius};
  for (int i = 0; i < 2; ++i) {
    if (ds[i] > 0.0) t_exit = std::min(t_exit, (his[i] - ps[i]) / ds[i]);
    if (ds[i] < 0.0) t_exit = std::min(t_exit, (los[i] - ps[i]) / ds[i]);
  }
  if (t_exit >= 1.0) return std::nullopt;
  return std::max(t_exit, 0.0);
}

// ---------------------------------------------------------------------------
// Rays (origin o, unit direction u): distance to first surface, or nullopt.

inline std::optional<double> ray_circle(Vec2 o, Vec2 u, Vec2 c, double radius) {
  const Vec2 m = o - c;
  const double b = dot(m, u);
  const double k = dot(m, m) - radius * radius;
  if (k <= 0.0) return 0.0;
  if (b > 0.0) return std::nullopt;
  const double disc = b * b - k;
  if (disc < 0.0) return std::nullopt;
  return -b - std::sqrt(disc);
}

inline std::optional<double> ray_rect(Vec2 o, Vec2 u, const Rect& r) {
  double t0 = 0.0, t1 = kInf;
  const double os[2] = {o.x, o.y}, us[2] = {u.x, u.y}, los[2] = {r.lo.x, r.lo.y}, his[2] = {r.hi.x, r.hi.y};
  for (int i = 0; i < 2; ++i) {
    if (us[i] == 0.0) {
      if (os[i] < los[i] || os[i] > his[i]) return std::nullopt;
      continue;
    }
    double ta = (los[i] - os[i]) / us[i];
    double tb = (his[i] - os[i]) / us[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::nullopt;
  return t0;
}

// Distance from an interior origin to the boundary of `bounds`.
inline double ray_bounds_exit(Vec2 o, Vec2 u, const Rect& bounds) {
  double t = kInf;
  if (u.x > 0.0) t = std::min(t, (bounds.hi.x - o.x) / u.x);
  if (u.x < 0.0) t = std::min(t, (bounds.lo.x - o.x) / u.x);
  if (u.y > 0.0) t = std::min(t, (bounds.hi.y - o.y) / u.y);
  if (u.y < 0.0) t = std::min(t, (bounds.lo.y - o.y) / u.y);
  return std::max(t, 0.0);
}

// ---------------------------------------------------------------------------
// Open-segment blocking tests used for line of sight.

// True iff the segment [a, b] passes strictly inside the disc.
inline bool segment_hits_disc(Vec2 a, Vec2 b, Vec2 c, double radius) {
  return distance_to_segment(c, a, b) < radius;
}

// True iff the segment [a, b] passes through the open interior of the box.
inline bool segment_hits_rect(Vec2 a, Vec2 b, const Rect& r) {
  const Vec2 d = b - a;
  double t0 = 0.0, t1 = 1.0;
  const double as[2] = {a.x, a.y}, ds[2] = {d.x, d.y}, los[2] = {r.lo.x, r.lo.y}, his[2] = {r.hi.x, r.hi.y};
  for (int i = 0; i < 2; ++i) {
    if (ds[i] == 0.0) {
      if (as[i] <= los[i] || as[i] >= his[i]) return false;
      continue;
    }
    double ta = (los[i] - as[i]) / ds[i];
    double tb = (his[i] - as[i]) / ds[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t0 < t1;
}

}  // namespace comatrack
