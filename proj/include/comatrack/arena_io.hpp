#pragma once

// ArenaSpec <-> JSON (schema "arena_spec", version 1). Lengths in meters,
// angles in radians. See README for the field list.

#include <string>

#include "comatrack/arena.hpp"
#include "comatrack/json_util.hpp"

namespace comatrack {

inline constexpr int kArenaSpecSchemaVersion = 1;

inline json vec_to_json(Vec2 v) { return json::array({v.x, v.y}); }
inline json pose_to_json(const Pose& p) { return json{{"x", p.x}, {"y", p.y}, {"heading", p.heading}}; }

inline Vec2 vec_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(path + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Pose pose_from_json(const json& j, const std::string& path) {
  StrictObject o(j, path);
  Pose p{o.get<double>("x"), o.get<double>("y"), o.get<double>("heading")};
  o.finish();
  return p;
}

inline json arena_spec_to_json(const ArenaSpec& s) {
  json obstacles = json::array();
  for (const auto& ob : s.obstacles) {
    if (const auto* c = std::get_if<CircleObstacle>(&ob))
      obstacles.push_back({{"type", "circle"}, {"center", vec_to_json(c->center)}, {"radius", c->radius}});
    else {
      const Rect& r = std::get<RectObstacle>(ob).box;
      obstacles.push_back({{"type", "rect"}, {"min", vec_to_json(r.lo)}, {"max", vec_to_json(r.hi)}});
    }
  }
  json wps = json::array();
  for (Vec2 w : s.target_script.waypoints) wps.push_back(vec_to_json(w));
  return json{
      {"schema_version", kArenaSpecSchemaVersion},
      {"bounds", {{"min", vec_to_json(s.bounds.lo)}, {"max", vec_to_json(s.bounds.hi)}}},
      {"obstacles", obstacles},
      {"tracker_spawn", pose_to_json(s.tracker_spawn)},
      {"opponent_spawn", s.opponent_spawn ? pose_to_json(*s.opponent_spawn) : json(nullptr)},
      {"target_spawn", pose_to_json(s.target_spawn)},
      {"target_script", {{"waypoints", wps}, {"speed", s.target_script.speed}, {"loop", s.target_script.loop}}},
      {"fov_half_angle", s.fov_half_angle},
      {"step_cap_m", s.step_cap_m},
      {"turn_cap_rad", s.turn_cap_rad},
      {"max_steps", s.max_steps},
      {"seed", s.seed},
      {"agent_radius", s.agent_radius},
      {"target_radius", s.target_radius},
      {"lost_patience", s.lost_patience},
      {"success_tr_threshold", s.success_tr_threshold},
      {"track_band", json::array({s.track_band_min, s.track_band_max})},
      {"ray_range", s.ray_range},
  };
}

inline ArenaSpec arena_spec_from_json(const json& j, const std::string& path = "arena") {
  StrictObject o(j, path);
  const int version = o.get<int>("schema_version");
  if (version != kArenaSpecSchemaVersion)
    throw ConfigError(o.sub("schema_version") + ": unsupported version " + std::to_string(version));
  ArenaSpec s;
  {
    StrictObject b(o.at("bounds"), o.sub("bounds"));
    s.bounds.lo = vec_from_json(b.at("min"), b.sub("min"));
    s.bounds.hi = vec_from_json(b.at("max"), b.sub("max"));
    b.finish();
  }
  const json& obs = o.at("obstacles");
  if (!obs.is_array()) throw ConfigError(o.sub("obstacles") + ": expected an array");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    StrictObject ob(obs[i], o.sub("obstacles") + "[" + std::to_string(i) + "]");
    const auto type = ob.get<std::string>("type");
    if (type == "circle") {
      s.obstacles.push_back(CircleObstacle{vec_from_json(ob.at("center"), ob.sub("center")), ob.get<double>("radius")});
    } else if (type == "rect") {
      s.obstacles.push_back(
          RectObstacle{Rect{vec_from_json(ob.at("min"), ob.sub("min")), vec_from_json(ob.at("max"), ob.sub("max"))}});
    } else {
      throw ConfigError(ob.sub("type") + ": unknown obstacle type '" + type + "'");
    }
    ob.finish();
  }
  s.tracker_spawn = pose_from_json(o.at("tracker_spawn"), o.sub("tracker_spawn"));
  if (const json& opp = o.at("opponent_spawn"); !opp.is_null())
    s.opponent_spawn = pose_from_json(opp, o.sub("opponent_spawn"));
  s.target_spawn = pose_from_json(o.at("target_spawn"), o.sub("target_spawn"));
  {
    StrictObject t(o.at("target_script"), o.sub("target_script"));
    const json& wps = t.at("waypoints");
    if (!wps.is_array()) throw ConfigError(t.sub("waypoints") + ": expected an array");
    for (std::size_t i = 0; i < wps.size(); ++i)
      s.target_script.waypoints.push_back(vec_from_json(wps[i], t.sub("waypoints") + "[" + std::to_string(i) + "]"));
    s.target_script.speed = t.get<double>("speed");
    s.target_script.loop = t.get<bool>("loop");
    t.finish();
  }
  s.fov_half_angle = o.get<double>("fov_half_angle");
  s.step_cap_m = o.get<double>("step_cap_m");
  s.turn_cap_rad = o.get<double>("turn_cap_rad");
  s.max_steps = o.get<int>("max_steps");
  s.seed = o.get<std::uint64_t>("seed");
  s.agent_radius = o.get<double>("agent_radius");
  s.target_radius = o.get<double>("target_radius");
  s.lost_patience = o.get<int>("lost_patience");
  s.success_tr_threshold = o.get<double>("success_tr_threshold");
  {
    const json& band = o.at("track_band");
    const Vec2 b = vec_from_json(band, o.sub("track_band"));
    s.track_band_min = b.x;
    s.track_band_max = b.y;
  }
  s.ray_range = o.get<double>("ray_range");
  o.finish();
  return s;
}

// Full snapshot, including the observer memories and RNG words.
inline json arena_state_to_json(const ArenaState& st) {
  auto body = [](const AgentBody& b) { return json{{"pose", pose_to_json(b.pose)}, {"radius", b.radius}}; };
  auto mem = [](const ObserverMemory& m) { return json{{"last_seen", vec_to_json(m.last_seen)}, {"age", m.age}}; };
  auto wp = [](const Waypoint& w) { return json::array({w.dx, w.dy, w.dtheta}); };
  const auto* w = st.rng.words();
  return json{
      {"spec", arena_spec_to_json(*st.spec)},
      {"step", st.step},
      {"tracker", body(st.tracker)},
      {"opponent", st.opponent ? body(*st.opponent) : json(nullptr)},
      {"target", body(st.target)},
      {"cursor",
       {{"index", st.cursor.index == detail::kResampled ? -1 : static_cast<long long>(st.cursor.index)},
        {"goal", vec_to_json(st.cursor.goal)},
        {"previous_goal", vec_to_json(st.cursor.previous_goal)}}},
      {"rng", json::array({w[0], w[1], w[2], w[3]})},
      {"events",
       {{"tracker_collided", st.events.tracker_collided},
        {"opponent_collided", st.events.opponent_collided},
        {"tracker_sees_target", st.events.tracker_sees_target},
        {"opponent_sees_target", st.events.opponent_sees_target},
        {"terminated", st.events.terminated},
        {"cause", to_string(st.events.cause)}}},
      {"tracker_memory", mem(st.tracker_memory)},
      {"opponent_memory", mem(st.opponent_memory)},
      {"tracker_last", wp(st.tracker_last)},
      {"opponent_last", wp(st.opponent_last)},
      {"tracked_steps", st.tracked_steps},
      {"lost_streak", st.lost_streak},
  };
}

}  // namespace comatrack
