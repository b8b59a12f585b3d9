#pragma once

// Policy checkpoint container (JSON, schema "checkpoint", version 1): layer
// shapes, every weight, log_std, the training phase tag, the observation
// layout version, and the hash of the config that produced it.

#include <filesystem>
#include <string>

#include "comatrack/json_util.hpp"
#include "comatrack/policy.hpp"

namespace comatrack {

inline constexpr int kCheckpointSchemaVersion = 1;

namespace phase {
inline constexpr const char* kInit = "init";
inline constexpr const char* kBc = "bc";
inline constexpr const char* kSingleRl = "single_rl";
inline constexpr const char* kMultiRl = "multi_rl";
inline constexpr const char* kMultiRlOpponent = "multi_rl_opponent";
}  // namespace phase

struct Checkpoint {
  PolicyParams params;
  std::string phase = phase::kInit;
  std::string config_hash = "0000000000000000";
  std::uint64_t seed = 0;

  bool operator==(const Checkpoint&) const = default;
};

inline json checkpoint_to_json(const Checkpoint& c) {
  const MlpShape& s = c.params.shape;
  json layers = json::array();
  for (std::size_t l = 0; l < s.layers(); ++l) {
    const auto w = c.params.weights(l);
    const auto b = c.params.bias(l);
    layers.push_back({{"in", s.in(l)},
                      {"out", s.out(l)},
                      {"weights", std::vector<double>(w.begin(), w.end())},
                      {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  const auto ls = c.params.log_std();
  return json{{"header", file_header("checkpoint", c.config_hash, c.seed)},
              {"schema_version", kCheckpointSchemaVersion},
              {"observation_layout_version", kObservationLayoutVersion},
              {"phase", c.phase},
              {"config_hash", c.config_hash},
              {"shape", {{"input", s.input()}, {"hidden", s.hidden()}, {"output", s.output()}}},
              {"layers", layers},
              {"log_std", std::vector<double>(ls.begin(), ls.end())}};
}

inline Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kCheckpointSchemaVersion) throw LoadError("unsupported checkpoint schema");
    if (j.at("observation_layout_version").get<int>() != kObservationLayoutVersion)
      throw LoadError("checkpoint observation layout version mismatch");
    const json& sj = j.at("shape");
    MlpShape shape(sj.at("hidden").get<std::vector<std::size_t>>(), sj.at("input").get<std::size_t>(),
                   sj.at("output").get<std::size_t>());
    if (shape.input() != kObservationSize || shape.output() != kActionSize)
      throw LoadError("checkpoint input/output sizes do not match this build");
    Checkpoint c;
    c.params = PolicyParams(shape);
    const json& layers = j.at("layers");
    if (layers.size() != shape.layers()) throw LoadError("checkpoint layer count mismatch");
    for (std::size_t l = 0; l < shape.layers(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      auto pw = c.params.weights(l);
      auto pb = c.params.bias(l);
      if (w.size() != pw.size() || b.size() != pb.size()) throw LoadError("checkpoint layer size mismatch");
      std::copy(w.begin(), w.end(), pw.begin());
      std::copy(b.begin(), b.end(), pb.begin());
    }
    const auto ls = j.at("log_std").get<std::vector<double>>();
    if (ls.size() != shape.output()) throw LoadError("checkpoint log_std size mismatch");
    std::copy(ls.begin(), ls.end(), c.params.log_std().begin());
    if (!c.params.all_finite()) throw LoadError("checkpoint contains non-finite parameters");
    c.phase = j.at("phase").get<std::string>();
    c.config_hash = j.at("config_hash").get<std::string>();
    c.seed = j.at("header").at("seed").get<std::uint64_t>();
    return c;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline std::string checkpoint_text(const Checkpoint& c) { return checkpoint_to_json(c).dump(1) + "\n"; }

inline void save_checkpoint(const std::filesystem::path& p, const Checkpoint& c) {
  write_file_atomic(p, checkpoint_text(c));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& p) {
  std::string text;
  try {
    text = read_file(p);
  } catch (const InputError& e) {
    throw LoadError(e.what());
  }
  try {
    return checkpoint_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw LoadError(p.string() + ": " + e.what());
  }
}

inline std::string checkpoint_hash(const Checkpoint& c) { return hex64(fnv1a64(checkpoint_text(c))); }

}  // namespace comatrack
