#pragma once

// Behavior cloning: scripted-expert demonstrations and waypoint regression of
// the policy mean onto the expert plan.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "comatrack/bench.hpp"
#include "comatrack/checkpoint.hpp"
#include "comatrack/expert.hpp"
#include "comatrack/json_util.hpp"
#include "comatrack/optimizer.hpp"
#include "comatrack/parallel.hpp"
#include "comatrack/policy.hpp"
#include "comatrack/scenario.hpp"

namespace comatrack {

inline constexpr int kDemoSchemaVersion = 1;

struct Demo {
  Observation observation;
  ActionVector expert_plan{};
  bool operator==(const Demo&) const = default;
};

struct CollectConfig {
  std::size_t episodes_per_spec = 1;
  std::size_t workers = 1;
  // Gaussian noise on the executed first waypoint (labels stay clean), so the
  // dataset covers states slightly off the expert's own path.
  double action_noise = 0.0;
};

// One demo per control step of each expert rollout, in (spec, episode, step)
// order. Competitive opponents act with `competitive` params when given.
inline std::vector<Demo> collect_demos(const std::vector<EpisodeSpec>& specs, const CollectConfig& cfg,
                                       const ExpertConfig& expert, std::uint64_t seed,
                                       std::shared_ptr<const PolicyParams> competitive = nullptr) {
  expert.validate();
  if (cfg.action_noise < 0.0) throw ConfigError("collect.action_noise must be >= 0");
  const std::size_t n = specs.size() * cfg.episodes_per_spec;
  std::vector<std::vector<Demo>> per_episode(n);
  parallel_for(n, cfg.workers, [&](std::size_t k) {
    const std::size_t si = k / cfg.episodes_per_spec;
    const std::size_t e = k % cfg.episodes_per_spec;
    ArenaSpec arena = specs[si].arena;
    arena.seed = derive_seed(seed, {si, e});
    ArenaState state = build_arena(arena);
    const Controller opponent = state.opponent ? make_opponent_controller(specs[si].opponent, competitive) : Controller{};
    auto& out = per_episode[k];
    Rng noise(derive_seed(seed, {si, e, 0x6e6fULL}));
    while (!state.terminated()) {
      const ActionPlan plan = expert_policy(state, Role::tracker, expert);
      out.push_back({observe(state, Role::tracker), plan.flatten()});
      std::optional<ActionPlan> op;
      if (opponent) op = opponent(state, Role::opponent);
      ActionPlan exec = plan;
      if (cfg.action_noise > 0.0) {
        exec.waypoints[0].dx += cfg.action_noise * noise.normal();
        exec.waypoints[0].dy += cfg.action_noise * noise.normal();
        exec.waypoints[0].dtheta += cfg.action_noise * noise.normal();
      }
      advance(state, exec, op);
    }
  });
  std::vector<Demo> demos;
  for (auto& v : per_episode) demos.insert(demos.end(), v.begin(), v.end());
  return demos;
}

inline std::vector<Demo> collect_demos(const std::vector<ArenaSpec>& specs, std::size_t episodes_per_spec,
                                       const ExpertConfig& expert, std::uint64_t seed) {
  std::vector<EpisodeSpec> eps;
  for (std::size_t i = 0; i < specs.size(); ++i) eps.push_back(EpisodeSpec{specs[i], {}, i, seed});
  return collect_demos(eps, CollectConfig{episodes_per_spec, 1}, expert, seed);
}

// Mean over the batch of the summed squared waypoint error, and its gradient.
struct BcLoss {
  double loss = 0.0;
  Gradient grad;
};

inline BcLoss bc_loss(const PolicyParams& params, std::span<const Demo> batch) {
  if (batch.empty()) throw UsageError("bc_loss needs a non-empty batch");
  BcLoss out{0.0, Gradient(params.shape)};
  ForwardCache cache;
  std::vector<double> scratch;
  const ActionVector no_log_std{};
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Demo& d : batch) {
    forward_into(params, d.observation, cache);
    ActionVector d_mean{};
    for (std::size_t i = 0; i < kActionSize; ++i) {
      const double diff = cache.head.mean[i] - d.expert_plan[i];
      out.loss += diff * diff * inv_n;
      d_mean[i] = 2.0 * diff * inv_n;
    }
    backward_head(params, cache, d_mean, no_log_std, out.grad, scratch);
  }
  return out;
}

inline BcLoss bc_loss(const PolicyParams& params, const std::vector<Demo>& batch) {
  return bc_loss(params, std::span<const Demo>(batch));
}

struct BcConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double holdout_fraction = 0.1;

  void validate() const {
    if (batch_size < 1) throw ConfigError("bc.batch_size must be >= 1");
    if (learning_rate < 0.0) throw ConfigError("bc.learning_rate must be >= 0");
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) throw ConfigError("bc.holdout_fraction must be in [0, 1)");
  }
};

struct BcResult {
  Checkpoint checkpoint;
  double initial_holdout_loss = 0.0;
  double final_holdout_loss = 0.0;
  std::vector<double> epoch_train_loss;
};

inline double mean_loss(const PolicyParams& params, const std::vector<Demo>& demos,
                        const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i : idx) {
    const GaussianHead h = forward(params, demos[i].observation);
    for (std::size_t k = 0; k < kActionSize; ++k) {
      const double diff = h.mean[k] - demos[i].expert_plan[k];
      total += diff * diff;
    }
  }
  return total / static_cast<double>(idx.size());
}

inline BcResult train_bc(const PolicyParams& init, const std::vector<Demo>& demos, const BcConfig& cfg,
                         std::uint64_t seed) {
  cfg.validate();
  if (demos.empty()) throw UsageError("train_bc needs demonstrations");
  Rng rng(derive_seed(seed, {0x6263ULL}));
  std::vector<std::size_t> order(demos.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::size_t n_hold = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(demos.size())));
  if (n_hold >= demos.size()) n_hold = demos.size() - 1;
  const std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());

  BcResult result;
  result.checkpoint.params = init;
  result.checkpoint.phase = phase::kBc;
  result.checkpoint.seed = seed;
  PolicyParams& params = result.checkpoint.params;
  result.initial_holdout_loss = mean_loss(params, demos, holdout);

  AdamState opt;
  const AdamConfig adam{cfg.learning_rate};
  std::vector<Demo> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.below(i)]);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(demos[train[i]]);
      BcLoss l = bc_loss(params, batch);
      if (!std::isfinite(l.loss) || !l.grad.all_finite())
        throw TrainingError("behavior cloning diverged at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + " (loss " + std::to_string(l.loss) + ")");
      if (cfg.learning_rate > 0.0) adam_step(params, l.grad, opt, adam);
      epoch_loss += l.loss;
      ++batches;
    }
    result.epoch_train_loss.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
  }
  result.final_holdout_loss = mean_loss(params, demos, holdout);
  if (!std::isfinite(result.final_holdout_loss)) throw TrainingError("behavior cloning produced a non-finite loss");
  return result;
}

// ---------------------------------------------------------------------------
// Demo dataset: JSON lines. Line 1 is a header with the schema and
// observation layout versions; each further line is {"obs": [21], "plan": [15]}.

inline std::string demos_text(const std::vector<Demo>& demos, const std::string& config_hash, std::uint64_t seed) {
  json header{{"header", file_header("demos", config_hash, seed)},
              {"schema_version", kDemoSchemaVersion},
              {"observation_layout_version", kObservationLayoutVersion},
              {"count", demos.size()}};
  std::string out = header.dump() + "\n";
  for (const auto& d : demos) {
    out += json{{"obs", d.observation.values}, {"plan", d.expert_plan}}.dump();
    out += "\n";
  }
  return out;
}

inline std::vector<Demo> demos_from_text(const std::string& text) {
  std::vector<Demo> demos;
  std::size_t pos = 0, line_no = 0;
  std::size_t expected = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() : end + 1;
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw LoadError("demo dataset line " + std::to_string(line_no) + " is not valid JSON");
    }
    try {
      if (line_no == 1) {
        if (j.at("schema_version").get<int>() != kDemoSchemaVersion) throw LoadError("unsupported demo schema");
        if (j.at("observation_layout_version").get<int>() != kObservationLayoutVersion)
          throw LoadError("demo dataset observation layout version mismatch");
        expected = j.at("count").get<std::size_t>();
        continue;
      }
      Demo d;
      const auto o = j.at("obs").get<std::vector<double>>();
      const auto p = j.at("plan").get<std::vector<double>>();
      if (o.size() != kObservationSize || p.size() != kActionSize) throw LoadError("demo record has wrong sizes");
      std::copy(o.begin(), o.end(), d.observation.values.begin());
      std::copy(p.begin(), p.end(), d.expert_plan.begin());
      demos.push_back(d);
    } catch (const json::exception&) {
      throw LoadError("demo dataset line " + std::to_string(line_no) + " is malformed");
    }
  }
  if (line_no == 0) throw LoadError("demo dataset is empty");
  if (demos.size() != expected) throw LoadError("demo dataset record count does not match its header");
  return demos;
}

inline std::vector<Demo> load_demos(const std::filesystem::path& p) {
  std::string text;
  try {
    text = read_file(p);
  } catch (const InputError& e) {
    throw LoadError(e.what());
  }
  return demos_from_text(text);
}

}  // namespace comatrack
