// comatrack: demo collection, training phases, benchmark suites and curves.
//
// Exit codes: 0 ok, 2 usage or config error, 3 runtime or training error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "comatrack/bc.hpp"
#include "comatrack/bench.hpp"
#include "comatrack/checkpoint.hpp"
#include "comatrack/config.hpp"
#include "comatrack/curves.hpp"
#include "comatrack/pipeline.hpp"

namespace fs = std::filesystem;
using namespace comatrack;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, Common& c, bool run_seed = true) {
  cmd->add_option("-c,--config", c.config_path, "run config (JSON); defaults apply when omitted");
  cmd->add_option("--set", c.overrides, "override a config key, e.g. --set grpo.iterations=50");
  if (run_seed) cmd->add_option("--seed", c.seed, "run seed (overrides config seed)");
  cmd->add_option("--workers", c.workers, "worker threads");
}

RunConfig resolve(const Common& c) {
  json doc = json::object();
  if (!c.config_path.empty()) {
    std::string text;
    try {
      text = read_file(c.config_path);
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
    try {
      doc = json::parse(text);
    } catch (const json::parse_error&) {
      throw ConfigError(c.config_path + ": invalid JSON");
    }
  }
  for (const auto& o : c.overrides) apply_override(doc, o);
  if (c.seed) doc["seed"] = *c.seed;
  if (c.workers) doc["workers"] = *c.workers;
  return run_config_from_json(doc);
}

fs::path out_path(const RunConfig& cfg, const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  return fs::path(cfg.output_dir) / fallback;
}

void line(const json& j) {
  std::cout << j.dump() << std::endl;
}

Checkpoint load_init(const std::string& path) {
  if (path.empty()) throw UsageError("--init checkpoint is required for this phase");
  return load_checkpoint(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comatrack: competitive tracking training and benchmark tool"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;

  // collect
  std::string collect_out;
  auto* collect = app.add_subcommand("collect", "roll out the scripted expert and write a demo dataset");
  add_common(collect, common);
  collect->add_option("-o,--out", collect_out, "dataset path (default <output_dir>/demos.jsonl)");

  // train
  std::string phase_name, init_path, demos_path, train_out;
  auto* train = app.add_subcommand("train", "train one phase: bc, single or multi");
  add_common(train, common);
  train->add_option("--phase", phase_name, "bc | single | multi")->required()->check(
      CLI::IsMember({"bc", "single", "multi"}));
  train->add_option("--init", init_path, "initial checkpoint (bc: optional, single/multi: bc-tagged)");
  train->add_option("--demos", demos_path, "demo dataset for --phase bc (default <output_dir>/demos.jsonl)");
  train->add_option("-o,--out-dir", train_out, "output directory (default <output_dir>)");

  // bench
  auto* bench = app.add_subcommand("bench", "benchmark suites");
  bench->require_subcommand(1);
  std::optional<std::uint64_t> suite_seed;
  std::optional<std::size_t> suite_count;
  std::string behavior_name, opp_checkpoint, gen_out;
  auto* gen = bench->add_subcommand("generate", "write an episode suite manifest");
  add_common(gen, common, false);
  gen->add_option("--seed", suite_seed, "suite seed (default bench.seed)");
  gen->add_option("--count", suite_count, "episodes (default bench.count)");
  gen->add_option("--behavior", behavior_name, "static | random | competitive (default bench.behavior)");
  gen->add_option("--checkpoint", opp_checkpoint, "opponent checkpoint (competitive suites)");
  gen->add_option("-o,--out", gen_out, "manifest path (default <output_dir>/suite.json)");

  std::string eval_ckpt, eval_suite, eval_out, eval_records;
  auto* eval = bench->add_subcommand("evaluate", "run a tracker checkpoint on a suite and score it");
  add_common(eval, common);
  eval->add_option("--checkpoint", eval_ckpt, "tracker checkpoint")->required();
  eval->add_option("--suite", eval_suite, "suite manifest")->required();
  eval->add_option("-o,--out", eval_out, "report path (default <output_dir>/report.json)");
  eval->add_option("--records", eval_records, "per-episode records (default <output_dir>/records.jsonl)");

  // curves
  std::vector<std::string> logs;
  std::string curves_out;
  auto* curves = app.add_subcommand("curves", "export diagnostics logs as one CSV table");
  curves->add_option("logs", logs, "diagnostics logs");
  curves->add_option("-o,--out", curves_out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*collect) {
      const RunConfig cfg = resolve(common);
      const auto demos = run_collect(cfg);
      const fs::path out = out_path(cfg, collect_out, "demos.jsonl");
      const std::string text = demos_text(demos, config_hash(cfg), cfg.seed);
      write_file_atomic(out, text);
      line({{"event", "collect"}, {"episodes", cfg.bc.episodes}, {"demos", demos.size()}, {"seed", cfg.seed},
            {"path", out.string()}, {"hash", hex64(fnv1a64(text))}});
    } else if (*train) {
      const RunConfig cfg = resolve(common);
      const fs::path dir = train_out.empty() ? fs::path(cfg.output_dir) : fs::path(train_out);
      const std::string hash = config_hash(cfg);
      if (phase_name == "bc") {
        const auto demos = load_demos(demos_path.empty() ? dir / "demos.jsonl" : fs::path(demos_path));
        const PolicyParams init = init_path.empty() ? initial_policy(cfg) : load_checkpoint(init_path).params;
        const BcResult r = run_bc(cfg, demos, init);
        save_checkpoint(dir / "bc.ckpt.json", r.checkpoint);
        json log{{"header", file_header("bc_log", hash, cfg.seed)},
                 {"initial_holdout_loss", r.initial_holdout_loss},
                 {"final_holdout_loss", r.final_holdout_loss},
                 {"epoch_train_loss", r.epoch_train_loss}};
        write_file_atomic(dir / "bc.log.json", log.dump(1) + "\n");
        line({{"event", "train"}, {"phase", "bc"}, {"demos", demos.size()},
              {"final_holdout_loss", r.final_holdout_loss}, {"checkpoint", (dir / "bc.ckpt.json").string()}});
      } else if (phase_name == "single") {
        const Checkpoint init = load_init(init_path);
        const TrainResult r = run_single(cfg, init);
        save_checkpoint(dir / "single_rl.ckpt.json", r.checkpoint);
        write_file_atomic(dir / "single_rl.log.jsonl", diagnostics_text(r.diagnostics, hash, cfg.seed));
        line({{"event", "train"}, {"phase", "single"}, {"iterations", r.diagnostics.size()},
              {"checkpoint", (dir / "single_rl.ckpt.json").string()}});
      } else {
        const Checkpoint init = load_init(init_path);
        const MarlResult r = run_multi(cfg, init);
        save_checkpoint(dir / "multi_rl.ckpt.json", r.tracker);
        save_checkpoint(dir / "multi_rl_opponent.ckpt.json", r.opponent);
        write_file_atomic(dir / "multi_rl.log.jsonl", diagnostics_text(r.diagnostics, hash, cfg.seed));
        line({{"event", "train"}, {"phase", "multi"}, {"records", r.diagnostics.size()},
              {"checkpoint", (dir / "multi_rl.ckpt.json").string()},
              {"opponent_checkpoint", (dir / "multi_rl_opponent.ckpt.json").string()}});
      }
    } else if (*gen) {
      const RunConfig cfg = resolve(common);
      const BehaviorKind kind = behavior_name.empty() ? cfg.bench.behavior : behavior_from_string(behavior_name);
      const std::uint64_t s = suite_seed.value_or(cfg.bench.seed);
      const std::size_t n = suite_count.value_or(cfg.bench.count);
      if (kind == BehaviorKind::competitive && opp_checkpoint.empty())
        throw UsageError("competitive suites need --checkpoint for the opponent");
      const auto suite = generate_suite(s, n, kind, cfg.arena, opp_checkpoint);
      const fs::path out = out_path(cfg, gen_out, "suite.json");
      write_file_atomic(out, suite_text(suite, config_hash(cfg)));
      line({{"event", "bench_generate"}, {"behavior", to_string(kind)}, {"count", suite.size()}, {"seed", s},
            {"path", out.string()}});
    } else if (*eval) {
      const RunConfig cfg = resolve(common);
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      std::vector<EpisodeSpec> suite;
      try {
        suite = load_suite(eval_suite);
      } catch (const InputError& e) {
        throw LoadError(e.what());
      }
      const Evaluation ev = evaluate(ckpt.params, suite, evaluation_config(cfg), file_checkpoint_resolver());
      const std::string hash = config_hash(cfg);
      const fs::path out = out_path(cfg, eval_out, "report.json");
      write_file_atomic(out, report_text(ev.report, checkpoint_hash(ckpt), hash, cfg.seed));
      write_file_atomic(out_path(cfg, eval_records, "records.jsonl"), records_text(ev.records, hash, cfg.seed));
      line({{"event", "bench_evaluate"},
            {"SR", ev.report.overall.sr},
            {"TR", ev.report.overall.tr},
            {"CR", ev.report.overall.cr},
            {"episodes", ev.report.overall.episodes},
            {"report", out.string()}});
    } else if (*curves) {
      if (logs.empty()) throw UsageError("curves needs at least one diagnostics log");
      std::vector<CurveRow> rows;
      for (const auto& path : logs) {
        std::string text;
        try {
          text = read_file(path);
        } catch (const InputError& e) {
          throw LoadError(e.what());
        }
        for (auto& r : parse_diagnostics(text, path)) rows.push_back({path, std::move(r)});
      }
      const std::string csv = curves_csv(rows);
      if (curves_out.empty()) {
        std::cout << csv;
      } else {
        write_file_atomic(curves_out, csv);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
