#pragma once

// Training-curve export: diagnostics logs (JSON lines) to one CSV table.

#include <sstream>
#include <string>
#include <vector>

#include "comatrack/error.hpp"
#include "comatrack/grpo.hpp"
#include "comatrack/json_util.hpp"

namespace comatrack {

struct CurveRow {
  std::string source;
  IterationRecord record;
};

inline std::vector<IterationRecord> parse_diagnostics(const std::string& text, const std::string& source) {
  std::vector<IterationRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source + ": line " + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      if (!saw_header) {
        if (j.at("header").at("kind").get<std::string>() != "diagnostics")
          throw LoadError(where + ": not a diagnostics log");
        if (j.at("schema_version").get<int>() != kDiagnosticsSchemaVersion)
          throw LoadError(where + ": unsupported diagnostics schema");
        saw_header = true;
        continue;
      }
      IterationRecord r;
      r.round = j.at("round").get<std::size_t>();
      r.iteration = j.at("iteration").get<std::size_t>();
      r.agent = j.at("agent").get<std::string>();
      r.mean_return = j.at("mean_return").get<double>();
      r.mean_advantage_std = j.at("mean_advantage_std").get<double>();
      r.clip_fraction = j.at("clip_fraction").get<double>();
      r.kl = j.at("kl").get<double>();
      r.entropy = j.at("entropy").get<double>();
      r.mean_ratio = j.at("mean_ratio").get<double>();
      r.loss = j.at("loss").get<double>();
      r.wall_time_s = j.at("wall_time_s").get<double>();
      out.push_back(r);
    } catch (const json::exception&) {
      throw LoadError(where + ": corrupt diagnostics record");
    }
  }
  if (!saw_header) throw LoadError(source + ": empty diagnostics log");
  return out;
}

inline constexpr const char* kCurvesCsvHeader =
    "source,round,iteration,agent,mean_return,mean_advantage_std,clip_fraction,kl,entropy,mean_ratio,loss,wall_time_s";

inline std::string curves_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << kCurvesCsvHeader << "\n";
  for (const auto& row : rows) {
    const auto& r = row.record;
    os << row.source << ',' << r.round << ',' << r.iteration << ',' << r.agent << ',' << r.mean_return << ','
       << r.mean_advantage_std << ',' << r.clip_fraction << ',' << r.kl << ',' << r.entropy << ',' << r.mean_ratio
       << ',' << r.loss << ',' << r.wall_time_s << "\n";
  }
  return os.str();
}

}  // namespace comatrack
