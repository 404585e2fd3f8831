#pragma once

// `hamtrack track|eval|generate`. Exit codes: 0 success, 1 I/O error,
// 2 configuration or usage error. Only the documented CSV lines go to
// `out`; diagnostics go to `err`.

#include "hamtrack/core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hamtrack {

struct TrackArgs {
  std::string det;
  std::string frames_dir;
  std::string embeddings;
  std::string appearance = "auto";  // hist | embed | none | auto
  std::string config;
  std::vector<std::string> set;     // key=value overrides
  std::string out;
  std::string trace;
  std::string manifest;             // defaults to <out>.manifest.json
  std::string ham;                  // on | off | "" (config value)
  std::string filter;               // sadf | const | none | ""
  bool include_missed = false;
};

struct EvalArgs {
  std::string gt;
  std::string result;
  double iou = 0.5;
};

struct GenerateArgs {
  std::string scenario;
  std::string out_dir;
  bool frames = false;
  long long seed = -1;  // < 0 keeps the scenario's seed
};

/// Effective configuration: defaults, then the config file, then --set,
/// then --ham/--filter/--include-missed. Throws ConfigError or IoError.
TrackerConfig resolve_config(const TrackArgs& args);

int cmd_track(const TrackArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv (argv[0] is the program name) and dispatches.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace hamtrack
