#pragma once

// Experiment configuration, dispatch and serialisation shared by the command
// line tool and the Python module.
//
// A config is a JSON object: flat parameters plus optional nested "region" and
// "flow" blocks (either inline objects or paths to description files). Values
// are resolved as defaults <- config file <- command-line flags.

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "htree/error.hpp"

namespace htree {

using Json = nlohmann::ordered_json;

const std::vector<std::string>& experiment_commands();

/// Defaults for a subcommand, including the common keys seed, replicas and
/// format. Throws Error(parse) for unknown subcommands.
Json default_config(const std::string& command);

/// One-line description of each parameter, for --help.
std::string parameter_help(const std::string& command, const std::string& key);

/// Overlays `file` and then the textual flag values onto the defaults. Unknown
/// keys and ill-typed values raise Error(parse). Region and flow paths are
/// replaced by the parsed descriptions so the result is self-contained.
Json resolve_config(const std::string& command, const Json& file,
                    const std::vector<std::pair<std::string, std::string>>& flags);

Json read_config_file(const std::string& path);

struct ExperimentRecord {
  std::string command;
  Json config;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> summary;
  bool pass = true;  // false when the experiment reports a failed check
};

/// Runs a resolved config. Throws htree::Error on invalid models.
ExperimentRecord run_experiment(const std::string& command, const Json& config);

/// CSV: "# key: value" comment lines (command, config, summary), a header row,
/// comma-separated values, LF line endings.
std::string to_csv(const ExperimentRecord& record);
/// {"command", "config", "columns", "rows", "summary"}.
std::string to_json(const ExperimentRecord& record);
std::string render(const ExperimentRecord& record);  // by config["format"]

/// 2 for parse/argument errors, 3 for infeasible models, 4 for size caps.
int exit_code(ErrorCode code);

/// 17 significant digits.
std::string format_double(double x);

}  // namespace htree
