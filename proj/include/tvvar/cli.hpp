#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace tvvar {

// One row per config key. The same table drives CLI11 registration, config
// file validation, default values, and --help text, so the three cannot
// drift apart. `command` is a subcommand name or "*" for keys shared by all
// subcommands.
struct OptionSpec {
  const char* command;
  const char* key;    // long flag name and config-file key
  char type;          // s string, i int, l long, u uint64, d double, f flag
  bool required;
  const char* default_value;  // parsed per `type`; ignored when required
  const char* help;
};

const std::vector<OptionSpec>& cli_schema();

std::vector<std::string> cli_command_names();

// Effective configuration of one invocation after merging defaults, the
// optional config file, and command-line flags (in increasing precedence).
struct RunConfig {
  std::string command;
  nlohmann::json doc;
  std::uint64_t seed = 1;

  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& fallback) const;
  long integer(const std::string& key) const;
  std::uint64_t uinteger(const std::string& key) const;
  double number(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> number_list(const std::string& key) const;
  std::vector<std::string> string_list(const std::string& key) const;
};

// Exposed for tests: defaults < config file < overrides, with unknown-key
// rejection and type coercion.
RunConfig merge_run_config(const std::string& command, const nlohmann::json& file_values,
                           const nlohmann::json& cli_values);

int run_cli(int argc, char** argv);

}  // namespace tvvar
