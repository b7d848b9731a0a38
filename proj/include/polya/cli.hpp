#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace polya::cli {

/// Bad configuration file or flag value; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Every config key with its default value.
nlohmann::json default_config();

/// Parses `text` as JSON and overlays it on the defaults. Unknown keys and
/// type mismatches throw ConfigError naming the line or the field.
nlohmann::json resolve_config(const std::string& text);

/// Runs one subcommand; `args` excludes the program name. Returns 0 on
/// success, 1 when a check or a numerical routine fails and 2 on invalid
/// configuration or arguments.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polya::cli
