#pragma once

#include <CLI11.hpp>

#include <istream>
#include <string>
#include <utility>
#include <vector>

namespace alle::cli {

/// Reads --config files written as JSON objects whose keys are long flag
/// names without the leading dashes, e.g. {"neighbors": 12, "lr": 0.01}.
/// Top-level keys apply to `section` (the subcommand being run); nested
/// objects address subcommands explicitly. Arrays become repeated values.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string section = {}) : section_(std::move(section)) {}

  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

 private:
  std::string section_;
};

}  // namespace alle::cli
