#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace alle::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kUsageError = 2,
  kNumericalError = 3,
};

/// Runs `alle <args...>`; args excludes the program name. The run manifest
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace alle::cli
