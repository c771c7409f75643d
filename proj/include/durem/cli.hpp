#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace durem::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_data = 2;
inline constexpr int exit_numeric = 3;

inline constexpr const char* tool_version = "0.1.0";

// Runs one `durem <command> ...` invocation; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace durem::cli
