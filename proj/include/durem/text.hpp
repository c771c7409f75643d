#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace durem::text {

// Splits one delimited record; honours double-quoted fields.
std::vector<std::string> split_record(const std::string& line, char delimiter);

std::string trim(std::string_view s);

// Strict decimal parse of the whole (trimmed) field.
std::optional<double> parse_double(std::string_view s);

// Shortest representation that round-trips exactly.
std::string format_double(double value);

// Reads the next non-empty line (CR stripped); false at EOF.
bool next_line(std::istream& in, std::string& line);

// Comma-separated list with surrounding whitespace removed; empty items dropped.
// Commas inside parentheses do not split.
std::vector<std::string> split_list(std::string_view s);

}  // namespace durem::text
