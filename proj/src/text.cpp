#include "durem/text.hpp"

#include <boost/tokenizer.hpp>
#include <fmt/format.h>

#include <charconv>
#include <cmath>

namespace durem::text {

std::vector<std::string> split_record(const std::string& line, char delimiter) {
    using Separator = boost::escaped_list_separator<char>;
    boost::tokenizer<Separator> tokens(line, Separator('\\', delimiter, '"'));
    std::vector<std::string> fields;
    for (const auto& token : tokens) fields.push_back(trim(token));
    return fields;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_double(std::string_view s) {
    const std::string field = trim(s);
    if (field.empty()) return std::nullopt;
    const char* begin = field.data();
    const char* end = field.data() + field.size();
    if (*begin == '+') ++begin;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "NA";
    return fmt::format("{}", value);
}

bool next_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) return true;
    }
    return false;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> items;
    std::string current;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            if (auto item = trim(current); !item.empty()) items.push_back(std::move(item));
            current.clear();
        } else {
            current += c;
        }
    }
    if (auto item = trim(current); !item.empty()) items.push_back(std::move(item));
    return items;
}

}  // namespace durem::text
