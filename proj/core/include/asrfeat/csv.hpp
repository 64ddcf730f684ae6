#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace asrfeat::csv {

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(std::string_view line);

// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string format_double(double v, int significant_digits);

double parse_double(std::string_view text);
int parse_int(std::string_view text);

// Lines of a text file with trailing '\r' removed.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace asrfeat::csv
