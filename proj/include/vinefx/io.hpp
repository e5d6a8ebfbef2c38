#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace vinefx {

/// Shortest decimal text that parses back to the same double.
std::string
format_number(double x);

/// Splits one CSV record on commas (no quoting), dropping a trailing '\r'.
std::vector<std::string>
split_csv_line(const std::string& line);

/// Parses a numeric cell. Blank cells raise ParseError(line), anything else
/// that is not a complete number raises NonNumericCell.
double
parse_cell(const std::string& cell, std::size_t line, const std::string& column);

std::string
read_text(const std::filesystem::path& path);

/// Writes through a temporary file and renames it into place.
void
write_text(const std::filesystem::path& path, const std::string& content);

nlohmann::json
read_json(const std::filesystem::path& path);

void
write_json(const std::filesystem::path& path, const nlohmann::json& j);

} // namespace vinefx
