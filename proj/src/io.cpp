#include "vinefx/io.hpp"

#include "vinefx/errors.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace vinefx {

std::string
format_number(double x)
{
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::vector<std::string>
split_csv_line(const std::string& line)
{
  std::string s = line;
  if (!s.empty() && s.back() == '\r')
    s.pop_back();
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma - start));
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  for (auto& cell : out) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
  }
  return out;
}

double
parse_cell(const std::string& cell, std::size_t line, const std::string& column)
{
  if (cell.empty())
    throw ParseError(line, "blank cell in column '" + column + "'");
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+')
    ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw NonNumericCell(line, column, cell);
  return v;
}

std::string
read_text(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void
write_text(const std::filesystem::path& path, const std::string& content)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot write '" + path.string() + "'");
    out << content;
    if (!out)
      throw Error("write to '" + path.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json
read_json(const std::filesystem::path& path)
{
  const auto text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void
write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
  write_text(path, j.dump(2) + "\n");
}

} // namespace vinefx
