#include "msbp/csv.h"

#include <charconv>
#include <cmath>
#include <fstream>

#include "msbp/errors.h"

namespace msbp {

namespace {

auto trim(std::string_view text) -> std::string_view {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '"'; };
  while (!text.empty() && is_space(text.front())) { text.remove_prefix(1); }
  while (!text.empty() && is_space(text.back())) { text.remove_suffix(1); }
  return text;
}

}  // namespace

auto split_csv_line(std::string_view line) -> std::vector<std::string> {
  auto cells = std::vector<std::string>{};
  for (;;) {
    auto comma = line.find(',');
    cells.emplace_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) { break; }
    line.remove_prefix(comma + 1);
  }
  return cells;
}

auto parse_double(std::string_view text) -> std::optional<double> {
  text = trim(text);
  if (!text.empty() && text.front() == '+') { text.remove_prefix(1); }
  if (text.empty()) { return std::nullopt; }
  auto value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) { return std::nullopt; }
  return value;
}

auto read_numeric_csv(const std::filesystem::path& path) -> Csv_table {
  auto in = std::ifstream{path};
  if (!in) { throw Ingestion_error{"cannot open " + path.string()}; }
  auto table = Csv_table{};
  auto line = std::string{};
  auto line_number = 0;
  auto width = std::size_t{0};
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) { continue; }
    auto cells = split_csv_line(line);
    auto row = std::vector<double>{};
    auto numeric = true;
    for (const auto& cell : cells) {
      auto value = parse_double(cell);
      if (!value) {
        numeric = false;
        break;
      }
      row.push_back(*value);
    }
    if (!numeric) {
      if (table.rows.empty() && table.header.empty()) {
        table.header = cells;
        width = cells.size();
        continue;
      }
      throw Ingestion_error{"non-numeric cell", line_number};
    }
    for (auto v : row) {
      if (!std::isfinite(v)) { throw Ingestion_error{"non-finite value", line_number}; }
    }
    if (width == 0) { width = row.size(); }
    if (row.size() != width) {
      throw Ingestion_error{"expected " + std::to_string(width) + " columns, found " + std::to_string(row.size()),
                            line_number};
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_number);
  }
  return table;
}

auto format_double(double value) -> std::string {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

}  // namespace msbp
