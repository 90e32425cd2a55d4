#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace msbp {

struct Csv_table {
  std::vector<std::string> header;        // empty when the file has no header row
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;          // 1-based source line of each row
};

auto split_csv_line(std::string_view line) -> std::vector<std::string>;
auto parse_double(std::string_view text) -> std::optional<double>;

// Reads a numeric CSV.  A first line that is not entirely numeric is taken as the header;
// any later non-numeric or non-finite cell raises Ingestion_error naming its line.  Blank
// lines are skipped.
auto read_numeric_csv(const std::filesystem::path& path) -> Csv_table;

// Shortest round-trip text for a double, so reruns produce byte-identical files.
auto format_double(double value) -> std::string;

}  // namespace msbp
