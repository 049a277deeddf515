#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hems::csv {

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row
};

/// Parses a CSV of numbers with an optional header line. Accepts LF or CRLF and a UTF-8 BOM.
/// Every data row must carry between `min_cols` and `max_cols` fields.
/// Throws ParseError naming the offending line.
NumericTable read_numeric(const std::filesystem::path& path, std::size_t min_cols, std::size_t max_cols);

NumericTable parse_numeric(const std::string& text, std::size_t min_cols, std::size_t max_cols);

/// Splits on commas and trims surrounding blanks.
std::vector<std::string> split_fields(const std::string& line);

}  // namespace hems::csv
