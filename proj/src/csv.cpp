#include "hems/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hems/error.hpp"

namespace hems::csv {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& field, int line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw ParseError("not a number: '" + field + "'", line);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite value: '" + field + "'", line);
  return value;
}

bool all_numeric(const std::vector<std::string>& fields) {
  for (const auto& f : fields) {
    try {
      to_double(f, 0);
    } catch (const ParseError&) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

NumericTable parse_numeric(const std::string& text, std::size_t min_cols, std::size_t max_cols) {
  NumericTable table;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
      line.erase(0, 3);
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    auto fields = split_fields(t);
    // A first line made of numbers is data; the header is optional.
    if (!have_header) {
      have_header = true;
      if (!all_numeric(fields)) {
        table.header = std::move(fields);
        continue;
      }
    }
    if (fields.size() < min_cols || fields.size() > max_cols) {
      throw ParseError("expected " + std::to_string(min_cols) +
                           (max_cols != min_cols ? "-" + std::to_string(max_cols) : std::string{}) +
                           " columns, got " + std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(to_double(f, line_no));
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  return table;
}

NumericTable read_numeric(const std::filesystem::path& path, std::size_t min_cols, std::size_t max_cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_numeric(buf.str(), min_cols, max_cols);
}

}  // namespace hems::csv
