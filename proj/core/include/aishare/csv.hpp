#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aishare::csv {

/// Splits one CSV line on commas. Fields may be double-quoted; a doubled
/// quote inside a quoted field is an escaped quote. Unquoted fields are
/// trimmed of surrounding whitespace.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field if it contains a comma, quote, or newline.
std::string escape_field(std::string_view field);

std::string join_row(std::span<const std::string> fields);

/// Shortest-faithful formatting helpers; locale-independent.
std::string format_real(double value, int significant_digits = 6);
std::string format_count(std::int64_t value);

/// Line-oriented writer with unix newlines, so output bytes are stable.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  void comment(std::string_view text);
  void row(std::span<const std::string> fields);
  void row(std::initializer_list<std::string> fields);

 private:
  std::ofstream out_;
};

}  // namespace aishare::csv
