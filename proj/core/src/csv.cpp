#include "aishare/csv.hpp"

#include <cstdio>

#include "aishare/errors.hpp"

namespace aishare::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  std::size_t i = 0;
  // Leading whitespace before an opening quote is tolerated.
  auto at_field_start = [&] { return current.empty() && !quoted; };

  while (i < line.size()) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && at_field_start()) {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
    ++i;
  }
  fields.emplace_back(trim(current));
  return fields;
}

std::string escape_field(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\n") != std::string_view::npos;
  if (!needs_quotes) {
    return std::string(field);
  }
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_row(std::span<const std::string> fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) {
      out.push_back(',');
    }
    out += escape_field(fields[i]);
  }
  return out;
}

std::string format_real(double value, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
  return buf;
}

std::string format_count(std::int64_t value) { return std::to_string(value); }

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
  if (!out_) {
    throw InputError("cannot open for writing: " + path.string());
  }
}

void Writer::comment(std::string_view text) {
  out_ << "# " << text << '\n';
}

void Writer::row(std::span<const std::string> fields) {
  out_ << join_row(fields) << '\n';
}

void Writer::row(std::initializer_list<std::string> fields) {
  row(std::span<const std::string>(fields.begin(), fields.size()));
}

}  // namespace aishare::csv
