#include "zsl/text_io.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "zsl/error.hpp"

namespace zsl {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw FormatError("cannot format double");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> text_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) out.push_back(line);
    start = pos + 1;
  }
  return out;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(',');
      out += format_double(row[c]);
    }
    out.push_back('\n');
  }
  return out;
}

Matrix matrix_from_csv(std::string_view text, const std::string& what) {
  const auto lines = text_lines(text);
  std::vector<double> data;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (r == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw DataError(what + ": row " + std::to_string(r) + " has " +
                      std::to_string(fields.size()) + " columns, expected " + std::to_string(cols));
    }
    for (auto f : fields) {
      double v = 0.0;
      try {
        v = parse_double(f);
      } catch (const FormatError& e) {
        throw DataError(what + ": row " + std::to_string(r) + ": " + e.what());
      }
      if (!std::isfinite(v)) {
        throw DataError(what + ": row " + std::to_string(r) + " holds a non-finite value");
      }
      data.push_back(v);
    }
  }
  return Matrix(lines.size(), cols, std::move(data));
}

}  // namespace zsl
