#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsl/core/matrix.hpp"

namespace zsl {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_fields(std::string_view line, char delim = ',');

/// Non-empty lines of a text blob, with trailing '\r' removed.
std::vector<std::string_view> text_lines(std::string_view text);

std::string matrix_to_csv(const Matrix& m);
/// `what` names the source in error messages.
Matrix matrix_from_csv(std::string_view text, const std::string& what);

}  // namespace zsl
