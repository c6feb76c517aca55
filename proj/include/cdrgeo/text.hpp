#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdrgeo {

/// Splits on commas. Quoted fields are not supported by any input format.
void split_fields(std::string_view line, std::vector<std::string_view>& out);

std::optional<double> parse_double(std::string_view text);

/// Shortest representation that round-trips.
std::string format_double(double value);
/// Fixed decimals, for human-facing report columns.
std::string format_fixed(double value, int decimals);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

std::string_view trim(std::string_view s);

}  // namespace cdrgeo
