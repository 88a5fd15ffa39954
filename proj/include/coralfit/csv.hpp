#pragma once

// Small helpers for comma-delimited text.

#include <charconv>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coralfit {

/// Splits one line, honouring double-quoted fields with "" escapes. Returns
/// nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(std::string_view s);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double x);

/// Strict full-string parse of a finite double.
std::optional<double> parse_number(std::string_view s);

std::string trim(std::string_view s);

/// "YYYY-MM-DD" to decimal years (days since 1970-01-01 / 365.25 + 1970).
std::optional<double> iso_date_to_years(std::string_view date);
/// Inverse to the nearest day.
std::string years_to_iso_date(double years);

}  // namespace coralfit
