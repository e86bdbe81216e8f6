#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kiae::csv {

/// Splits one line on commas. Double-quoted fields may contain commas and use
/// "" for a literal quote. A trailing '\r' is dropped.
std::vector<std::string> split_line(std::string_view line);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

/// Whole-cell parse (surrounding blanks allowed); nullopt if anything is left over.
std::optional<double> parse_double(std::string_view text);

/// Reads all lines of a file. Throws IoError when it cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace kiae::csv
