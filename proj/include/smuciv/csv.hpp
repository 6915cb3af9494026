#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace smuciv {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);
// Full-string parse; throws IoError naming `where` on failure.
double parse_double(std::string_view text, const std::string& where);

// Splits one line on ',' and trims surrounding whitespace and a trailing '\r'.
// Quoted fields are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

// Reads all lines of a text file; throws IoError if it cannot be opened.
std::vector<std::string> read_lines(const std::string& path);
// Writes text with LF endings; throws IoError on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace smuciv
