#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace civicrank {

// RFC 4180-style CSV: quoted fields may hold commas, quotes ("") and newlines.
std::vector<std::vector<std::string>> read_csv(std::istream& in);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Index of `name` in a header row; throws validation_error("missing_column").
std::size_t column_index(const std::vector<std::string>& header, std::string_view name);

double parse_double(std::string_view text);

// Lines of a word-list file, trimmed and lowercased; blank lines and lines
// starting with '#' are skipped.
std::vector<std::string> read_word_list(const std::filesystem::path& path);

}  // namespace civicrank
