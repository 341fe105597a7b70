#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace civicrank {

std::string trim(std::string_view s);

// Trim and collapse every internal whitespace run to one space.
std::string collapse_whitespace(std::string_view s);

std::string to_lower_ascii(std::string_view s);

bool iequals(std::string_view a, std::string_view b);

std::vector<std::string> split(std::string_view s, char sep);

// Headline tokenizer: split on whitespace, strip punctuation from token
// edges, drop tokens that become empty. Typographic quotes and apostrophes
// are folded to ASCII first so "Won’t" and "Won't" tokenize identically.
std::vector<std::string> tokenize(std::string_view text);

// FNV-1a, 64-bit. Stable across platforms and runs.
std::uint64_t stable_hash64(std::string_view s);

std::string hex64(std::uint64_t v);

// RFC 3986 percent-encoding of everything outside the unreserved set.
std::string percent_encode(std::string_view s);

// File-name-safe key for recorded fixtures: spaces become '_', anything
// outside [A-Za-z0-9_.-] is percent-encoded.
std::string fixture_key(std::string_view s);

std::string read_file(const std::filesystem::path& path);

// Write to a sibling temp file then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace civicrank
