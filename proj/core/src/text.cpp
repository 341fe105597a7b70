#include "civicrank/text.hpp"

#include "civicrank/error.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace civicrank {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

// Replace UTF-8 typographic quotes with their ASCII counterparts.
std::string fold_quotes(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
            static_cast<unsigned char>(s[i + 1]) == 0x80) {
            const auto c = static_cast<unsigned char>(s[i + 2]);
            if (c == 0x98 || c == 0x99) {  // ‘ ’
                out.push_back('\'');
                i += 2;
                continue;
            }
            if (c == 0x9C || c == 0x9D) {  // “ ”
                out.push_back('"');
                i += 2;
                continue;
            }
            if (c == 0x93 || c == 0x94) {  // en and em dash
                out.push_back('-');
                i += 2;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

bool is_edge_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char ch : s) {
        if (is_space(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && to_lower_ascii(a) == to_lower_ascii(b);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::vector<std::string> tokenize(std::string_view text) {
    const std::string folded = fold_quotes(text);
    std::vector<std::string> tokens;
    std::string_view rest = folded;
    while (!rest.empty()) {
        std::size_t b = 0;
        while (b < rest.size() && is_space(static_cast<unsigned char>(rest[b]))) ++b;
        std::size_t e = b;
        while (e < rest.size() && !is_space(static_cast<unsigned char>(rest[e]))) ++e;
        std::string_view tok = rest.substr(b, e - b);
        rest.remove_prefix(e);
        while (!tok.empty() && is_edge_punct(static_cast<unsigned char>(tok.front()))) tok.remove_prefix(1);
        while (!tok.empty() && is_edge_punct(static_cast<unsigned char>(tok.back()))) tok.remove_suffix(1);
        if (!tok.empty()) tokens.emplace_back(tok);
    }
    return tokens;
}

std::uint64_t stable_hash64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::string percent_encode(std::string_view s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) != 0 || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out += fmt::format("%{:02X}", c);
        }
    }
    return out;
}

std::string fixture_key(std::string_view s) {
    std::string out;
    for (unsigned char c : s) {
        if (c == ' ') {
            out.push_back('_');
        } else if (std::isalnum(c) != 0 || c == '-' || c == '_' || c == '.') {
            out.push_back(static_cast<char>(c));
        } else {
            out += fmt::format("%{:02X}", c);
        }
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("unreadable_file", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    static std::atomic<std::uint64_t> counter{0};
    tmp += fmt::format(".tmp.{}.{}", ::getpid(), counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("unwritable_file", tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw io_error("unwritable_file", tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace civicrank
