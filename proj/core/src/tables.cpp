#include "civicrank/tables.hpp"

#include "civicrank/error.hpp"
#include "civicrank/text.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

namespace civicrank {

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_data = false;
    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_has_data = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_has_data = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_has_data || !field.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                row.clear();
                field.clear();
                row_has_data = false;
                break;
            default:
                field.push_back(c);
                row_has_data = true;
        }
    }
    if (in_quotes) throw validation_error("bad_csv", "unterminated quoted field");
    if (row_has_data || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out << ',';
        const auto& f = fields[i];
        if (f.find_first_of(",\"\n\r") == std::string::npos) {
            out << f;
            continue;
        }
        out << '"';
        for (char c : f) {
            if (c == '"') out << '"';
            out << c;
        }
        out << '"';
    }
    out << '\n';
}

std::size_t column_index(const std::vector<std::string>& header, std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw validation_error("missing_column", std::string(name));
}

double parse_double(std::string_view text) {
    const std::string s = trim(text);
    if (s.empty()) throw validation_error("bad_number", "empty");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) throw validation_error("bad_number", s);
    return v;
}

std::vector<std::string> read_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("unreadable_file", path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string w = to_lower_ascii(trim(line));
        if (w.empty() || w.front() == '#') continue;
        words.push_back(std::move(w));
    }
    return words;
}

}  // namespace civicrank
