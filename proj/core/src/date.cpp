#include "civicrank/date.hpp"

#include "civicrank/text.hpp"

#include <fmt/format.h>

#include <array>
#include <cctype>

namespace civicrank {

namespace chr = std::chrono;

namespace {

constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

// Reads exactly `width` digits at `pos`.
std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t width) {
    if (pos + width > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + width; ++i) {
        if (std::isdigit(static_cast<unsigned char>(s[i])) == 0) return std::nullopt;
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

std::optional<chr::year_month_day> make_ymd(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                            chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

struct IsoParts {
    chr::sys_days day;
    chr::milliseconds time_of_day{0};
    chr::minutes offset{0};
};

std::optional<IsoParts> parse_iso(std::string_view s) {
    const auto y = digits(s, 0, 4);
    if (!y || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    const auto m = digits(s, 5, 2);
    const auto d = digits(s, 8, 2);
    if (!m || !d) return std::nullopt;
    const auto ymd = make_ymd(*y, *m, *d);
    if (!ymd) return std::nullopt;
    IsoParts parts{chr::sys_days{*ymd}};
    if (s.size() == 10) return parts;
    if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return std::nullopt;

    const auto hh = digits(s, 11, 2);
    if (!hh || s.size() < 16 || s[13] != ':') return std::nullopt;
    const auto mm = digits(s, 14, 2);
    if (!mm || *hh > 23 || *mm > 59) return std::nullopt;
    std::size_t pos = 16;
    int ss = 0;
    int ms = 0;
    if (pos < s.size() && s[pos] == ':') {
        const auto sec = digits(s, pos + 1, 2);
        if (!sec || *sec > 60) return std::nullopt;
        ss = *sec;
        pos += 3;
        if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
            ++pos;
            int scale = 100;
            const std::size_t start = pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])) != 0) {
                ms += (s[pos] - '0') * scale;
                scale /= 10;
                ++pos;
            }
            if (pos == start) return std::nullopt;
        }
    }
    parts.time_of_day = chr::hours{*hh} + chr::minutes{*mm} + chr::seconds{ss} + chr::milliseconds{ms};

    if (pos == s.size()) return parts;  // no zone designator: treated as UTC
    if (s[pos] == 'Z' || s[pos] == 'z') {
        return pos + 1 == s.size() ? std::optional<IsoParts>(parts) : std::nullopt;
    }
    if (s[pos] != '+' && s[pos] != '-') return std::nullopt;
    const int sign = s[pos] == '-' ? -1 : 1;
    const auto oh = digits(s, pos + 1, 2);
    if (!oh) return std::nullopt;
    std::size_t after = pos + 3;
    int om = 0;
    if (after < s.size()) {
        if (s[after] == ':') ++after;
        const auto o = digits(s, after, 2);
        if (!o) return std::nullopt;
        om = *o;
        after += 2;
    }
    if (after != s.size() || *oh > 23 || om > 59) return std::nullopt;
    parts.offset = sign * (chr::hours{*oh} + chr::minutes{om});
    return parts;
}

std::optional<Date> parse_day_month_year(std::string_view s) {
    const auto parts = split(collapse_whitespace(s), ' ');
    if (parts.size() != 3) return std::nullopt;
    const std::string& dtxt = parts[0];
    if (dtxt.empty() || dtxt.size() > 2) return std::nullopt;
    const auto d = digits(dtxt, 0, dtxt.size());
    const std::string mon = to_lower_ascii(parts[1]);
    int month = 0;
    for (std::size_t i = 0; i < kMonths.size(); ++i) {
        if (mon == kMonths[i] || (mon.size() == 3 && kMonths[i].substr(0, 3) == mon) ||
            (mon == "sept" && i == 8)) {
            month = static_cast<int>(i) + 1;
            break;
        }
    }
    const auto y = parts[2].size() == 4 ? digits(parts[2], 0, 4) : std::nullopt;
    if (!d || month == 0 || !y) return std::nullopt;
    const auto ymd = make_ymd(*y, month, *d);
    if (!ymd) return std::nullopt;
    return Date(chr::sys_days{*ymd});
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day)
    : days_(chr::year_month_day{chr::year{year}, chr::month{month}, chr::day{day}}) {}

std::string Date::iso() const {
    const auto d = ymd();
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                       static_cast<unsigned>(d.day()));
}

std::string Date::compact() const {
    const auto d = ymd();
    return fmt::format("{:04d}{:02d}{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                       static_cast<unsigned>(d.day()));
}

std::optional<Date> parse_date(std::string_view text) {
    const std::string s = trim(text);
    if (s.empty()) return std::nullopt;
    if (auto iso = parse_iso(s)) {
        const auto utc = chr::sys_time<chr::milliseconds>{iso->day} + iso->time_of_day - iso->offset;
        return Date(chr::floor<chr::days>(utc));
    }
    return parse_day_month_year(s);
}

std::optional<chr::sys_time<chr::milliseconds>> parse_timestamp(std::string_view text) {
    const auto iso = parse_iso(trim(text));
    if (!iso) return std::nullopt;
    return chr::sys_time<chr::milliseconds>{iso->day} + iso->time_of_day - iso->offset;
}

std::string format_timestamp(chr::sys_time<chr::milliseconds> t) {
    const auto day = chr::floor<chr::days>(t);
    const chr::hh_mm_ss<chr::milliseconds> tod{t - day};
    const Date d{day};
    const auto ms = tod.subseconds().count();
    if (ms == 0) {
        return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", d.iso(), tod.hours().count(), tod.minutes().count(),
                           tod.seconds().count());
    }
    return fmt::format("{}T{:02d}:{:02d}:{:02d}.{:03d}Z", d.iso(), tod.hours().count(), tod.minutes().count(),
                       tod.seconds().count(), ms);
}

}  // namespace civicrank
