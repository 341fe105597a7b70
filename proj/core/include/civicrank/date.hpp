#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace civicrank {

// Calendar date at day granularity, UTC.
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int year, unsigned month, unsigned day);

    std::chrono::sys_days sys_days() const { return days_; }
    std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }

    Date plus_days(int n) const { return Date(days_ + std::chrono::days{n}); }

    // Inclusive day count from this date to `end`; negative when end < this.
    int days_until(Date end) const { return static_cast<int>((end.days_ - days_).count()); }

    std::string iso() const;       // 2025-07-03
    std::string compact() const;   // 20250703

    auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days days_{};
};

// Accepts ISO 8601 dates and date-times ("2025-07-03", "2025-07-03T22:15:00+10:00",
// "2025-07-03T12:00:00Z") and "D Month YYYY" ("3 July 2025", "03 Jul 2025").
// Date-times with an offset are converted to UTC before truncation to the day.
std::optional<Date> parse_date(std::string_view text);

// ISO 8601 date-time to UTC milliseconds since the epoch. A bare date means
// midnight UTC.
std::optional<std::chrono::sys_time<std::chrono::milliseconds>> parse_timestamp(std::string_view text);

std::string format_timestamp(std::chrono::sys_time<std::chrono::milliseconds> t);

}  // namespace civicrank
