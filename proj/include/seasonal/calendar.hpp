#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace seasonal {

using Date = std::chrono::year_month_day;

/// Day number relative to 1970-01-01, used as a cheap hashable date key.
using DayNumber = std::int32_t;

inline DayNumber day_number(const Date& d) {
    return static_cast<DayNumber>(std::chrono::sys_days(d).time_since_epoch().count());
}

inline Date date_from_day_number(DayNumber n) {
    return Date(std::chrono::sys_days(std::chrono::days(n)));
}

/// Strict `YYYY-MM-DD`; rejects impossible calendar dates.
std::optional<Date> parse_date(std::string_view text);

std::string format_date(const Date& d);

/// A recurring calendar day such as 12-25.
struct MonthDay {
    unsigned month = 12;
    unsigned day = 25;

    friend bool operator==(const MonthDay&, const MonthDay&) = default;
};

/// Parses `MM-DD`. 02-29 is accepted; whether it exists is a per-year question.
std::optional<MonthDay> parse_month_day(std::string_view text);

std::string format_month_day(const MonthDay& md);

/// Calendar date plus optional time of day (seconds since midnight).
struct Timestamp {
    Date date{};
    std::optional<std::int32_t> seconds_of_day;

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

/// ISO-8601 `YYYY-MM-DD` or `YYYY-MM-DDTHH:MM:SS`.
std::optional<Timestamp> parse_timestamp(std::string_view text);

std::string format_timestamp(const Timestamp& ts);

} // namespace seasonal
