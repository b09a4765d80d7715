#include "seasonal/calendar.hpp"

#include <charconv>
#include <cstdio>

namespace seasonal {
namespace {

bool parse_digits(std::string_view text, int& out) {
    if (text.empty()) {
        return false;
    }
    for (char c : text) {
        if (c < '0' || c > '9') {
            return false;
        }
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

} // namespace

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    int m = 0;
    int d = 0;
    if (!parse_digits(text.substr(0, 4), y) || !parse_digits(text.substr(5, 2), m) ||
        !parse_digits(text.substr(8, 2), d)) {
        return std::nullopt;
    }
    const Date date{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
                    std::chrono::day(static_cast<unsigned>(d))};
    if (!date.ok()) {
        return std::nullopt;
    }
    return date;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

std::optional<MonthDay> parse_month_day(std::string_view text) {
    if (text.size() != 5 || text[2] != '-') {
        return std::nullopt;
    }
    int m = 0;
    int d = 0;
    if (!parse_digits(text.substr(0, 2), m) || !parse_digits(text.substr(3, 2), d)) {
        return std::nullopt;
    }
    const std::chrono::month_day md{std::chrono::month(static_cast<unsigned>(m)),
                                    std::chrono::day(static_cast<unsigned>(d))};
    if (!md.ok()) {
        return std::nullopt;
    }
    return MonthDay{static_cast<unsigned>(m), static_cast<unsigned>(d)};
}

std::string format_month_day(const MonthDay& md) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02u-%02u", md.month, md.day);
    return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    if (text.size() == 10) {
        auto date = parse_date(text);
        if (!date) {
            return std::nullopt;
        }
        return Timestamp{*date, std::nullopt};
    }
    if (text.size() != 19 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
        text[16] != ':') {
        return std::nullopt;
    }
    auto date = parse_date(text.substr(0, 10));
    int hh = 0;
    int mm = 0;
    int ss = 0;
    if (!date || !parse_digits(text.substr(11, 2), hh) || !parse_digits(text.substr(14, 2), mm) ||
        !parse_digits(text.substr(17, 2), ss)) {
        return std::nullopt;
    }
    if (hh > 23 || mm > 59 || ss > 59) {
        return std::nullopt;
    }
    return Timestamp{*date, hh * 3600 + mm * 60 + ss};
}

std::string format_timestamp(const Timestamp& ts) {
    std::string out = format_date(ts.date);
    if (ts.seconds_of_day) {
        const int s = *ts.seconds_of_day;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "T%02d:%02d:%02d", s / 3600, (s / 60) % 60, s % 60);
        out += buf;
    }
    return out;
}

} // namespace seasonal
