#include "seasonal/window.hpp"

#include "seasonal/error.hpp"

#include <charconv>
#include <sstream>

namespace seasonal {

void WindowSpec::validate() const {
    if (span < 1 || span % 2 == 0) {
        fail(ErrorCode::InvalidWindow, "window span must be a positive odd number, got " +
                                           std::to_string(span));
    }
    if (span > 365) {
        fail(ErrorCode::InvalidWindow, "window span must not exceed 365 days");
    }
    if (years.empty()) {
        fail(ErrorCode::InvalidWindow, "window needs at least one year");
    }
    for (std::size_t i = 1; i < years.size(); ++i) {
        if (years[i] <= years[i - 1]) {
            fail(ErrorCode::InvalidWindow, "window years must be strictly increasing");
        }
    }
    const std::chrono::month_day md{std::chrono::month(anchor.month), std::chrono::day(anchor.day)};
    if (!md.ok()) {
        fail(ErrorCode::InvalidAnchor, "invalid anchor " + format_month_day(anchor));
    }
}

std::string WindowSpec::to_string() const {
    std::string out = format_month_day(anchor) + "," + std::to_string(span) + ",";
    for (std::size_t i = 0; i < years.size(); ++i) {
        if (i > 0) {
            out += ';';
        }
        out += std::to_string(years[i]);
    }
    return out;
}

WindowSpec WindowSpec::parse(std::string_view text) {
    const auto bad = [&] { fail(ErrorCode::InvalidWindow, "bad window spec '" + std::string(text) + "'"); };
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
        bad();
    }
    WindowSpec spec;
    auto anchor = parse_month_day(text.substr(0, c1));
    if (!anchor) {
        bad();
    }
    spec.anchor = *anchor;
    const auto span_text = text.substr(c1 + 1, c2 - c1 - 1);
    auto [p, ec] = std::from_chars(span_text.data(), span_text.data() + span_text.size(), spec.span);
    if (ec != std::errc() || p != span_text.data() + span_text.size()) {
        bad();
    }
    spec.years.clear();
    std::string_view rest = text.substr(c2 + 1);
    while (!rest.empty()) {
        const auto semi = rest.find(';');
        const auto item = rest.substr(0, semi);
        int y = 0;
        auto [q, ec2] = std::from_chars(item.data(), item.data() + item.size(), y);
        if (ec2 != std::errc() || q != item.data() + item.size()) {
            bad();
        }
        spec.years.push_back(y);
        rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    }
    spec.validate();
    return spec;
}

std::vector<Date> window_days(const WindowSpec& spec, int year) {
    spec.validate();
    const Date anchor{std::chrono::year(year), std::chrono::month(spec.anchor.month),
                      std::chrono::day(spec.anchor.day)};
    if (!anchor.ok()) {
        fail(ErrorCode::InvalidAnchor,
             format_month_day(spec.anchor) + " does not exist in " + std::to_string(year));
    }
    const DayNumber first = day_number(anchor) - spec.half_width();
    std::vector<Date> days;
    days.reserve(static_cast<std::size_t>(spec.span));
    for (int j = 0; j < spec.span; ++j) {
        days.push_back(date_from_day_number(first + j));
    }
    return days;
}

WindowIndex::WindowIndex(const WindowSpec& spec) : span_(spec.span) {
    for (int year : spec.years) {
        starts_.push_back(day_number(window_days(spec, year).front()));
    }
}

} // namespace seasonal
