#pragma once

#include "seasonal/calendar.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seasonal {

/// A run of `span` consecutive days centred on `anchor`, instantiated in each
/// of `years`. Counts for day j are pooled across years.
struct WindowSpec {
    MonthDay anchor{12, 25};
    int span = 15;
    std::vector<int> years{2012};

    /// Throws InvalidWindow unless span is odd, positive, at most 365, and
    /// years is non-empty and strictly increasing.
    void validate() const;

    int half_width() const { return (span - 1) / 2; }

    /// `<MM-DD>,<span>,<y1;y2;...>` as written in count-table snapshots.
    std::string to_string() const;
    static WindowSpec parse(std::string_view text);

    friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

/// The span dates of the window in `year`, oldest first. Throws InvalidAnchor
/// when the anchor does not exist in that year (02-29 outside leap years).
std::vector<Date> window_days(const WindowSpec& spec, int year);

/// Maps a date to its window day index in O(years).
class WindowIndex {
public:
    explicit WindowIndex(const WindowSpec& spec);

    std::optional<int> index_of(DayNumber day) const {
        for (DayNumber start : starts_) {
            const DayNumber offset = day - start;
            if (offset >= 0 && offset < span_) {
                return offset;
            }
        }
        return std::nullopt;
    }

    int span() const { return span_; }

private:
    std::vector<DayNumber> starts_;
    int span_;
};

} // namespace seasonal
