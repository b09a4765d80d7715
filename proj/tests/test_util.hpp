#pragma once

#include "seasonal/calendar.hpp"
#include "seasonal/ingest.hpp"
#include "seasonal/window.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

inline seasonal::Date ymd(int y, unsigned m, unsigned d) {
    return seasonal::Date{std::chrono::year(y), std::chrono::month(m), std::chrono::day(d)};
}

inline seasonal::ListenRecord rec(std::string user, seasonal::Date date, std::string track) {
    return seasonal::ListenRecord{std::move(user), seasonal::Timestamp{date, std::nullopt}, std::move(track)};
}

/// Records spread over 2012-11-01 .. 2013-01-31 so roughly a sixth land in the
/// default window.
inline std::vector<seasonal::ListenRecord> random_records(std::size_t n, int tracks, std::uint64_t seed,
                                                          int users = 100) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> track(0, tracks - 1);
    std::uniform_int_distribution<int> user(0, users - 1);
    std::uniform_int_distribution<int> day(0, 91);
    const auto start = seasonal::day_number(ymd(2012, 11, 1));
    std::vector<seasonal::ListenRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(rec("u" + std::to_string(user(rng)), seasonal::date_from_day_number(start + day(rng)),
                          "t" + std::to_string(track(rng))));
    }
    return out;
}

/// Brute-force tally keyed by (track, date), independent of the window index.
struct Tally {
    std::map<std::string, std::uint64_t> totals;
    std::map<std::pair<std::string, seasonal::DayNumber>, std::uint64_t> by_day;
};

inline Tally tally(const std::vector<seasonal::ListenRecord>& records) {
    Tally t;
    for (const auto& r : records) {
        ++t.totals[r.track_id];
        ++t.by_day[{r.track_id, seasonal::day_number(r.timestamp.date)}];
    }
    return t;
}

/// Fresh empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("seasonal_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace testutil
