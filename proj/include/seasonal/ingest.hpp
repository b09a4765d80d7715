#pragma once

#include "seasonal/calendar.hpp"
#include "seasonal/window.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace seasonal {

/// One listen of one track by one user.
struct ListenRecord {
    std::string user_id;
    Timestamp timestamp;
    std::string track_id;

    friend bool operator==(const ListenRecord&, const ListenRecord&) = default;
};

enum class LogFormat {
    Tsv, ///< user_id \t timestamp \t track_id
};

/// Throws Error with MalformedLine, BadTimestamp or EmptyField.
ListenRecord parse_record(std::string_view line, LogFormat format = LogFormat::Tsv);

/// True for the optional `user_id\ttimestamp\ttrack_id` header.
bool is_listens_header(std::string_view line);

struct TrackCounts {
    std::uint64_t total_listens = 0;
    std::vector<std::uint64_t> day_counts;

    std::uint64_t window_listens() const;

    friend bool operator==(const TrackCounts&, const TrackCounts&) = default;
};

/// Per-track totals over the whole input and per-day counts inside the window.
/// Memory is proportional to the number of distinct tracks.
class TrackCountTable {
public:
    using Rows = std::unordered_map<std::string, TrackCounts>;

    explicit TrackCountTable(WindowSpec window);

    const WindowSpec& window() const { return window_; }
    const Rows& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }

    const TrackCounts* find(const std::string& track_id) const;

    /// Counts one listen. `window_day` is the index inside the window, if any.
    void add_listen(const std::string& track_id, std::optional<int> window_day);

    /// Adds a whole row, summing with an existing one.
    void add_row(const std::string& track_id, const TrackCounts& counts);

    std::vector<std::string> sorted_track_ids() const;

    friend bool operator==(const TrackCountTable&, const TrackCountTable&) = default;

private:
    WindowSpec window_;
    Rows rows_;
};

struct DatasetStats {
    std::uint64_t record_count = 0;
    std::uint64_t distinct_users = 0;
    std::uint64_t distinct_tracks = 0;
    std::optional<Date> date_min;
    std::optional<Date> date_max;
    std::uint64_t malformed_lines = 0;

    /// Flat JSON object.
    std::string to_json() const;
};

enum class ParseMode {
    SkipMalformed, ///< count and continue
    Strict,        ///< rethrow the first parse error
};

/// Streaming aggregator. Feed records or raw lines; state stays bounded by the
/// number of distinct tracks (plus distinct users, for the stats).
class Aggregator {
public:
    explicit Aggregator(const WindowSpec& window, ParseMode mode = ParseMode::SkipMalformed,
                        bool track_users = true);

    void add(const ListenRecord& record);

    /// Parses and adds one line. Blank lines and the header are ignored.
    void add_line(std::string_view line);

    /// Reads every line of `in`.
    void add_stream(std::istream& in);

    const TrackCountTable& table() const { return table_; }
    DatasetStats stats() const;

    /// Moves the table out; the aggregator must not be used afterwards.
    TrackCountTable release_table() { return std::move(table_); }

private:
    TrackCountTable table_;
    WindowIndex index_;
    ParseMode mode_;
    bool track_users_;
    std::unordered_set<std::string> users_;
    std::uint64_t records_ = 0;
    std::uint64_t malformed_ = 0;
    std::optional<DayNumber> min_day_;
    std::optional<DayNumber> max_day_;
};

struct AggregateResult {
    TrackCountTable table;
    DatasetStats stats;
};

AggregateResult aggregate(std::span<const ListenRecord> records, const WindowSpec& window);

/// Row-wise sum. Throws WindowMismatch when the windows differ.
TrackCountTable merge(const TrackCountTable& a, const TrackCountTable& b);

/// Keeps rows with total_listens >= min_total.
TrackCountTable filter_min_listens(const TrackCountTable& table, std::uint64_t min_total);

/// Snapshot TSV: `# window=...` comment, header, rows sorted by track id.
void write_snapshot(std::ostream& out, const TrackCountTable& table);
TrackCountTable read_snapshot(std::istream& in);

} // namespace seasonal
