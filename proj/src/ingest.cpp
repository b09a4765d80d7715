#include "seasonal/ingest.hpp"

#include "seasonal/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>

namespace seasonal {
namespace {

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::uint64_t parse_count(std::string_view text, std::string_view what) {
    std::uint64_t value = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || p != text.data() + text.size()) {
        fail(ErrorCode::MalformedLine, "bad " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

} // namespace

ListenRecord parse_record(std::string_view line, LogFormat format) {
    (void)format;
    line = strip_cr(line);
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
        fail(ErrorCode::MalformedLine,
             "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
        if (f.empty()) {
            fail(ErrorCode::EmptyField, "empty field in '" + std::string(line) + "'");
        }
    }
    auto ts = parse_timestamp(fields[1]);
    if (!ts) {
        fail(ErrorCode::BadTimestamp, "bad timestamp '" + std::string(fields[1]) + "'");
    }
    return ListenRecord{std::string(fields[0]), *ts, std::string(fields[2])};
}

bool is_listens_header(std::string_view line) {
    return strip_cr(line) == "user_id\ttimestamp\ttrack_id";
}

std::uint64_t TrackCounts::window_listens() const {
    return std::accumulate(day_counts.begin(), day_counts.end(), std::uint64_t{0});
}

TrackCountTable::TrackCountTable(WindowSpec window) : window_(std::move(window)) {
    window_.validate();
}

const TrackCounts* TrackCountTable::find(const std::string& track_id) const {
    auto it = rows_.find(track_id);
    return it == rows_.end() ? nullptr : &it->second;
}

void TrackCountTable::add_listen(const std::string& track_id, std::optional<int> window_day) {
    auto it = rows_.find(track_id);
    if (it == rows_.end()) {
        it = rows_.emplace(track_id,
                           TrackCounts{0, std::vector<std::uint64_t>(static_cast<std::size_t>(window_.span), 0)})
                 .first;
    }
    ++it->second.total_listens;
    if (window_day) {
        ++it->second.day_counts[static_cast<std::size_t>(*window_day)];
    }
}

void TrackCountTable::add_row(const std::string& track_id, const TrackCounts& counts) {
    if (counts.day_counts.size() != static_cast<std::size_t>(window_.span)) {
        fail(ErrorCode::WindowMismatch, "row '" + track_id + "' has " +
                                            std::to_string(counts.day_counts.size()) +
                                            " day counts, window span is " + std::to_string(window_.span));
    }
    auto [it, inserted] = rows_.try_emplace(track_id, counts);
    if (!inserted) {
        it->second.total_listens += counts.total_listens;
        for (std::size_t j = 0; j < counts.day_counts.size(); ++j) {
            it->second.day_counts[j] += counts.day_counts[j];
        }
    }
}

std::vector<std::string> TrackCountTable::sorted_track_ids() const {
    std::vector<std::string> ids;
    ids.reserve(rows_.size());
    for (const auto& [id, counts] : rows_) {
        ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::string DatasetStats::to_json() const {
    nlohmann::ordered_json j;
    j["record_count"] = record_count;
    j["distinct_users"] = distinct_users;
    j["distinct_tracks"] = distinct_tracks;
    j["date_min"] = date_min ? nlohmann::ordered_json(format_date(*date_min)) : nlohmann::ordered_json(nullptr);
    j["date_max"] = date_max ? nlohmann::ordered_json(format_date(*date_max)) : nlohmann::ordered_json(nullptr);
    j["malformed_lines"] = malformed_lines;
    return j.dump(2) + "\n";
}

Aggregator::Aggregator(const WindowSpec& window, ParseMode mode, bool track_users)
    : table_(window), index_(window), mode_(mode), track_users_(track_users) {}

void Aggregator::add(const ListenRecord& record) {
    const DayNumber day = day_number(record.timestamp.date);
    ++records_;
    table_.add_listen(record.track_id, index_.index_of(day));
    if (track_users_ && !users_.contains(record.user_id)) {
        users_.insert(record.user_id);
    }
    if (!min_day_ || day < *min_day_) {
        min_day_ = day;
    }
    if (!max_day_ || day > *max_day_) {
        max_day_ = day;
    }
}

void Aggregator::add_line(std::string_view line) {
    line = strip_cr(line);
    if (line.empty() || is_listens_header(line)) {
        return;
    }
    ListenRecord record;
    try {
        record = parse_record(line);
    } catch (const Error&) {
        if (mode_ == ParseMode::Strict) {
            throw;
        }
        ++records_;
        ++malformed_;
        return;
    }
    add(record);
}

void Aggregator::add_stream(std::istream& in) {
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        try {
            add_line(line);
        } catch (const Error& ex) {
            throw Error(ex.code(), "line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
}

DatasetStats Aggregator::stats() const {
    DatasetStats s;
    s.record_count = records_;
    s.malformed_lines = malformed_;
    s.distinct_users = users_.size();
    s.distinct_tracks = table_.size();
    if (min_day_) {
        s.date_min = date_from_day_number(*min_day_);
        s.date_max = date_from_day_number(*max_day_);
    }
    return s;
}

AggregateResult aggregate(std::span<const ListenRecord> records, const WindowSpec& window) {
    Aggregator agg(window);
    for (const auto& r : records) {
        agg.add(r);
    }
    DatasetStats stats = agg.stats();
    return AggregateResult{agg.release_table(), stats};
}

TrackCountTable merge(const TrackCountTable& a, const TrackCountTable& b) {
    if (!(a.window() == b.window())) {
        fail(ErrorCode::WindowMismatch,
             "cannot merge tables with windows " + a.window().to_string() + " and " + b.window().to_string());
    }
    TrackCountTable out = a;
    for (const auto& [id, counts] : b.rows()) {
        out.add_row(id, counts);
    }
    return out;
}

TrackCountTable filter_min_listens(const TrackCountTable& table, std::uint64_t min_total) {
    TrackCountTable out(table.window());
    for (const auto& [id, counts] : table.rows()) {
        if (counts.total_listens >= min_total) {
            out.add_row(id, counts);
        }
    }
    return out;
}

void write_snapshot(std::ostream& out, const TrackCountTable& table) {
    out << "# window=" << table.window().to_string() << '\n';
    out << "track_id\ttotal_listens";
    for (int j = 0; j < table.window().span; ++j) {
        out << "\td" << j;
    }
    out << '\n';
    for (const auto& id : table.sorted_track_ids()) {
        const auto& row = table.rows().at(id);
        out << id << '\t' << row.total_listens;
        for (auto c : row.day_counts) {
            out << '\t' << c;
        }
        out << '\n';
    }
}

TrackCountTable read_snapshot(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorCode::MalformedLine, "empty count-table snapshot");
    }
    constexpr std::string_view prefix = "# window=";
    std::string_view first = strip_cr(line);
    if (first.substr(0, prefix.size()) != prefix) {
        fail(ErrorCode::MalformedLine, "snapshot must start with '# window=...'");
    }
    TrackCountTable table(WindowSpec::parse(first.substr(prefix.size())));
    const auto span = static_cast<std::size_t>(table.window().span);
    if (!std::getline(in, line) || strip_cr(line).substr(0, 22) != "track_id\ttotal_listens") {
        fail(ErrorCode::MalformedLine, "snapshot header missing");
    }
    while (std::getline(in, line)) {
        const auto view = strip_cr(line);
        if (view.empty()) {
            continue;
        }
        const auto fields = split_tabs(view);
        if (fields.size() != span + 2 || fields[0].empty()) {
            fail(ErrorCode::MalformedLine, "snapshot row has wrong field count: '" + std::string(view) + "'");
        }
        TrackCounts counts;
        counts.total_listens = parse_count(fields[1], "total_listens");
        counts.day_counts.reserve(span);
        for (std::size_t j = 0; j < span; ++j) {
            counts.day_counts.push_back(parse_count(fields[j + 2], "day count"));
        }
        if (counts.window_listens() > counts.total_listens) {
            fail(ErrorCode::MalformedLine, "snapshot row '" + std::string(fields[0]) +
                                               "' has more window listens than total listens");
        }
        const std::string id(fields[0]);
        if (table.find(id)) {
            fail(ErrorCode::MalformedLine, "duplicate snapshot row '" + id + "'");
        }
        table.add_row(id, counts);
    }
    return table;
}

} // namespace seasonal
