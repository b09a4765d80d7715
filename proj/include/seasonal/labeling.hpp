#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace seasonal {

struct TrackMetadata {
    std::string track_id;
    std::string track_name;
    std::string album_name;
};

/// NFC-normalised, fully case-folded copy of `s`. Whitespace is untouched.
std::string normalize_text(std::string_view s);

/// Case-insensitive substring match of `keyword` in the track or album name.
bool label_track(const TrackMetadata& meta, std::string_view keyword);

struct LabelSet {
    std::unordered_set<std::string> positives;
    std::unordered_set<std::string> universe;
    std::string keyword;
    std::uint64_t duplicate_ids = 0;

    bool contains(const std::string& id) const { return universe.contains(id); }
    bool is_positive(const std::string& id) const { return positives.contains(id); }
};

/// Labels every track; a repeated track id replaces the earlier row and is counted.
LabelSet build_ground_truth(std::span<const TrackMetadata> metadata, std::string_view keyword);

/// Metadata TSV `track_id\ttrack_name\talbum_name`, optional header. A missing
/// album column is read as empty.
std::vector<TrackMetadata> read_metadata(std::istream& in);
void write_metadata(std::ostream& out, std::span<const TrackMetadata> metadata);

/// Label TSV `track_id\tlabel`, sorted by track id, preceded by a `# keyword=` line.
void write_labels(std::ostream& out, const LabelSet& labels);
LabelSet read_labels(std::istream& in);

} // namespace seasonal
