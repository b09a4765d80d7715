#include "seasonal/labeling.hpp"

#include "seasonal/error.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace seasonal {
namespace {

const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *n;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

bool ascii_only(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

} // namespace

std::string normalize_text(std::string_view s) {
    // ASCII is already NFC and folds by plain lowering.
    if (ascii_only(s)) {
        std::string out(s);
        for (char& c : out) {
            if (c >= 'A' && c <= 'Z') {
                c = static_cast<char>(c - 'A' + 'a');
            }
        }
        return out;
    }
    const auto& norm = nfc();
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString text = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString folded = norm.normalize(text, status);
    folded.foldCase(U_FOLD_CASE_DEFAULT);
    // Folding can produce decomposed sequences; recompose so the result is a
    // fixed point.
    icu::UnicodeString out = norm.normalize(folded, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("ICU normalization failed");
    }
    std::string utf8;
    out.toUTF8String(utf8);
    return utf8;
}

bool label_track(const TrackMetadata& meta, std::string_view keyword) {
    if (keyword.empty()) {
        fail(ErrorCode::EmptyKeyword, "keyword must not be empty");
    }
    const std::string needle = normalize_text(keyword);
    return normalize_text(meta.track_name).find(needle) != std::string::npos ||
           normalize_text(meta.album_name).find(needle) != std::string::npos;
}

LabelSet build_ground_truth(std::span<const TrackMetadata> metadata, std::string_view keyword) {
    if (keyword.empty()) {
        fail(ErrorCode::EmptyKeyword, "keyword must not be empty");
    }
    const std::string needle = normalize_text(keyword);
    std::unordered_map<std::string, bool> labels;
    LabelSet out;
    out.keyword = std::string(keyword);
    for (const auto& meta : metadata) {
        const bool positive = normalize_text(meta.track_name).find(needle) != std::string::npos ||
                              normalize_text(meta.album_name).find(needle) != std::string::npos;
        auto [it, inserted] = labels.insert_or_assign(meta.track_id, positive);
        if (!inserted) {
            ++out.duplicate_ids;
        }
    }
    for (const auto& [id, positive] : labels) {
        out.universe.insert(id);
        if (positive) {
            out.positives.insert(id);
        }
    }
    return out;
}

std::vector<TrackMetadata> read_metadata(std::istream& in) {
    std::vector<TrackMetadata> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        const auto view = strip_cr(line);
        if (std::exchange(first, false) && view.starts_with("track_id\t")) {
            continue;
        }
        if (view.empty()) {
            continue;
        }
        const auto t1 = view.find('\t');
        if (t1 == std::string_view::npos || t1 == 0) {
            fail(ErrorCode::MalformedLine, "bad metadata row '" + std::string(view) + "'");
        }
        const auto t2 = view.find('\t', t1 + 1);
        TrackMetadata meta;
        meta.track_id = std::string(view.substr(0, t1));
        if (t2 == std::string_view::npos) {
            meta.track_name = std::string(view.substr(t1 + 1));
        } else {
            meta.track_name = std::string(view.substr(t1 + 1, t2 - t1 - 1));
            meta.album_name = std::string(view.substr(t2 + 1));
            if (meta.album_name.find('\t') != std::string::npos) {
                fail(ErrorCode::MalformedLine, "bad metadata row '" + std::string(view) + "'");
            }
        }
        rows.push_back(std::move(meta));
    }
    return rows;
}

void write_metadata(std::ostream& out, std::span<const TrackMetadata> metadata) {
    out << "track_id\ttrack_name\talbum_name\n";
    for (const auto& m : metadata) {
        out << m.track_id << '\t' << m.track_name << '\t' << m.album_name << '\n';
    }
}

void write_labels(std::ostream& out, const LabelSet& labels) {
    std::vector<std::string> ids(labels.universe.begin(), labels.universe.end());
    std::sort(ids.begin(), ids.end());
    out << "# keyword=" << labels.keyword << '\n';
    out << "track_id\tlabel\n";
    for (const auto& id : ids) {
        out << id << '\t' << (labels.is_positive(id) ? 1 : 0) << '\n';
    }
}

LabelSet read_labels(std::istream& in) {
    LabelSet out;
    std::string line;
    while (std::getline(in, line)) {
        const auto view = strip_cr(line);
        if (view.empty() || view == "track_id\tlabel") {
            continue;
        }
        if (view.starts_with("# keyword=")) {
            out.keyword = std::string(view.substr(10));
            continue;
        }
        const auto tab = view.find('\t');
        if (tab == std::string_view::npos || tab == 0 || tab + 2 != view.size() ||
            (view.back() != '0' && view.back() != '1')) {
            fail(ErrorCode::MalformedLine, "bad label row '" + std::string(view) + "'");
        }
        std::string id(view.substr(0, tab));
        if (!out.universe.insert(id).second) {
            ++out.duplicate_ids;
        }
        if (view.back() == '1') {
            out.positives.insert(id);
        } else {
            out.positives.erase(id);
        }
    }
    return out;
}

} // namespace seasonal
