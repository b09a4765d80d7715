#pragma once

#include "seasonal/ingest.hpp"
#include "seasonal/labeling.hpp"
#include "seasonal/window.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace seasonal {

/// Normalised listen rates over the window days; non-negative, sums to one.
using RateVector = std::vector<double>;

/// rates[j] = counts[j] / sum(counts). nullopt when the window holds no listens.
std::optional<RateVector> compute_rates(std::span<const std::uint64_t> day_counts);

struct FeatureRow {
    std::string track_id;
    RateVector rates;
    bool label = false;
};

struct FeatureDataset {
    WindowSpec window;
    std::vector<FeatureRow> rows; ///< sorted by track id
    std::uint64_t excluded_undefined = 0;
    std::uint64_t excluded_unlabeled = 0;

    std::size_t positive_count() const;
};

/// One row per labeled table row with in-window listens. Throws WindowMismatch
/// if `expected_window` is given and differs from the table's.
FeatureDataset build_dataset(const TrackCountTable& table, const LabelSet& labels,
                             const std::optional<WindowSpec>& expected_window = std::nullopt);

/// `track_id\tlabel\tr0..r{w-1}` with 17 significant digits.
void write_features(std::ostream& out, const FeatureDataset& dataset);
FeatureDataset read_features(std::istream& in);

} // namespace seasonal
