#pragma once

#include "seasonal/calendar.hpp"
#include "seasonal/ingest.hpp"
#include "seasonal/labeling.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace seasonal {

struct SynthConfig {
    int n_tracks = 10000;
    int n_users = 5000;
    double seasonal_fraction = 0.02;
    Date date_start = Date{std::chrono::year(2012), std::chrono::month(10), std::chrono::day(1)};
    Date date_end = Date{std::chrono::year(2013), std::chrono::month(2), std::chrono::day(28)};
    MonthDay anchor{12, 25};
    int window_span = 15;          ///< only used to check the range covers a window
    double popularity_alpha = 1.5; ///< power-law exponent of the base-rate draw
    int popularity_min = 1;        ///< smallest integer popularity (power-law k_min)
    std::uint64_t popularity_max = 1000; ///< truncation point; 0 leaves the tail uncapped
    double base_rate_scale = 0.145; ///< listens/day per unit of the power-law draw
    double peak_multiplier_lo = 5.0;
    double peak_multiplier_hi = 10.0;
    double peak_width_days = 2.0;
    double keyword_recall = 0.9;
    std::string keyword = "Christmas";
    std::uint64_t seed = 0;

    void validate() const;
};

struct LatentTrackProfile {
    std::string track_id;
    bool is_seasonal = false;
    std::uint64_t popularity = 1; ///< the integer power-law draw
    double base_daily_rate = 0.0;
    double peak_multiplier = 1.0;
    std::string track_name;
    std::string album_name;
};

std::vector<LatentTrackProfile> gen_profiles(const SynthConfig& cfg);

/// Daily intensity multiplier 1 + (m - 1) g(day), g a unit-peak bell centred
/// on the nearest anchor occurrence.
double seasonal_lift(const LatentTrackProfile& profile, const SynthConfig& cfg, DayNumber day);

/// Streams records ordered by (date, track index, sequence) without
/// materialising the corpus. Each (track, day) draws from its own RNG stream.
class ListenGenerator {
public:
    ListenGenerator(std::span<const LatentTrackProfile> profiles, const SynthConfig& cfg);

    /// Calls `sink` for every record, in order.
    void for_each(const std::function<void(const ListenRecord&)>& sink) const;

    /// Poisson count for one (track, day), identical to what for_each emits.
    std::uint64_t daily_count(std::size_t track_index, DayNumber day) const;

private:
    std::span<const LatentTrackProfile> profiles_;
    SynthConfig cfg_;
    std::vector<std::string> user_ids_;
};

std::vector<TrackMetadata> profiles_metadata(std::span<const LatentTrackProfile> profiles);

/// Latent truth as a LabelSet (positives = seasonal tracks).
LabelSet latent_truth(std::span<const LatentTrackProfile> profiles);

/// `track_id\tis_seasonal\tbase_rate\tpeak_multiplier`
void write_latent_truth(std::ostream& out, std::span<const LatentTrackProfile> profiles);
LabelSet read_latent_truth(std::istream& in);

} // namespace seasonal
