#include "seasonal/synthgen.hpp"

#include "seasonal/error.hpp"
#include "seasonal/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace seasonal {
namespace {

constexpr std::array kAdjectives{"Blue",   "Golden", "Electric", "Quiet",  "Broken", "Velvet", "Wild",
                                 "Lonely", "Neon",   "Silver",   "Burning", "Hidden", "Summer", "Midnight",
                                 "Crystal", "Paper", "Northern", "Restless", "Sweet",  "Distant"};
constexpr std::array kNouns{"River",  "Heart",  "Highway", "Dream",  "City",   "Fire",   "Ocean",
                            "Garden", "Mirror", "Shadow",  "Signal", "Road",   "Rain",   "Dancer",
                            "Machine", "Letter", "Harbor", "Echo",   "Parade", "Horizon"};
constexpr std::array kFestive{"Silent Night", "Snowfall",  "Sleigh Ride",   "Winter Wonderland",
                              "Holly Jolly",  "Noel",      "Mistletoe",     "Jingle Bells",
                              "Santa Claus",  "Yuletide",  "Deck the Halls", "Frosty Morning"};

std::string padded(char prefix, std::size_t value, int width) {
    std::string digits = std::to_string(value);
    if (static_cast<int>(digits.size()) < width) {
        digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    }
    return prefix + digits;
}

int id_width(std::size_t count) {
    int digits = 1;
    for (std::size_t v = count; v >= 10; v /= 10) {
        ++digits;
    }
    return std::max(6, digits);
}

template <typename Rng, std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& words) {
    return words[std::min(N - 1, static_cast<std::size_t>(uniform01(rng) * N))];
}

/// Discrete power law P(k) ~ k^-alpha, kmin <= k (<= kmax when capped), via
/// the continuous approximation floor((kmin - 1/2)(1 - u)^(-1/(alpha - 1)) + 1/2).
/// A cap is applied by inverse-CDF truncation, not by clamping.
template <typename Rng>
std::uint64_t draw_popularity(Rng& rng, double alpha, int kmin, std::uint64_t kmax) {
    const double lo = kmin - 0.5;
    const double e = alpha - 1.0;
    double u = uniform01(rng);
    if (kmax > 0) {
        const double tail = std::pow((static_cast<double>(kmax) + 0.5) / lo, -e);
        u *= 1.0 - tail;
    }
    const double k = std::floor(lo * std::pow(1.0 - u, -1.0 / e) + 0.5);
    const double hi = kmax > 0 ? static_cast<double>(kmax) : 1e12;
    return static_cast<std::uint64_t>(std::clamp(k, static_cast<double>(kmin), hi));
}

} // namespace

void SynthConfig::validate() const {
    const auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, "synth config: " + what); };
    if (n_tracks < 1 || n_users < 1) {
        bad("n_tracks and n_users must be positive");
    }
    if (!(seasonal_fraction > 0.0 && seasonal_fraction < 1.0)) {
        bad("seasonal_fraction must lie in (0, 1)");
    }
    if (!date_start.ok() || !date_end.ok() || !(date_start < date_end)) {
        bad("date range must satisfy start < end");
    }
    if (!(popularity_alpha > 1.0) || !(base_rate_scale > 0.0) || popularity_min < 1 ||
        (popularity_max > 0 && popularity_max < static_cast<std::uint64_t>(popularity_min))) {
        bad("need popularity_alpha > 1, base_rate_scale > 0, 1 <= popularity_min <= popularity_max");
    }
    if (!(peak_multiplier_lo >= 1.0) || !(peak_multiplier_hi >= peak_multiplier_lo)) {
        bad("peak multiplier range must satisfy 1 <= lo <= hi");
    }
    if (!(peak_width_days > 0.0) || !(keyword_recall >= 0.0 && keyword_recall <= 1.0) || keyword.empty()) {
        bad("peak_width_days > 0, keyword_recall in [0, 1], non-empty keyword required");
    }
    if (window_span < 1 || window_span % 2 == 0) {
        bad("window_span must be a positive odd number");
    }
    const int half = (window_span - 1) / 2;
    const DayNumber lo = day_number(date_start);
    const DayNumber hi = day_number(date_end);
    bool covered = false;
    for (int y = static_cast<int>(date_start.year()); y <= static_cast<int>(date_end.year()); ++y) {
        const Date a{std::chrono::year(y), std::chrono::month(anchor.month), std::chrono::day(anchor.day)};
        if (a.ok() && day_number(a) - half >= lo && day_number(a) + half <= hi) {
            covered = true;
        }
    }
    if (!covered) {
        bad("date range does not contain a full window around " + format_month_day(anchor));
    }
}

std::vector<LatentTrackProfile> gen_profiles(const SynthConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(cfg.n_tracks);
    std::mt19937_64 rng(derive_seed(cfg.seed, "profiles"));

    const auto n_seasonal = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.seasonal_fraction));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < n_seasonal; ++i) {
        const auto j = i + std::min(n - i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n - i)));
        std::swap(order[i], order[j]);
    }
    std::vector<bool> seasonal(n, false);
    for (std::size_t i = 0; i < n_seasonal; ++i) {
        seasonal[order[i]] = true;
    }

    const std::string needle = normalize_text(cfg.keyword);
    const auto mentions_keyword = [&](const LatentTrackProfile& p) {
        return normalize_text(p.track_name).find(needle) != std::string::npos ||
               normalize_text(p.album_name).find(needle) != std::string::npos;
    };

    const int width = id_width(n);
    std::vector<LatentTrackProfile> profiles(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = profiles[i];
        p.track_id = padded('t', i, width);
        p.is_seasonal = seasonal[i];
        p.popularity = draw_popularity(rng, cfg.popularity_alpha, cfg.popularity_min, cfg.popularity_max);
        p.base_daily_rate = cfg.base_rate_scale * static_cast<double>(p.popularity);
        p.peak_multiplier = 1.0;
        if (p.is_seasonal) {
            p.peak_multiplier = cfg.peak_multiplier_lo +
                                (cfg.peak_multiplier_hi - cfg.peak_multiplier_lo) * uniform01(rng);
        }
        const bool no_album = uniform01(rng) < 0.1;
        if (p.is_seasonal) {
            p.track_name = pick(rng, kFestive);
            p.album_name = no_album ? "" : std::string(pick(rng, kAdjectives)) + " " + pick(rng, kFestive);
            if (uniform01(rng) < cfg.keyword_recall) {
                if (no_album || uniform01(rng) < 0.5) {
                    p.track_name = cfg.keyword + " " + p.track_name;
                } else {
                    p.album_name = "A " + cfg.keyword + " " + p.album_name;
                }
            }
        } else {
            p.track_name = std::string(pick(rng, kAdjectives)) + " " + pick(rng, kNouns);
            p.album_name = no_album ? "" : std::string(pick(rng, kNouns)) + " of " + pick(rng, kAdjectives);
        }
        if (mentions_keyword(p) && !p.is_seasonal) {
            p.track_name = "Track " + std::to_string(i);
            p.album_name.clear();
        }
    }
    return profiles;
}

double seasonal_lift(const LatentTrackProfile& profile, const SynthConfig& cfg, DayNumber day) {
    if (profile.peak_multiplier == 1.0) {
        return 1.0;
    }
    const int year = static_cast<int>(date_from_day_number(day).year());
    double nearest = std::numeric_limits<double>::infinity();
    for (int y = year - 1; y <= year + 1; ++y) {
        const Date a{std::chrono::year(y), std::chrono::month(cfg.anchor.month), std::chrono::day(cfg.anchor.day)};
        if (a.ok()) {
            nearest = std::min(nearest, std::abs(static_cast<double>(day - day_number(a))));
        }
    }
    const double z = nearest / cfg.peak_width_days;
    return 1.0 + (profile.peak_multiplier - 1.0) * std::exp(-0.5 * z * z);
}

ListenGenerator::ListenGenerator(std::span<const LatentTrackProfile> profiles, const SynthConfig& cfg)
    : profiles_(profiles), cfg_(cfg) {
    cfg_.validate();
    const int width = id_width(static_cast<std::size_t>(cfg_.n_users));
    user_ids_.reserve(static_cast<std::size_t>(cfg_.n_users));
    for (int u = 0; u < cfg_.n_users; ++u) {
        user_ids_.push_back(padded('u', static_cast<std::size_t>(u), width));
    }
}

std::uint64_t ListenGenerator::daily_count(std::size_t track_index, DayNumber day) const {
    const auto& p = profiles_[track_index];
    const double rate = p.base_daily_rate * seasonal_lift(p, cfg_, day);
    SplitMix64 rng(derive_seed(cfg_.seed, "listens", (static_cast<std::uint64_t>(track_index) << 32) |
                                                         static_cast<std::uint32_t>(day)));
    std::poisson_distribution<std::uint64_t> poisson(rate);
    return poisson(rng);
}

void ListenGenerator::for_each(const std::function<void(const ListenRecord&)>& sink) const {
    const DayNumber first = day_number(cfg_.date_start);
    const DayNumber last = day_number(cfg_.date_end);
    ListenRecord record;
    std::vector<std::int32_t> seconds;
    std::vector<std::size_t> users;
    for (DayNumber day = first; day <= last; ++day) {
        record.timestamp.date = date_from_day_number(day);
        for (std::size_t t = 0; t < profiles_.size(); ++t) {
            const auto& p = profiles_[t];
            const double rate = p.base_daily_rate * seasonal_lift(p, cfg_, day);
            SplitMix64 rng(derive_seed(cfg_.seed, "listens",
                                       (static_cast<std::uint64_t>(t) << 32) | static_cast<std::uint32_t>(day)));
            std::poisson_distribution<std::uint64_t> poisson(rate);
            const std::uint64_t count = poisson(rng);
            if (count == 0) {
                continue;
            }
            record.track_id = p.track_id;
            seconds.resize(count);
            users.resize(count);
            for (std::uint64_t c = 0; c < count; ++c) {
                users[c] = std::min(user_ids_.size() - 1,
                                    static_cast<std::size_t>(uniform01(rng) * static_cast<double>(user_ids_.size())));
                seconds[c] = std::min(86399, static_cast<std::int32_t>(uniform01(rng) * 86400.0));
            }
            std::sort(seconds.begin(), seconds.end());
            for (std::uint64_t c = 0; c < count; ++c) {
                record.user_id = user_ids_[users[c]];
                record.timestamp.seconds_of_day = seconds[c];
                sink(record);
            }
        }
    }
}

std::vector<TrackMetadata> profiles_metadata(std::span<const LatentTrackProfile> profiles) {
    std::vector<TrackMetadata> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) {
        out.push_back({p.track_id, p.track_name, p.album_name});
    }
    return out;
}

LabelSet latent_truth(std::span<const LatentTrackProfile> profiles) {
    LabelSet out;
    out.keyword = "<latent>";
    for (const auto& p : profiles) {
        out.universe.insert(p.track_id);
        if (p.is_seasonal) {
            out.positives.insert(p.track_id);
        }
    }
    return out;
}

void write_latent_truth(std::ostream& out, std::span<const LatentTrackProfile> profiles) {
    out << "track_id\tis_seasonal\tbase_rate\tpeak_multiplier\n";
    char buf[64];
    for (const auto& p : profiles) {
        out << p.track_id << '\t' << (p.is_seasonal ? 1 : 0);
        std::snprintf(buf, sizeof(buf), "\t%.17g\t%.17g\n", p.base_daily_rate, p.peak_multiplier);
        out << buf;
    }
}

LabelSet read_latent_truth(std::istream& in) {
    LabelSet out;
    out.keyword = "<latent>";
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.starts_with("track_id\t")) {
            continue;
        }
        const auto t1 = line.find('\t');
        if (t1 == std::string::npos || t1 == 0 || t1 + 1 >= line.size()) {
            fail(ErrorCode::MalformedLine, "bad latent-truth row '" + line + "'");
        }
        const std::string id = line.substr(0, t1);
        out.universe.insert(id);
        if (line[t1 + 1] == '1') {
            out.positives.insert(id);
        }
    }
    return out;
}

} // namespace seasonal
