// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails.

#include "seasonal/eval.hpp"
#include "seasonal/features.hpp"
#include "seasonal/gmm.hpp"
#include "seasonal/ingest.hpp"
#include "seasonal/labeling.hpp"
#include "seasonal/pipeline.hpp"
#include "seasonal/random.hpp"
#include "seasonal/synthgen.hpp"
#include "test_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <new>
#include <random>
#include <set>
#include <sstream>

using namespace seasonal;
namespace fs = std::filesystem;

// Live-heap accounting for the memory criterion. Every allocation carries a
// 16-byte header holding its size.
namespace {
std::atomic<std::int64_t> g_live{0};
std::atomic<std::int64_t> g_peak{0};

void* counted_alloc(std::size_t n) {
    void* p = std::malloc(n + 16);
    if (p == nullptr) {
        throw std::bad_alloc();
    }
    *static_cast<std::size_t*>(p) = n;
    const auto live = g_live.fetch_add(static_cast<std::int64_t>(n)) + static_cast<std::int64_t>(n);
    auto peak = g_peak.load();
    while (live > peak && !g_peak.compare_exchange_weak(peak, live)) {
    }
    return static_cast<char*>(p) + 16;
}

void counted_free(void* p) noexcept {
    if (p == nullptr) {
        return;
    }
    char* base = static_cast<char*>(p) - 16;
    g_live.fetch_sub(static_cast<std::int64_t>(*reinterpret_cast<std::size_t*>(base)));
    std::free(base);
}
} // namespace

void* operator new(std::size_t n) { return counted_alloc(n); }
void* operator new[](std::size_t n) { return counted_alloc(n); }
void operator delete(void* p) noexcept { counted_free(p); }
void operator delete[](void* p) noexcept { counted_free(p); }
void operator delete(void* p, std::size_t) noexcept { counted_free(p); }
void operator delete[](void* p, std::size_t) noexcept { counted_free(p); }

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, x);
    return buf;
}

int cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (code != 0) {
        std::cerr << "seasonal " << args.front() << " failed (" << code << "): " << err.str();
    }
    return code;
}

// 1. Rate vectors.
Outcome rates_property() {
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<std::uint64_t> count(0, 5000), scale(1, 1000000);
    std::bernoulli_distribution zero_day(0.4), zero_vec(0.05);
    int defined = 0, undefined = 0;
    double worst_sum = 0, worst_scale = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::uint64_t> c(15, 0);
        if (!zero_vec(rng)) {
            for (auto& x : c) {
                x = zero_day(rng) ? 0 : count(rng);
            }
        }
        const bool all_zero = std::all_of(c.begin(), c.end(), [](auto x) { return x == 0; });
        const auto r = compute_rates(c);
        if (all_zero) {
            if (r) {
                return {false, "zero vector produced a rate vector"};
            }
            ++undefined;
            continue;
        }
        if (!r) {
            return {false, "nonzero vector was undefined"};
        }
        ++defined;
        double sum = 0;
        for (double x : *r) {
            sum += x;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        const auto m = scale(rng);
        auto scaled = c;
        for (auto& x : scaled) {
            x *= m;
        }
        const auto rs = compute_rates(scaled);
        for (std::size_t j = 0; j < 15; ++j) {
            worst_scale = std::max(worst_scale, std::abs((*rs)[j] - (*r)[j]));
        }
    }
    const bool ok = worst_sum <= 1e-12 && worst_scale <= 1e-12 && undefined > 0;
    return {ok, std::to_string(defined) + " defined, " + std::to_string(undefined) + " undefined, max |sum-1| " +
                    fmt("%.2e", worst_sum) + ", max scale drift " + fmt("%.2e", worst_scale)};
}

// 2. Aggregation against a brute-force tally and shard-and-merge.
Outcome aggregation_oracle() {
    const WindowSpec window;
    const auto records = testutil::random_records(100000, 500, 2002, 300);
    const auto table = aggregate(records, window).table;
    const auto oracle = testutil::tally(records);
    const auto first = day_number(testutil::ymd(2012, 12, 25)) - 7;
    if (table.size() != oracle.totals.size()) {
        return {false, "row count differs from tally"};
    }
    for (const auto& [id, total] : oracle.totals) {
        const auto* row = table.find(id);
        if (row == nullptr || row->total_listens != total) {
            return {false, "total mismatch for " + id};
        }
        for (int j = 0; j < 15; ++j) {
            const auto it = oracle.by_day.find({id, first + j});
            const std::uint64_t want = it == oracle.by_day.end() ? 0 : it->second;
            if (row->day_counts[static_cast<std::size_t>(j)] != want) {
                return {false, "day count mismatch for " + id};
            }
        }
    }
    std::mt19937_64 rng(7);
    for (int p : {1, 2, 4, 8}) {
        std::vector<std::vector<ListenRecord>> shards(static_cast<std::size_t>(p));
        std::uniform_int_distribution<int> pick(0, p - 1);
        for (const auto& r : records) {
            shards[static_cast<std::size_t>(pick(rng))].push_back(r);
        }
        TrackCountTable merged(window);
        for (const auto& s : shards) {
            merged = merge(merged, aggregate(s, window).table);
        }
        if (!(merged == table)) {
            return {false, "shard-and-merge differs at p=" + std::to_string(p)};
        }
    }
    return {true, std::to_string(table.size()) + " tracks match the tally; p in {1,2,4,8} bit-identical"};
}

std::vector<std::vector<double>> simplex_points(std::mt19937_64& rng, int n, int d) {
    std::gamma_distribution<double> noise(0.7, 1.0);
    std::uniform_int_distribution<int> mode(0, 2);
    std::vector<std::vector<double>> out;
    for (int i = 0; i < n; ++i) {
        std::vector<double> v(static_cast<std::size_t>(d));
        const int peak = (d / 2 + mode(rng) - 1 + d) % d;
        double s = 0;
        for (int j = 0; j < d; ++j) {
            v[static_cast<std::size_t>(j)] = noise(rng) + (j == peak ? 3.0 : 0.0);
            s += v[static_cast<std::size_t>(j)];
        }
        for (auto& x : v) {
            x /= s;
        }
        out.push_back(std::move(v));
    }
    return out;
}

// 3. EM monotonicity on simplex data at the default ridge.
Outcome em_monotonicity() {
    const std::vector<int> ks{1, 2, 4}, ds{2, 15}, ns{50, 2000};
    int runs = 0, failures = 0;
    double worst_drop = 0;
    for (std::uint64_t seed = 0; runs < 100; ++seed) {
        const int k = ks[seed % 3];
        const int d = ds[(seed / 3) % 2];
        const int n = ns[(seed / 6) % 2];
        std::mt19937_64 rng(3000 + seed);
        const auto data = simplex_points(rng, n, d);
        GmmConfig cfg;
        cfg.components = k;
        cfg.seed = seed;
        cfg.init = seed % 5 == 4 ? InitMethod::RandomPoints : InitMethod::KMeansPlusPlus;
        ++runs;
        try {
            const auto m = fit(data, cfg);
            for (std::size_t i = 1; i < m.loglik_trace.size(); ++i) {
                worst_drop = std::max(worst_drop, m.loglik_trace[i - 1] - m.loglik_trace[i]);
            }
        } catch (const std::exception& ex) {
            ++failures;
            std::cerr << "fit " << seed << " failed: " << ex.what() << '\n';
        }
    }
    const bool ok = failures == 0 && worst_drop <= 1e-9;
    return {ok, std::to_string(runs) + " fits, " + std::to_string(failures) + " factorisation failures, largest drop " +
                    fmt("%.2e", std::max(worst_drop, 0.0))};
}

// 4. Two-component 1-D recovery.
Outcome gmm_recovery() {
    std::mt19937_64 rng(4004);
    std::normal_distribution<double> lo(-5.0, 1.0), hi(5.0, 1.0);
    std::vector<std::vector<double>> data;
    for (int i = 0; i < 500; ++i) {
        data.push_back({lo(rng)});
        data.push_back({hi(rng)});
    }
    GmmConfig cfg;
    cfg.components = 2;
    cfg.seed = 4;
    const auto m = fit(data, cfg);
    if (m.components() != 2) {
        return {false, "fit returned " + std::to_string(m.components()) + " components"};
    }
    const int a = m.means[0](0) < m.means[1](0) ? 0 : 1;
    const double mean_err = std::max(std::abs(m.means[a](0) + 5.0), std::abs(m.means[1 - a](0) - 5.0));
    const double weight_err = std::max(std::abs(m.weights[a] - 0.5), std::abs(m.weights[1 - a] - 0.5));
    return {mean_err <= 0.2 && weight_err <= 0.05,
            "means " + fmt("%.3f", m.means[a](0)) + ", " + fmt("%.3f", m.means[1 - a](0)) + "; weights " +
                fmt("%.3f", m.weights[a]) + ", " + fmt("%.3f", m.weights[1 - a])};
}

// 5. ROC area against the pair statistic; monotone-transform invariance.
Outcome auc_duality() {
    std::mt19937_64 rng(5005);
    std::uniform_int_distribution<int> size(2, 48), level(0, 5);
    std::bernoulli_distribution label(0.45);
    double worst = 0;
    int instances = 0;
    for (int i = 0; i < 200; ++i) {
        std::vector<ScoredLabel> s;
        const int n = size(rng);
        for (int j = 0; j < n; ++j) {
            s.push_back({0.5 * level(rng) - 1.0, label(rng)});
        }
        s.push_back({0.0, true}); // forced tie across classes
        s.push_back({0.0, false});
        double num = 0, pairs = 0;
        for (const auto& p : s) {
            for (const auto& q : s) {
                if (p.label && !q.label) {
                    pairs += 1;
                    num += p.score > q.score ? 1.0 : (p.score == q.score ? 0.5 : 0.0);
                }
            }
        }
        const double oracle = num / pairs;
        const auto roc = roc_curve(s);
        double area = 0;
        for (std::size_t j = 1; j < roc.points.size(); ++j) {
            area += (roc.points[j].fpr - roc.points[j - 1].fpr) * (roc.points[j].tpr + roc.points[j - 1].tpr) / 2.0;
        }
        worst = std::max({worst, std::abs(area - oracle), std::abs(auc_from_scores(s) - oracle)});

        auto t = s;
        for (auto& x : t) {
            x.score = std::exp(3.0 * x.score) + x.score;
        }
        const auto roc_t = roc_curve(t);
        std::set<std::pair<double, double>> a, b;
        for (const auto& p : roc.points) {
            a.insert({p.fpr, p.tpr});
        }
        for (const auto& p : roc_t.points) {
            b.insert({p.fpr, p.tpr});
        }
        if (a != b || roc_t.auc != roc.auc) {
            return {false, "monotone transform changed the ROC at instance " + std::to_string(i)};
        }
        ++instances;
    }
    return {worst <= 1e-12, std::to_string(instances) + " instances, max |area - pair statistic| " + fmt("%.2e", worst)};
}

// Shared synthetic run for criteria 6 to 8.
struct EndToEnd {
    fs::path dir;
    std::uint64_t high = 0;
    nlohmann::json report;
    bool ok = false;
};

std::uint64_t nearest_rank_q75(const TrackCountTable& table) {
    std::vector<std::uint64_t> totals;
    for (const auto& [id, c] : table.rows()) {
        totals.push_back(c.total_listens);
    }
    std::sort(totals.begin(), totals.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.75 * static_cast<double>(totals.size())));
    return totals[rank - 1];
}

std::vector<std::string> pipeline_args(const EndToEnd& e, const std::string& out, int threads) {
    return {"pipeline",    "--listens",    (e.dir / "listens.tsv").string(),
            "--metadata",  (e.dir / "metadata.tsv").string(),
            "--truth",     (e.dir / "truth.tsv").string(),
            "--out",       (e.dir / out).string(),
            "--thresholds", std::to_string(e.high) + ",0",
            "--ridge",     "1e-3",
            "--seed",      "0",
            "--threads",   std::to_string(threads)};
}

const nlohmann::json* entry_at(const nlohmann::json& report, std::uint64_t threshold) {
    for (const auto& e : report.at("entries")) {
        if (e.at("min_listens").get<std::uint64_t>() == threshold) {
            return &e;
        }
    }
    return nullptr;
}

// 6. Popularity-threshold trend against latent truth.
Outcome end_to_end(EndToEnd& e) {
    e.dir = fs::current_path() / "acceptance_run";
    fs::remove_all(e.dir);
    if (cli({"synth", "--seed", "0", "--out", e.dir.string()}) != 0 ||
        cli({"aggregate", "--listens", (e.dir / "listens.tsv").string(), "--out", (e.dir / "agg").string()}) != 0) {
        return {false, "corpus generation failed"};
    }
    std::istringstream snap(testutil::slurp(e.dir / "agg" / "counts.tsv"));
    e.high = nearest_rank_q75(read_snapshot(snap));
    const auto stats = nlohmann::json::parse(testutil::slurp(e.dir / "agg" / "stats.json"));
    if (cli(pipeline_args(e, "run_a", 1)) != 0) {
        return {false, "pipeline failed"};
    }
    e.report = nlohmann::json::parse(testutil::slurp(e.dir / "run_a" / "report.json"));
    const auto* hi = entry_at(e.report, e.high);
    const auto* lo = entry_at(e.report, 0);
    if (hi == nullptr || lo == nullptr || hi->at("status") != "ok" || lo->at("status") != "ok") {
        return {false, "sweep entry missing or skipped"};
    }
    e.ok = true;
    const double auc_hi = hi->at("auc_latent").get<double>();
    const double auc_lo = lo->at("auc_latent").get<double>();
    const bool pass = auc_hi >= 0.95 && auc_hi - auc_lo >= 0.03;
    return {pass, std::to_string(stats.at("record_count").get<std::uint64_t>()) + " records; latent AUC at " +
                      std::to_string(e.high) + " listens " + fmt("%.4f", auc_hi) + ", at 0 " + fmt("%.4f", auc_lo) +
                      ", gap " + fmt("%.4f", auc_hi - auc_lo) + " (keyword AUC " +
                      fmt("%.4f", hi->at("auc").get<double>()) + ", " + fmt("%.4f", lo->at("auc").get<double>()) + ")"};
}

// 7. Unlabeled true positives among the top-scored tracks.
Outcome label_noise(const EndToEnd& e) {
    if (!e.ok) {
        return {false, "criterion 6 run unavailable"};
    }
    const auto model = model_from_json(testutil::slurp(e.dir / "run_a" / ("model_" + std::to_string(e.high) + ".json")));
    std::istringstream snap(testutil::slurp(e.dir / "agg" / "counts.tsv"));
    const auto table = read_snapshot(snap);
    std::istringstream truth_in(testutil::slurp(e.dir / "truth.tsv"));
    const auto truth = read_latent_truth(truth_in);
    std::istringstream labels_in(testutil::slurp(e.dir / "run_a" / "labels.tsv"));
    const auto labels = read_labels(labels_in);

    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [id, c] : table.rows()) {
        if (c.total_listens >= e.high) {
            ranked.emplace_back(score(model, compute_rates(c.day_counts)), id);
        }
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const auto top = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(ranked.size())));
    std::size_t hidden = 0, seasonal = 0;
    for (std::size_t i = 0; i < top; ++i) {
        const bool s = truth.is_positive(ranked[i].second);
        seasonal += s ? 1 : 0;
        hidden += s && !labels.is_positive(ranked[i].second) ? 1 : 0;
    }
    std::size_t withheld = 0;
    for (const auto& id : truth.positives) {
        withheld += labels.is_positive(id) ? 0 : 1;
    }
    const double withheld_frac = static_cast<double>(withheld) / static_cast<double>(truth.positives.size());
    const double frac = static_cast<double>(hidden) / static_cast<double>(top);
    return {frac >= withheld_frac / 2.0,
            "top " + std::to_string(top) + " of " + std::to_string(ranked.size()) + ": " + std::to_string(seasonal) +
                " latent-seasonal, " + std::to_string(hidden) + " without the keyword (" + fmt("%.4f", frac) +
                ") vs bar " + fmt("%.4f", withheld_frac / 2.0) + " (corpus withheld fraction " +
                fmt("%.4f", withheld_frac) + ")"};
}

// 8. Determinism across reruns and thread counts.
Outcome determinism(const EndToEnd& e) {
    if (!e.ok) {
        return {false, "criterion 6 run unavailable"};
    }
    if (cli(pipeline_args(e, "run_b", 1)) != 0 || cli(pipeline_args(e, "run_c", 4)) != 0) {
        return {false, "pipeline rerun failed"};
    }
    const auto a = testutil::slurp(e.dir / "run_a" / "report.json");
    const auto b = testutil::slurp(e.dir / "run_b" / "report.json");
    const auto c = nlohmann::json::parse(testutil::slurp(e.dir / "run_c" / "report.json"));
    double worst = 0;
    for (const auto& ea : e.report.at("entries")) {
        const auto* ec = entry_at(c, ea.at("min_listens").get<std::uint64_t>());
        if (ec == nullptr) {
            return {false, "threads=4 run lost an entry"};
        }
        for (const char* key : {"auc", "auc_latent"}) {
            worst = std::max(worst, std::abs(ea.at(key).get<double>() - ec->at(key).get<double>()));
        }
    }
    return {a == b && worst <= 1e-9, std::string("threads=1 reports ") + (a == b ? "byte-identical" : "DIFFER") +
                                         ", max AUC difference at threads=4 " + fmt("%.2e", worst)};
}

// 9. Aggregation memory is bounded by tracks x span, not record count.
std::int64_t peak_aggregation_bytes(std::uint64_t records, int tracks, std::size_t& rows) {
    std::vector<std::string> ids, users;
    for (int t = 0; t < tracks; ++t) {
        ids.push_back("trk" + std::to_string(t));
    }
    for (int u = 0; u < 64; ++u) {
        users.push_back("u" + std::to_string(u));
    }
    const auto start = day_number(testutil::ymd(2012, 11, 1));
    std::vector<Timestamp> stamps;
    for (int d = 0; d < 92; ++d) {
        stamps.push_back(Timestamp{date_from_day_number(start + d), 3600});
    }
    SplitMix64 rng(9009);
    const std::int64_t base = g_live.load();
    g_peak.store(base);
    std::int64_t peak = 0;
    {
        Aggregator agg(WindowSpec{});
        ListenRecord r;
        for (std::uint64_t i = 0; i < records; ++i) {
            const std::uint64_t x = rng();
            r.track_id = ids[x % static_cast<std::uint64_t>(tracks)];
            r.user_id = users[(x >> 20) % users.size()];
            r.timestamp = stamps[(x >> 40) % stamps.size()];
            agg.add(r);
        }
        rows = agg.table().size();
        peak = g_peak.load() - base;
    }
    return peak;
}

Outcome memory_bound() {
    constexpr int tracks = 1000;
    std::size_t rows_small = 0, rows_big = 0;
    const auto small = peak_aggregation_bytes(1000000, tracks, rows_small);
    const auto big = peak_aggregation_bytes(10000000, tracks, rows_big);
    // Per row: key string, bucket node, 15 day counters and allocator slack.
    const std::int64_t ceiling = tracks * (15 * 8 + 256) + 64 * 1024;
    const bool ok = rows_small == tracks && rows_big == tracks && big <= small && big <= ceiling;
    return {ok, std::to_string(rows_big) + " rows; peak heap " + std::to_string(small) + " B at 1M records, " +
                    std::to_string(big) + " B at 10M records; ceiling " + std::to_string(ceiling) + " B"};
}

} // namespace

int main() {
    EndToEnd e2e;
    struct Criterion {
        int id;
        double limit_s; ///< 0 means no runtime bound
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, 1.0, rates_property},
        {2, 10.0, aggregation_oracle},
        {3, 60.0, em_monotonicity},
        {4, 5.0, gmm_recovery},
        {5, 5.0, auc_duality},
        {6, 120.0, [&] { return end_to_end(e2e); }},
        {7, 0.0, [&] { return label_noise(e2e); }},
        {8, 0.0, [&] { return determinism(e2e); }},
        {9, 0.0, memory_bound},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.limit_s <= 0.0 || secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << o.detail << " ["
                  << fmt("%.2f", secs) << " s" << (c.limit_s > 0 ? ", limit " + fmt("%.0f", c.limit_s) + " s" : "")
                  << (in_time ? "" : ", OVER TIME") << "]\n"
                  << std::flush;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
