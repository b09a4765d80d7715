#include "seasonal/eval.hpp"

#include "seasonal/error.hpp"
#include "seasonal/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <thread>

namespace seasonal {
namespace {

std::size_t round_share(std::size_t count, double fraction) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(count) * fraction));
}

void check_scores(std::span<const ScoredLabel> scores, std::uint64_t& pos, std::uint64_t& neg) {
    pos = 0;
    neg = 0;
    for (const auto& s : scores) {
        if (std::isnan(s.score)) {
            fail(ErrorCode::InvalidConfig, "NaN score in ROC input");
        }
        (s.label ? pos : neg) += 1;
    }
    if (pos == 0 || neg == 0) {
        fail(ErrorCode::OneClassOnly, "ROC/AUC needs at least one positive and one negative");
    }
}

/// Integer (fp, tp) corner of the ROC staircase.
struct Corner {
    std::uint64_t fp;
    std::uint64_t tp;
    double threshold;
};

} // namespace

void SplitConfig::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        fail(ErrorCode::InvalidConfig, "train_fraction must lie strictly between 0 and 1");
    }
}

Split split(const FeatureDataset& dataset, const SplitConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::vector<bool> in_train(dataset.rows.size(), false);
    const auto take = [&](std::vector<std::size_t> idx, std::size_t n_train) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < n_train; ++i) {
            in_train[idx[i]] = true;
        }
    };
    if (cfg.stratified) {
        std::vector<std::size_t> pos;
        std::vector<std::size_t> neg;
        for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
            (dataset.rows[i].label ? pos : neg).push_back(i);
        }
        if (pos.size() < 2) {
            fail(ErrorCode::TooFewPositives,
                 "stratified split needs at least 2 positives, got " + std::to_string(pos.size()));
        }
        if (neg.size() < 2) {
            fail(ErrorCode::TooFewNegatives,
                 "stratified split needs at least 2 negatives, got " + std::to_string(neg.size()));
        }
        const auto clamp = [](std::size_t v, std::size_t n) { return std::clamp<std::size_t>(v, 1, n - 1); };
        const std::size_t pos_train = clamp(round_share(pos.size(), cfg.train_fraction), pos.size());
        const std::size_t neg_train = clamp(round_share(neg.size(), cfg.train_fraction), neg.size());
        take(std::move(pos), pos_train);
        take(std::move(neg), neg_train);
    } else {
        std::vector<std::size_t> all(dataset.rows.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        take(std::move(all), round_share(dataset.rows.size(), cfg.train_fraction));
    }
    Split out;
    out.train.window = dataset.window;
    out.test.window = dataset.window;
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
        (in_train[i] ? out.train : out.test).rows.push_back(dataset.rows[i]);
    }
    return out;
}

double auc_from_scores(std::span<const ScoredLabel> scores) {
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    check_scores(scores, pos, neg);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });
    // Twice the positive rank sum, so tied mid-ranks stay integral.
    std::uint64_t rank_sum2 = 0;
    for (std::size_t a = 0; a < order.size();) {
        std::size_t b = a + 1;
        while (b < order.size() && scores[order[b]].score == scores[order[a]].score) {
            ++b;
        }
        const std::uint64_t mid2 = a + 1 + b;
        for (std::size_t i = a; i < b; ++i) {
            if (scores[order[i]].label) {
                rank_sum2 += mid2;
            }
        }
        a = b;
    }
    const std::uint64_t u2 = rank_sum2 - pos * (pos + 1);
    return static_cast<double>(u2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

RocCurve roc_curve(std::span<const ScoredLabel> scores) {
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    check_scores(scores, pos, neg);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a].score > scores[b].score; });

    std::vector<Corner> corners{{0, 0, std::numeric_limits<double>::infinity()}};
    std::uint64_t fp = 0;
    std::uint64_t tp = 0;
    for (std::size_t a = 0; a < order.size();) {
        const double s = scores[order[a]].score;
        std::size_t b = a;
        while (b < order.size() && scores[order[b]].score == s) {
            (scores[order[b]].label ? tp : fp) += 1;
            ++b;
        }
        // Drop the previous corner when it lies on the segment to this one.
        if (corners.size() >= 2) {
            const auto& p0 = corners[corners.size() - 2];
            const auto& p1 = corners.back();
            const auto cross = static_cast<long double>(p1.fp - p0.fp) * static_cast<long double>(tp - p1.tp) -
                               static_cast<long double>(p1.tp - p0.tp) * static_cast<long double>(fp - p1.fp);
            if (cross == 0.0L) {
                corners.pop_back();
            }
        }
        corners.push_back({fp, tp, s});
        a = b;
    }

    RocCurve roc;
    std::uint64_t area2 = 0;
    for (std::size_t i = 0; i < corners.size(); ++i) {
        const auto& c = corners[i];
        roc.points.push_back({static_cast<double>(c.fp) / static_cast<double>(neg),
                              static_cast<double>(c.tp) / static_cast<double>(pos), c.threshold});
        if (i > 0) {
            area2 += (c.fp - corners[i - 1].fp) * (c.tp + corners[i - 1].tp);
        }
    }
    roc.auc = static_cast<double>(area2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return roc;
}

void write_roc_csv(std::ostream& out, const RocCurve& roc) {
    out << "fpr,tpr,threshold\n";
    char buf[96];
    for (const auto& p : roc.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.fpr, p.tpr, p.threshold);
        out << buf;
    }
}

std::uint64_t entry_split_seed(const SplitConfig& cfg, std::uint64_t threshold) {
    return derive_seed(cfg.seed, "split", threshold);
}

std::uint64_t entry_gmm_seed(const GmmConfig& cfg, std::uint64_t threshold) {
    return derive_seed(cfg.seed, "gmm-init", threshold);
}

namespace {

std::vector<std::vector<double>> train_positive_rates(const FeatureDataset& train) {
    std::vector<std::vector<double>> out;
    for (const auto& row : train.rows) {
        if (row.label) {
            out.push_back(row.rates);
        }
    }
    return out;
}

ComponentResult run_components(const std::vector<std::vector<double>>& train, const FeatureDataset& test,
                               GmmConfig gc, int k, const SweepOptions& options, int fit_threads) {
    ComponentResult out;
    out.components = k;
    try {
        gc.components = k;
        const GmmModel model = fit(train, gc, fit_threads);
        std::vector<ScoredLabel> scored;
        std::vector<ScoredLabel> scored_truth;
        for (const auto& row : test.rows) {
            const double s = score(model, std::span<const double>(row.rates));
            scored.push_back({s, row.label});
            if (options.eval_truth) {
                scored_truth.push_back({s, options.eval_truth->is_positive(row.track_id)});
            }
        }
        out.auc = auc_from_scores(scored);
        if (options.eval_truth) {
            try {
                out.auc_latent = auc_from_scores(scored_truth);
            } catch (const Error&) {
                out.auc_latent.reset();
            }
        }
    } catch (const Error& ex) {
        out.skipped = true;
        out.skip_reason = std::string(to_string(ex.code())) + ": " + ex.what();
    }
    return out;
}

EvalEntry run_entry(const TrackCountTable& table, const LabelSet& labels, std::uint64_t threshold,
                    const WindowSpec& window, const GmmConfig& gmm_cfg, const SplitConfig& split_cfg,
                    const SweepOptions& options, int fit_threads) {
    EvalEntry entry;
    entry.min_listens = threshold;
    entry.split_seed = entry_split_seed(split_cfg, threshold);
    entry.gmm_seed = entry_gmm_seed(gmm_cfg, threshold);
    const FeatureDataset dataset = build_dataset(filter_min_listens(table, threshold), labels, window);
    entry.total_tracks = dataset.rows.size();
    entry.positive_tracks = dataset.positive_count();
    try {
        SplitConfig sc = split_cfg;
        sc.seed = entry.split_seed;
        const Split parts = split(dataset, sc);
        const auto train = train_positive_rates(parts.train);
        entry.train_positives = train.size();
        entry.test_tracks = parts.test.rows.size();
        GmmConfig gc = gmm_cfg;
        gc.seed = entry.gmm_seed;
        GmmModel model = fit(train, gc, fit_threads);

        std::vector<ScoredLabel> scored;
        std::vector<ScoredLabel> scored_truth;
        scored.reserve(parts.test.rows.size());
        for (const auto& row : parts.test.rows) {
            const double s = score(model, std::span<const double>(row.rates));
            scored.push_back({s, row.label});
            entry.test_scores.emplace_back(row.track_id, s);
            if (options.eval_truth) {
                scored_truth.push_back({s, options.eval_truth->is_positive(row.track_id)});
            }
        }
        entry.roc = roc_curve(scored);
        entry.auc = entry.roc.auc;
        if (options.eval_truth) {
            try {
                entry.auc_latent = auc_from_scores(scored_truth);
            } catch (const Error&) {
                entry.auc_latent.reset();
            }
        }
        if (options.keep_models) {
            entry.model = std::move(model);
        }
        for (const int k : options.component_sweep) {
            entry.by_components.push_back(run_components(train, parts.test, gc, k, options, fit_threads));
        }
    } catch (const Error& ex) {
        entry.skipped = true;
        entry.skip_reason = std::string(to_string(ex.code())) + ": " + ex.what();
        entry.test_scores.clear();
    }
    return entry;
}

} // namespace

EvalReport threshold_sweep(const TrackCountTable& table, const LabelSet& labels,
                           std::span<const std::uint64_t> thresholds, const WindowSpec& window,
                           const GmmConfig& gmm_cfg, const SplitConfig& split_cfg,
                           const SweepOptions& options) {
    if (thresholds.empty()) {
        fail(ErrorCode::InvalidConfig, "threshold list is empty");
    }
    std::vector<std::uint64_t> sorted(thresholds.begin(), thresholds.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        fail(ErrorCode::InvalidConfig, "thresholds must be distinct");
    }
    if (!(table.window() == window)) {
        fail(ErrorCode::WindowMismatch, "count table window " + table.window().to_string() +
                                            " does not match configured window " + window.to_string());
    }
    gmm_cfg.validate();
    split_cfg.validate();

    EvalReport report;
    report.window = window;
    report.keyword = labels.keyword;
    report.gmm = gmm_cfg;
    report.split = split_cfg;
    report.entries.resize(sorted.size());

    const auto workers = static_cast<std::size_t>(std::max(1, options.threads));
    if (workers == 1 || sorted.size() == 1) {
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            report.entries[i] = run_entry(table, labels, sorted[i], window, gmm_cfg, split_cfg, options,
                                          options.threads);
        }
    } else {
        std::vector<std::thread> pool;
        const std::size_t used = std::min(workers, sorted.size());
        for (std::size_t t = 0; t < used; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < sorted.size(); i += used) {
                    report.entries[i] =
                        run_entry(table, labels, sorted[i], window, gmm_cfg, split_cfg, options, 1);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return report;
}

GmmModel train_at_threshold(const TrackCountTable& table, const LabelSet& labels, std::uint64_t threshold,
                            const WindowSpec& window, const GmmConfig& gmm_cfg,
                            const SplitConfig& split_cfg, int threads) {
    const FeatureDataset dataset = build_dataset(filter_min_listens(table, threshold), labels, window);
    SplitConfig sc = split_cfg;
    sc.seed = entry_split_seed(split_cfg, threshold);
    GmmConfig gc = gmm_cfg;
    gc.seed = entry_gmm_seed(gmm_cfg, threshold);
    return fit(train_positive_rates(split(dataset, sc).train), gc, threads);
}

std::string EvalReport::to_json() const {
    using nlohmann::ordered_json;
    ordered_json j;
    j["format_version"] = 1;
    ordered_json cfg;
    cfg["window"] = {{"anchor", format_month_day(window.anchor)}, {"span", window.span}, {"years", window.years}};
    cfg["keyword"] = keyword;
    cfg["gmm"] = {{"components", gmm.components}, {"max_iters", gmm.max_iters}, {"rel_tol", gmm.rel_tol},
                  {"cov_ridge", gmm.cov_ridge}, {"seed", gmm.seed}, {"init", to_string(gmm.init)}};
    cfg["split"] = {{"train_fraction", split.train_fraction}, {"seed", split.seed}, {"stratified", split.stratified}};
    cfg["master_seed"] = master_seed;
    j["config"] = cfg;
    ordered_json in = ordered_json::object();
    for (const auto& [k, v] : inputs) {
        in[k] = v;
    }
    j["inputs"] = in;
    ordered_json rows = ordered_json::array();
    for (const auto& e : entries) {
        ordered_json o;
        o["min_listens"] = e.min_listens;
        o["total_tracks"] = e.total_tracks;
        o["positive_tracks"] = e.positive_tracks;
        o["status"] = e.skipped ? "skipped" : "ok";
        if (e.skipped) {
            o["skip_reason"] = e.skip_reason;
            o["auc"] = nullptr;
        } else {
            o["train_positives"] = e.train_positives;
            o["test_tracks"] = e.test_tracks;
            o["auc"] = e.auc;
            o["auc_latent"] = e.auc_latent ? ordered_json(*e.auc_latent) : ordered_json(nullptr);
            o["roc_points"] = e.roc.points.size();
            o["roc_path"] = e.roc_path;
            o["model_path"] = e.model_path;
            if (!e.by_components.empty()) {
                ordered_json ks = ordered_json::array();
                for (const auto& c : e.by_components) {
                    ordered_json r;
                    r["components"] = c.components;
                    r["status"] = c.skipped ? "skipped" : "ok";
                    if (c.skipped) {
                        r["skip_reason"] = c.skip_reason;
                        r["auc"] = nullptr;
                    } else {
                        r["auc"] = c.auc;
                        r["auc_latent"] = c.auc_latent ? ordered_json(*c.auc_latent) : ordered_json(nullptr);
                    }
                    ks.push_back(std::move(r));
                }
                o["auc_by_components"] = ks;
            }
        }
        o["split_seed"] = e.split_seed;
        o["gmm_seed"] = e.gmm_seed;
        rows.push_back(std::move(o));
    }
    j["entries"] = rows;
    return j.dump(2) + "\n";
}

} // namespace seasonal
