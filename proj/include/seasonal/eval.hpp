#pragma once

#include "seasonal/features.hpp"
#include "seasonal/gmm.hpp"
#include "seasonal/ingest.hpp"
#include "seasonal/labeling.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace seasonal {

struct SplitConfig {
    double train_fraction = 0.6;
    std::uint64_t seed = 0;
    bool stratified = true;

    void validate() const;

    friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

struct Split {
    FeatureDataset train;
    FeatureDataset test;
};

/// Seeded disjoint partition. Stratified mode rounds each class separately.
/// Throws TooFewPositives / TooFewNegatives (stratified, fewer than two).
Split split(const FeatureDataset& dataset, const SplitConfig& cfg);

struct ScoredLabel {
    double score;
    bool label;
};

/// Mann-Whitney statistic with half credit for ties. Throws OneClassOnly.
double auc_from_scores(std::span<const ScoredLabel> scores);

struct RocPoint {
    double fpr;
    double tpr;
    double threshold; ///< score cutoff (>=); +inf at the origin
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Cutoffs at distinct scores in descending order, ties collapsed into one
/// step, collinear interior points dropped. Throws OneClassOnly.
RocCurve roc_curve(std::span<const ScoredLabel> scores);

/// fpr,tpr,threshold
void write_roc_csv(std::ostream& out, const RocCurve& roc);

/// Test AUC of one alternative component count at a sweep entry.
struct ComponentResult {
    int components = 0;
    bool skipped = false;
    std::string skip_reason;
    double auc = 0.0;
    std::optional<double> auc_latent;
};

struct EvalEntry {
    std::uint64_t min_listens = 0;
    std::uint64_t total_tracks = 0;
    std::uint64_t positive_tracks = 0;
    std::uint64_t train_positives = 0;
    std::uint64_t test_tracks = 0;
    bool skipped = false;
    std::string skip_reason;
    double auc = 0.0;                  ///< against keyword labels
    std::optional<double> auc_latent;  ///< against latent truth, when given
    RocCurve roc;
    std::string roc_path;
    std::string model_path;
    std::uint64_t split_seed = 0;
    std::uint64_t gmm_seed = 0;
    std::vector<ComponentResult> by_components; ///< empty unless a K sweep was asked for

    // Kept in memory for callers; not part of the JSON report.
    std::optional<GmmModel> model;
    std::vector<std::pair<std::string, double>> test_scores;
};

struct EvalReport {
    std::vector<EvalEntry> entries; ///< min_listens descending
    WindowSpec window;
    std::string keyword;
    GmmConfig gmm;
    SplitConfig split;
    std::uint64_t master_seed = 0;
    std::map<std::string, std::string> inputs; ///< echo: name -> path / digest

    std::string to_json() const;
};

/// Seeds for one sweep entry, derived from the base seeds and the threshold.
std::uint64_t entry_split_seed(const SplitConfig& cfg, std::uint64_t threshold);
std::uint64_t entry_gmm_seed(const GmmConfig& cfg, std::uint64_t threshold);

struct SweepOptions {
    /// Alternative ground truth for a second AUC (e.g. generator latent flags).
    const LabelSet* eval_truth = nullptr;
    int threads = 1;
    bool keep_models = true;
    /// Extra component counts refit on the same split and seed.
    std::vector<int> component_sweep;
};

/// For each threshold: filter, build features, split, fit on train positives,
/// score the test rows, ROC/AUC. Failing thresholds are recorded as skipped.
EvalReport threshold_sweep(const TrackCountTable& table, const LabelSet& labels,
                           std::span<const std::uint64_t> thresholds, const WindowSpec& window,
                           const GmmConfig& gmm_cfg, const SplitConfig& split_cfg,
                           const SweepOptions& options = {});

/// Train half of one sweep entry; used by the `train` command.
GmmModel train_at_threshold(const TrackCountTable& table, const LabelSet& labels,
                            std::uint64_t threshold, const WindowSpec& window,
                            const GmmConfig& gmm_cfg, const SplitConfig& split_cfg,
                            int threads = 1);

} // namespace seasonal
