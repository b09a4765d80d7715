#pragma once

#include "seasonal/eval.hpp"
#include "seasonal/gmm.hpp"
#include "seasonal/synthgen.hpp"
#include "seasonal/window.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace seasonal {

/// Every knob of a run. All randomness flows from master_seed: the split,
/// gmm-init and synth seeds are derived from it by label.
struct PipelineConfig {
    // Inputs and outputs.
    std::string listens;
    std::string metadata;
    std::string truth; ///< optional latent-truth TSV for a second AUC
    std::string counts;
    std::string labels;
    std::string features;
    std::string model;
    std::string output_dir = "out";

    std::string keyword = "christmas";
    WindowSpec window;
    std::vector<std::uint64_t> thresholds{1500, 1000, 500, 100, 0};
    GmmConfig gmm;
    std::vector<int> component_sweep; ///< evaluate: extra K values reported per entry
    SplitConfig split;
    SynthConfig synth;
    std::uint64_t master_seed = 0;
    int threads = 1;
    bool strict = false;
    std::uint64_t min_listens = 0; ///< train
    int top_n = 0;                 ///< score; 0 keeps every row

    /// Throws InvalidConfig (or InvalidWindow) on bad values.
    void validate() const;

    /// Fills gmm.seed, split.seed and synth.seed from master_seed.
    void derive_seeds();

    static PipelineConfig from_json(const std::string& text);
    std::string to_json() const;
};

void cmd_synth(const PipelineConfig& cfg, std::ostream& log);
void cmd_aggregate(const PipelineConfig& cfg, std::ostream& log);
void cmd_label(const PipelineConfig& cfg, std::ostream& log);
void cmd_features(const PipelineConfig& cfg, std::ostream& log);
void cmd_train(const PipelineConfig& cfg, std::ostream& log);
void cmd_score(const PipelineConfig& cfg, std::ostream& log);
void cmd_evaluate(const PipelineConfig& cfg, std::ostream& log);
void cmd_pipeline(const PipelineConfig& cfg, std::ostream& log);

/// Full command line entry point; returns the process exit code
/// (0 ok, 1 config/validation, 2 I/O, 3 data error in strict mode).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::string& path);

} // namespace seasonal
