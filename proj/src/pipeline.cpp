#include "seasonal/pipeline.hpp"

#include "seasonal/error.hpp"
#include "seasonal/features.hpp"
#include "seasonal/ingest.hpp"
#include "seasonal/labeling.hpp"
#include "seasonal/random.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace seasonal {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::ifstream open_in(const std::string& path, const char* what) {
    if (path.empty()) {
        fail(ErrorCode::InvalidConfig, std::string("no ") + what + " path configured");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, std::string("cannot open ") + what + " '" + path + "'");
    }
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) {
        fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
    }
}

std::string read_text(const std::string& path, const char* what) {
    auto in = open_in(path, what);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path out_path(const PipelineConfig& cfg, const std::string& name) {
    return fs::path(cfg.output_dir) / name;
}

std::string input_or_default(const std::string& given, const PipelineConfig& cfg, const char* name) {
    return given.empty() ? out_path(cfg, name).string() : given;
}

std::string model_name(std::uint64_t threshold) {
    return "model_" + std::to_string(threshold) + ".json";
}

std::string roc_name(std::uint64_t threshold) {
    return "roc_" + std::to_string(threshold) + ".csv";
}

TrackCountTable load_counts(const PipelineConfig& cfg) {
    auto in = open_in(input_or_default(cfg.counts, cfg, "counts.tsv"), "count table");
    return read_snapshot(in);
}

LabelSet load_labels(const PipelineConfig& cfg) {
    auto in = open_in(input_or_default(cfg.labels, cfg, "labels.tsv"), "labels");
    return read_labels(in);
}

AggregateResult run_aggregate(const PipelineConfig& cfg, std::ostream& log) {
    auto in = open_in(cfg.listens, "listens file");
    Aggregator agg(cfg.window, cfg.strict ? ParseMode::Strict : ParseMode::SkipMalformed);
    agg.add_stream(in);
    const DatasetStats stats = agg.stats();
    AggregateResult result{agg.release_table(), stats};
    {
        auto out = open_out(out_path(cfg, "counts.tsv"));
        write_snapshot(out, result.table);
    }
    write_text(out_path(cfg, "stats.json"), result.stats.to_json());
    log << "aggregate: " << result.stats.record_count << " records, " << result.stats.distinct_tracks
        << " tracks, " << result.stats.malformed_lines << " malformed\n";
    return result;
}

LabelSet run_label(const PipelineConfig& cfg, std::ostream& log) {
    auto in = open_in(cfg.metadata, "metadata file");
    const auto metadata = read_metadata(in);
    LabelSet labels = build_ground_truth(metadata, cfg.keyword);
    auto out = open_out(out_path(cfg, "labels.tsv"));
    write_labels(out, labels);
    log << "label: " << labels.positives.size() << " of " << labels.universe.size() << " tracks match '"
        << cfg.keyword << "'";
    if (labels.duplicate_ids > 0) {
        log << " (" << labels.duplicate_ids << " duplicate ids, last wins)";
    }
    log << '\n';
    return labels;
}

void write_sweep_outputs(const PipelineConfig& cfg, EvalReport& report, std::ostream& log) {
    for (auto& e : report.entries) {
        if (e.skipped) {
            log << "evaluate: threshold " << e.min_listens << " skipped (" << e.skip_reason << ")\n";
            continue;
        }
        e.roc_path = roc_name(e.min_listens);
        e.model_path = model_name(e.min_listens);
        auto roc_out = open_out(out_path(cfg, e.roc_path));
        write_roc_csv(roc_out, e.roc);
        write_text(out_path(cfg, e.model_path), model_to_json(*e.model));
        char auc[32];
        std::snprintf(auc, sizeof(auc), "%.4f", e.auc);
        log << "evaluate: threshold " << e.min_listens << ": " << e.total_tracks << " tracks, "
            << e.positive_tracks << " positive, AUC " << auc;
        if (e.auc_latent) {
            std::snprintf(auc, sizeof(auc), "%.4f", *e.auc_latent);
            log << " (latent " << auc << ")";
        }
        log << '\n';
    }
    write_text(out_path(cfg, "report.json"), report.to_json());
}

EvalReport run_sweep(const PipelineConfig& cfg, const TrackCountTable& table, const LabelSet& labels) {
    SweepOptions opts;
    opts.threads = cfg.threads;
    opts.component_sweep = cfg.component_sweep;
    LabelSet truth;
    if (!cfg.truth.empty()) {
        auto in = open_in(cfg.truth, "latent truth");
        truth = read_latent_truth(in);
        opts.eval_truth = &truth;
    }
    EvalReport report =
        threshold_sweep(table, labels, cfg.thresholds, cfg.window, cfg.gmm, cfg.split, opts);
    report.master_seed = cfg.master_seed;
    if (!cfg.truth.empty()) {
        report.inputs["truth_sha256"] = file_digest(cfg.truth);
    }
    return report;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.front() == '-') {
            fail(ErrorCode::InvalidConfig, "bad integer list item '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (auto v : parse_u64_list(text)) {
        out.push_back(static_cast<int>(v));
    }
    return out;
}

Date parse_date_or_throw(const std::string& text) {
    auto d = parse_date(text);
    if (!d) {
        fail(ErrorCode::InvalidConfig, "bad date '" + text + "'");
    }
    return *d;
}

MonthDay parse_month_day_or_throw(const std::string& text) {
    auto md = parse_month_day(text);
    if (!md) {
        fail(ErrorCode::InvalidConfig, "bad month-day '" + text + "'");
    }
    return *md;
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        out = obj.at(key).get<T>();
    }
}

void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const char* where) {
    if (!obj.is_object()) {
        fail(ErrorCode::InvalidConfig, std::string(where) + " must be a JSON object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            fail(ErrorCode::InvalidConfig, std::string("unknown key '") + key + "' in " + where);
        }
    }
}

} // namespace

std::string file_digest(const std::string& path) {
    auto in = open_in(path, "input");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof(byte), "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

void PipelineConfig::validate() const {
    window.validate();
    gmm.validate();
    split.validate();
    if (thresholds.empty()) {
        fail(ErrorCode::InvalidConfig, "thresholds must not be empty");
    }
    auto sorted = thresholds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        fail(ErrorCode::InvalidConfig, "thresholds must be distinct");
    }
    if (keyword.empty()) {
        fail(ErrorCode::EmptyKeyword, "keyword must not be empty");
    }
    if (threads < 1) {
        fail(ErrorCode::InvalidConfig, "threads must be at least 1");
    }
    for (const int k : component_sweep) {
        if (k < 1) {
            fail(ErrorCode::InvalidConfig, "component_sweep values must be positive");
        }
    }
    if (top_n < 0) {
        fail(ErrorCode::InvalidConfig, "top_n must be non-negative");
    }
    if (output_dir.empty()) {
        fail(ErrorCode::InvalidConfig, "output directory must not be empty");
    }
}

void PipelineConfig::derive_seeds() {
    gmm.seed = derive_seed(master_seed, "gmm-init");
    split.seed = derive_seed(master_seed, "split");
    synth.seed = derive_seed(master_seed, "synth");
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
    PipelineConfig cfg;
    try {
        const auto j = nlohmann::json::parse(text);
        check_keys(j,
                   {"listens", "metadata", "truth", "counts", "labels", "features", "model", "output_dir",
                    "keyword", "window", "thresholds", "gmm", "component_sweep", "split", "synth", "master_seed", "threads",
                    "strict", "min_listens", "top_n"},
                   "config");
        read_field(j, "listens", cfg.listens);
        read_field(j, "metadata", cfg.metadata);
        read_field(j, "truth", cfg.truth);
        read_field(j, "counts", cfg.counts);
        read_field(j, "labels", cfg.labels);
        read_field(j, "features", cfg.features);
        read_field(j, "model", cfg.model);
        read_field(j, "output_dir", cfg.output_dir);
        read_field(j, "keyword", cfg.keyword);
        read_field(j, "thresholds", cfg.thresholds);
        read_field(j, "component_sweep", cfg.component_sweep);
        read_field(j, "master_seed", cfg.master_seed);
        read_field(j, "threads", cfg.threads);
        read_field(j, "strict", cfg.strict);
        read_field(j, "min_listens", cfg.min_listens);
        read_field(j, "top_n", cfg.top_n);
        if (j.contains("window")) {
            const auto& w = j.at("window");
            check_keys(w, {"anchor", "span", "years"}, "window");
            if (w.contains("anchor")) {
                cfg.window.anchor = parse_month_day_or_throw(w.at("anchor").get<std::string>());
            }
            read_field(w, "span", cfg.window.span);
            read_field(w, "years", cfg.window.years);
        }
        if (j.contains("gmm")) {
            const auto& g = j.at("gmm");
            check_keys(g, {"components", "max_iters", "rel_tol", "cov_ridge", "init"}, "gmm");
            read_field(g, "components", cfg.gmm.components);
            read_field(g, "max_iters", cfg.gmm.max_iters);
            read_field(g, "rel_tol", cfg.gmm.rel_tol);
            read_field(g, "cov_ridge", cfg.gmm.cov_ridge);
            if (g.contains("init")) {
                cfg.gmm.init = parse_init_method(g.at("init").get<std::string>());
            }
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            check_keys(s, {"train_fraction", "stratified"}, "split");
            read_field(s, "train_fraction", cfg.split.train_fraction);
            read_field(s, "stratified", cfg.split.stratified);
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            check_keys(s,
                       {"n_tracks", "n_users", "seasonal_fraction", "date_start", "date_end", "window_span",
                        "popularity_alpha", "popularity_min", "popularity_max", "base_rate_scale", "peak_multiplier_lo", "peak_multiplier_hi",
                        "peak_width_days", "keyword_recall", "keyword"},
                       "synth");
            auto& sc = cfg.synth;
            read_field(s, "n_tracks", sc.n_tracks);
            read_field(s, "n_users", sc.n_users);
            read_field(s, "seasonal_fraction", sc.seasonal_fraction);
            if (s.contains("date_start")) {
                sc.date_start = parse_date_or_throw(s.at("date_start").get<std::string>());
            }
            if (s.contains("date_end")) {
                sc.date_end = parse_date_or_throw(s.at("date_end").get<std::string>());
            }
            read_field(s, "window_span", sc.window_span);
            read_field(s, "popularity_alpha", sc.popularity_alpha);
            read_field(s, "popularity_min", sc.popularity_min);
            read_field(s, "popularity_max", sc.popularity_max);
            read_field(s, "base_rate_scale", sc.base_rate_scale);
            read_field(s, "peak_multiplier_lo", sc.peak_multiplier_lo);
            read_field(s, "peak_multiplier_hi", sc.peak_multiplier_hi);
            read_field(s, "peak_width_days", sc.peak_width_days);
            read_field(s, "keyword_recall", sc.keyword_recall);
            read_field(s, "keyword", sc.keyword);
        }
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::InvalidConfig, std::string("bad config JSON: ") + ex.what());
    }
    return cfg;
}

std::string PipelineConfig::to_json() const {
    ordered_json j;
    j["listens"] = listens;
    j["metadata"] = metadata;
    j["truth"] = truth;
    j["counts"] = counts;
    j["labels"] = labels;
    j["features"] = features;
    j["model"] = model;
    j["output_dir"] = output_dir;
    j["keyword"] = keyword;
    j["window"] = {{"anchor", format_month_day(window.anchor)}, {"span", window.span}, {"years", window.years}};
    j["thresholds"] = thresholds;
    j["gmm"] = {{"components", gmm.components}, {"max_iters", gmm.max_iters}, {"rel_tol", gmm.rel_tol},
                {"cov_ridge", gmm.cov_ridge}, {"init", to_string(gmm.init)}};
    j["component_sweep"] = component_sweep;
    j["split"] = {{"train_fraction", split.train_fraction}, {"stratified", split.stratified}};
    j["synth"] = {{"n_tracks", synth.n_tracks},
                  {"n_users", synth.n_users},
                  {"seasonal_fraction", synth.seasonal_fraction},
                  {"date_start", format_date(synth.date_start)},
                  {"date_end", format_date(synth.date_end)},
                  {"window_span", synth.window_span},
                  {"popularity_alpha", synth.popularity_alpha},
                  {"popularity_min", synth.popularity_min},
                  {"popularity_max", synth.popularity_max},
                  {"base_rate_scale", synth.base_rate_scale},
                  {"peak_multiplier_lo", synth.peak_multiplier_lo},
                  {"peak_multiplier_hi", synth.peak_multiplier_hi},
                  {"peak_width_days", synth.peak_width_days},
                  {"keyword_recall", synth.keyword_recall},
                  {"keyword", synth.keyword}};
    j["master_seed"] = master_seed;
    j["threads"] = threads;
    j["strict"] = strict;
    j["min_listens"] = min_listens;
    j["top_n"] = top_n;
    return j.dump(2) + "\n";
}

void cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
    SynthConfig sc = cfg.synth;
    sc.anchor = cfg.window.anchor;
    sc.window_span = cfg.window.span;
    const auto profiles = gen_profiles(sc);
    {
        auto out = open_out(out_path(cfg, "metadata.tsv"));
        write_metadata(out, profiles_metadata(profiles));
    }
    {
        auto out = open_out(out_path(cfg, "truth.tsv"));
        write_latent_truth(out, profiles);
    }
    auto out = open_out(out_path(cfg, "listens.tsv"));
    out << "user_id\ttimestamp\ttrack_id\n";
    std::uint64_t n = 0;
    std::string line;
    ListenGenerator(profiles, sc).for_each([&](const ListenRecord& r) {
        line.clear();
        line += r.user_id;
        line += '\t';
        line += format_timestamp(r.timestamp);
        line += '\t';
        line += r.track_id;
        line += '\n';
        out << line;
        ++n;
    });
    if (!out) {
        fail(ErrorCode::Io, "write failed for listens.tsv");
    }
    log << "synth: " << profiles.size() << " tracks, " << n << " records\n";
}

void cmd_aggregate(const PipelineConfig& cfg, std::ostream& log) {
    run_aggregate(cfg, log);
}

void cmd_label(const PipelineConfig& cfg, std::ostream& log) {
    run_label(cfg, log);
}

void cmd_features(const PipelineConfig& cfg, std::ostream& log) {
    const auto table = load_counts(cfg);
    const auto labels = load_labels(cfg);
    const auto dataset = build_dataset(table, labels, cfg.window);
    auto out = open_out(out_path(cfg, "features.tsv"));
    write_features(out, dataset);
    log << "features: " << dataset.rows.size() << " rows (" << dataset.positive_count() << " positive), "
        << dataset.excluded_undefined << " without window listens, " << dataset.excluded_unlabeled
        << " unlabeled\n";
}

void cmd_train(const PipelineConfig& cfg, std::ostream& log) {
    const auto table = load_counts(cfg);
    const auto labels = load_labels(cfg);
    const GmmModel model =
        train_at_threshold(table, labels, cfg.min_listens, cfg.window, cfg.gmm, cfg.split, cfg.threads);
    const auto path = cfg.model.empty() ? out_path(cfg, model_name(cfg.min_listens)) : fs::path(cfg.model);
    write_text(path, model_to_json(model));
    log << "train: " << model.components() << " components, mean log-likelihood " << model.train_loglik
        << " after " << model.iterations << " iterations -> " << path.string() << '\n';
}

void cmd_score(const PipelineConfig& cfg, std::ostream& log) {
    const GmmModel model = model_from_json(read_text(cfg.model, "model"));
    const auto table = load_counts(cfg);
    if (model.dim != table.window().span) {
        fail(ErrorCode::WindowMismatch, "model dimension " + std::to_string(model.dim) +
                                            " does not match window span " +
                                            std::to_string(table.window().span));
    }
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(table.size());
    for (const auto& [id, counts] : table.rows()) {
        ranked.emplace_back(id, score(model, compute_rates(counts.day_counts)));
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (cfg.top_n > 0 && ranked.size() > static_cast<std::size_t>(cfg.top_n)) {
        ranked.resize(static_cast<std::size_t>(cfg.top_n));
    }
    auto out = open_out(out_path(cfg, "scores.tsv"));
    out << "track_id\tscore\n";
    char buf[40];
    for (const auto& [id, s] : ranked) {
        std::snprintf(buf, sizeof(buf), "%.17g", s);
        out << id << '\t' << buf << '\n';
    }
    log << "score: " << ranked.size() << " rows -> " << out_path(cfg, "scores.tsv").string() << '\n';
}

void cmd_evaluate(const PipelineConfig& cfg, std::ostream& log) {
    const auto counts_path = input_or_default(cfg.counts, cfg, "counts.tsv");
    const auto labels_path = input_or_default(cfg.labels, cfg, "labels.tsv");
    const auto table = load_counts(cfg);
    const auto labels = load_labels(cfg);
    EvalReport report = run_sweep(cfg, table, labels);
    report.inputs["counts_sha256"] = file_digest(counts_path);
    report.inputs["labels_sha256"] = file_digest(labels_path);
    write_sweep_outputs(cfg, report, log);
}

void cmd_pipeline(const PipelineConfig& cfg, std::ostream& log) {
    const AggregateResult agg = run_aggregate(cfg, log);
    const LabelSet labels = run_label(cfg, log);
    std::uint64_t unlabeled = 0;
    for (const auto& [id, counts] : agg.table.rows()) {
        unlabeled += labels.contains(id) ? 0 : 1;
    }
    if (unlabeled > 0) {
        log << "pipeline: " << unlabeled << " tracks without metadata are excluded\n";
    }
    EvalReport report = run_sweep(cfg, agg.table, labels);
    report.inputs["listens_sha256"] = file_digest(cfg.listens);
    report.inputs["metadata_sha256"] = file_digest(cfg.metadata);
    write_sweep_outputs(cfg, report, log);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Seasonal track discovery from listening logs"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::string listens, metadata, truth, counts, labels, features, model, out_dir;
    std::string anchor, years, keyword, thresholds, init, sweep;
    std::string start, end;
    int span = 0, components = 0, max_iters = 0, threads = 0, top_n = 0;
    int n_tracks = 0, n_users = 0, pop_min = 0;
    std::uint64_t pop_max = 0;
    double train_frac = 0, ridge = 0, rel_tol = 0;
    double seasonal_fraction = 0, alpha = 0, rate_scale = 0, peak_lo = 0, peak_hi = 0, peak_width = 0,
           recall = 0;
    std::uint64_t seed = 0, min_listens = 0;
    bool strict = false, no_stratify = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--listens", listens, "listens TSV");
    app.add_option("--metadata", metadata, "metadata TSV");
    app.add_option("--truth", truth, "latent-truth TSV for a second AUC");
    app.add_option("--counts", counts, "count-table snapshot");
    app.add_option("--labels", labels, "label TSV");
    app.add_option("--features", features, "feature TSV");
    app.add_option("--model", model, "model JSON");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--anchor", anchor, "window anchor MM-DD");
    app.add_option("--span", span, "window span in days (odd)");
    app.add_option("--years", years, "comma-separated window years");
    app.add_option("--keyword", keyword, "ground-truth keyword");
    app.add_option("--thresholds", thresholds, "comma-separated minimum total listens");
    app.add_option("--components", components, "mixture components");
    app.add_option("--sweep-components", sweep, "evaluate: comma-separated extra K values");
    app.add_option("--max-iters", max_iters, "EM iteration cap");
    app.add_option("--rel-tol", rel_tol, "EM relative tolerance");
    app.add_option("--ridge", ridge, "covariance ridge");
    app.add_option("--init", init, "kmeans_pp | random_points");
    app.add_option("--train-frac", train_frac, "train fraction");
    app.add_flag("--no-stratify", no_stratify, "plain random split");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--threads", threads, "worker threads");
    app.add_flag("--strict", strict, "abort on the first malformed line");
    app.add_option("--min-listens", min_listens, "train: popularity floor");
    app.add_option("--top-n", top_n, "score: keep the first N rows");
    app.add_option("--n-tracks", n_tracks, "synth: tracks");
    app.add_option("--n-users", n_users, "synth: users");
    app.add_option("--seasonal-fraction", seasonal_fraction, "synth: seasonal share");
    app.add_option("--alpha", alpha, "synth: popularity power-law exponent");
    app.add_option("--pop-min", pop_min, "synth: smallest popularity draw");
    app.add_option("--pop-max", pop_max, "synth: popularity cap (0 = none)");
    app.add_option("--rate-scale", rate_scale, "synth: listens/day per popularity unit");
    app.add_option("--peak-lo", peak_lo, "synth: lowest peak multiplier");
    app.add_option("--peak-hi", peak_hi, "synth: highest peak multiplier");
    app.add_option("--peak-width", peak_width, "synth: peak width in days");
    app.add_option("--keyword-recall", recall, "synth: share of seasonal names with the keyword");
    app.add_option("--start", start, "synth: first date");
    app.add_option("--end", end, "synth: last date");

    using Cmd = void (*)(const PipelineConfig&, std::ostream&);
    const std::vector<std::tuple<const char*, const char*, Cmd>> commands{
        {"synth", "generate a synthetic corpus", cmd_synth},
        {"aggregate", "listens -> count-table snapshot + stats", cmd_aggregate},
        {"label", "metadata -> keyword labels", cmd_label},
        {"features", "counts + labels -> rate vectors", cmd_features},
        {"train", "fit the seasonal mixture at one threshold", cmd_train},
        {"score", "rank tracks under a model", cmd_score},
        {"evaluate", "threshold sweep over counts + labels", cmd_evaluate},
        {"pipeline", "aggregate, label and evaluate in one go", cmd_pipeline},
    };
    for (const auto& [name, help, fn] : commands) {
        app.add_subcommand(name, help);
    }

    std::vector<std::string> argv_store{"seasonal"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) {
        argv.push_back(a.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) {
            cfg = PipelineConfig::from_json(read_text(config_path, "config"));
        }
        const auto given = [&](const char* flag) { return app.count(flag) > 0; };
        if (given("--listens")) cfg.listens = listens;
        if (given("--metadata")) cfg.metadata = metadata;
        if (given("--truth")) cfg.truth = truth;
        if (given("--counts")) cfg.counts = counts;
        if (given("--labels")) cfg.labels = labels;
        if (given("--features")) cfg.features = features;
        if (given("--model")) cfg.model = model;
        if (given("--out")) cfg.output_dir = out_dir;
        if (given("--anchor")) cfg.window.anchor = parse_month_day_or_throw(anchor);
        if (given("--span")) cfg.window.span = span;
        if (given("--years")) cfg.window.years = parse_int_list(years);
        if (given("--keyword")) cfg.keyword = keyword;
        if (given("--thresholds")) cfg.thresholds = parse_u64_list(thresholds);
        if (given("--components")) cfg.gmm.components = components;
        if (given("--sweep-components")) cfg.component_sweep = parse_int_list(sweep);
        if (given("--max-iters")) cfg.gmm.max_iters = max_iters;
        if (given("--rel-tol")) cfg.gmm.rel_tol = rel_tol;
        if (given("--ridge")) cfg.gmm.cov_ridge = ridge;
        if (given("--init")) cfg.gmm.init = parse_init_method(init);
        if (given("--train-frac")) cfg.split.train_fraction = train_frac;
        if (no_stratify) cfg.split.stratified = false;
        if (given("--seed")) cfg.master_seed = seed;
        if (given("--threads")) cfg.threads = threads;
        if (strict) cfg.strict = true;
        if (given("--min-listens")) cfg.min_listens = min_listens;
        if (given("--top-n")) cfg.top_n = top_n;
        if (given("--n-tracks")) cfg.synth.n_tracks = n_tracks;
        if (given("--n-users")) cfg.synth.n_users = n_users;
        if (given("--seasonal-fraction")) cfg.synth.seasonal_fraction = seasonal_fraction;
        if (given("--alpha")) cfg.synth.popularity_alpha = alpha;
        if (given("--pop-min")) cfg.synth.popularity_min = pop_min;
        if (given("--pop-max")) cfg.synth.popularity_max = pop_max;
        if (given("--rate-scale")) cfg.synth.base_rate_scale = rate_scale;
        if (given("--peak-lo")) cfg.synth.peak_multiplier_lo = peak_lo;
        if (given("--peak-hi")) cfg.synth.peak_multiplier_hi = peak_hi;
        if (given("--peak-width")) cfg.synth.peak_width_days = peak_width;
        if (given("--keyword-recall")) cfg.synth.keyword_recall = recall;
        if (given("--start")) cfg.synth.date_start = parse_date_or_throw(start);
        if (given("--end")) cfg.synth.date_end = parse_date_or_throw(end);
        cfg.derive_seeds();
        cfg.validate();

        for (const auto& [name, help, fn] : commands) {
            if (app.got_subcommand(name)) {
                fn(cfg, out);
            }
        }
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        switch (ex.code()) {
        case ErrorCode::Io:
        case ErrorCode::InvalidModel:
            return 2;
        case ErrorCode::MalformedLine:
        case ErrorCode::BadTimestamp:
        case ErrorCode::EmptyField:
            return 3;
        default:
            return 1;
        }
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace seasonal
