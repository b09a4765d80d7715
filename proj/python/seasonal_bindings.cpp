#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seasonal/error.hpp"
#include "seasonal/eval.hpp"
#include "seasonal/features.hpp"
#include "seasonal/gmm.hpp"
#include "seasonal/ingest.hpp"
#include "seasonal/labeling.hpp"
#include "seasonal/pipeline.hpp"
#include "seasonal/window.hpp"

#include <sstream>

namespace py = pybind11;
using namespace seasonal;

namespace {

WindowSpec make_window(const std::string& anchor, int span, const std::vector<int>& years) {
    auto md = parse_month_day(anchor);
    if (!md) {
        throw Error(ErrorCode::InvalidAnchor, "bad anchor '" + anchor + "'");
    }
    WindowSpec w{*md, span, years};
    w.validate();
    return w;
}

std::vector<ScoredLabel> zip_scores(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) {
        throw Error(ErrorCode::DimensionMismatch, "scores and labels differ in length");
    }
    std::vector<ScoredLabel> out;
    out.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out.push_back({scores[i], labels[i]});
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Seasonal track discovery: listen-rate features, GMM scoring and ROC evaluation";

    static py::exception<Error> error_type(m, "SeasonalError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error& e) {
            PyErr_SetString(error_type.ptr(), (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def(
        "parse_record",
        [](const std::string& line) {
            const auto r = parse_record(line);
            return py::make_tuple(r.user_id, format_timestamp(r.timestamp), r.track_id);
        },
        py::arg("line"), "Parse one TSV listen line into (user_id, timestamp, track_id).");

    m.def(
        "window_days",
        [](const std::string& anchor, int span, int year) {
            std::vector<std::string> out;
            for (const auto& d : window_days(make_window(anchor, span, {year}), year)) {
                out.push_back(format_date(d));
            }
            return out;
        },
        py::arg("anchor"), py::arg("span"), py::arg("year"));

    m.def(
        "compute_rates",
        [](const std::vector<std::uint64_t>& counts) { return compute_rates(counts); },
        py::arg("day_counts"), "Normalised listen rates, or None when the window is empty.");

    m.def("normalize_text", [](const std::string& s) { return normalize_text(s); }, py::arg("text"));
    m.def(
        "label_track",
        [](const std::string& track, const std::string& album, const std::string& keyword) {
            return label_track(TrackMetadata{"", track, album}, keyword);
        },
        py::arg("track_name"), py::arg("album_name"), py::arg("keyword"));

    m.def(
        "aggregate_lines",
        [](const std::vector<std::string>& lines, const std::string& anchor, int span,
           const std::vector<int>& years, bool strict) {
            Aggregator agg(make_window(anchor, span, years), strict ? ParseMode::Strict : ParseMode::SkipMalformed);
            for (const auto& line : lines) {
                agg.add_line(line);
            }
            py::dict rows;
            for (const auto& [id, counts] : agg.table().rows()) {
                rows[py::str(id)] = py::make_tuple(counts.total_listens, counts.day_counts);
            }
            const auto stats = agg.stats();
            py::dict s;
            s["record_count"] = stats.record_count;
            s["distinct_users"] = stats.distinct_users;
            s["distinct_tracks"] = stats.distinct_tracks;
            s["malformed_lines"] = stats.malformed_lines;
            return py::make_tuple(rows, s);
        },
        py::arg("lines"), py::arg("anchor") = "12-25", py::arg("span") = 15,
        py::arg("years") = std::vector<int>{2012}, py::arg("strict") = false);

    m.def("log_sum_exp", [](const std::vector<double>& v) { return log_sum_exp(v); }, py::arg("values"));
    m.def("log_gaussian", &log_gaussian, py::arg("x"), py::arg("mean"), py::arg("cov_chol"));

    py::enum_<InitMethod>(m, "InitMethod")
        .value("KMeansPlusPlus", InitMethod::KMeansPlusPlus)
        .value("RandomPoints", InitMethod::RandomPoints);

    py::class_<GmmConfig>(m, "GmmConfig")
        .def(py::init<>())
        .def_readwrite("components", &GmmConfig::components)
        .def_readwrite("max_iters", &GmmConfig::max_iters)
        .def_readwrite("rel_tol", &GmmConfig::rel_tol)
        .def_readwrite("cov_ridge", &GmmConfig::cov_ridge)
        .def_readwrite("seed", &GmmConfig::seed)
        .def_readwrite("init", &GmmConfig::init);

    py::class_<GmmModel>(m, "GmmModel")
        .def_readonly("dim", &GmmModel::dim)
        .def_readonly("weights", &GmmModel::weights)
        .def_readonly("means", &GmmModel::means)
        .def_readonly("cov_chol", &GmmModel::cov_chol)
        .def_readonly("config", &GmmModel::config)
        .def_readonly("train_loglik", &GmmModel::train_loglik)
        .def_readonly("loglik_trace", &GmmModel::loglik_trace)
        .def_readonly("iterations", &GmmModel::iterations)
        .def_readonly("converged", &GmmModel::converged)
        .def_readonly("degenerate", &GmmModel::degenerate)
        .def(
            "score",
            [](const GmmModel& self, const std::optional<std::vector<double>>& x) { return score(self, x); },
            py::arg("x"), "Log-likelihood of a rate vector; -inf for None.")
        .def("to_json", [](const GmmModel& self) { return model_to_json(self); })
        .def_static("from_json", [](const std::string& text) { return model_from_json(text); });

    m.def(
        "fit",
        [](const std::vector<std::vector<double>>& data, const GmmConfig& cfg, int threads) {
            py::gil_scoped_release release;
            return fit(data, cfg, threads);
        },
        py::arg("data"), py::arg("config") = GmmConfig{}, py::arg("threads") = 1);

    m.def(
        "auc_from_scores",
        [](const std::vector<double>& scores, const std::vector<bool>& labels) {
            return auc_from_scores(zip_scores(scores, labels));
        },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "roc_curve",
        [](const std::vector<double>& scores, const std::vector<bool>& labels) {
            const auto roc = roc_curve(zip_scores(scores, labels));
            std::vector<double> fpr, tpr, thr;
            for (const auto& p : roc.points) {
                fpr.push_back(p.fpr);
                tpr.push_back(p.tpr);
                thr.push_back(p.threshold);
            }
            return py::make_tuple(fpr, tpr, thr, roc.auc);
        },
        py::arg("scores"), py::arg("labels"), "Returns (fpr, tpr, thresholds, auc).");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a CLI command; returns (exit_code, stdout, stderr).");
}
