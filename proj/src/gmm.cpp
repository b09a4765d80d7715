#include "seasonal/gmm.hpp"

#include "seasonal/error.hpp"
#include "seasonal/random.hpp"

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace seasonal {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kChunk = 256;
constexpr double kEmptyWeight = 1e-10;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

/// Runs fn(chunk) for every chunk. Each chunk owns its output slot, so the
/// thread count never changes results.
template <typename Fn>
void for_each_chunk(std::size_t n_chunks, int threads, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n_chunks < 2) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            fn(c);
        }
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t used = std::min(workers, n_chunks);
    pool.reserve(used);
    for (std::size_t t = 0; t < used; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t c = t; c < n_chunks; c += used) {
                fn(c);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

MatrixXd cholesky_or_throw(const MatrixXd& cov) {
    Eigen::LLT<MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        fail(ErrorCode::NonPositiveDiagonal, "covariance is not positive definite after ridging");
    }
    MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) {
            fail(ErrorCode::NonPositiveDiagonal, "Cholesky factor has a non-positive diagonal");
        }
    }
    return l;
}

/// Per-component constants reused across every point of an E-step.
struct ComponentCache {
    double log_norm; // log w - d/2 log 2pi - sum log L_ii
};

std::vector<ComponentCache> component_cache(const GmmModel& m) {
    std::vector<ComponentCache> cache;
    cache.reserve(m.weights.size());
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
        double log_det_half = 0.0;
        for (Eigen::Index i = 0; i < m.dim; ++i) {
            log_det_half += std::log(m.cov_chol[k](i, i));
        }
        cache.push_back({std::log(m.weights[k]) - 0.5 * m.dim * kLog2Pi - log_det_half});
    }
    return cache;
}

double component_log_density(const GmmModel& m, const std::vector<ComponentCache>& cache,
                             std::size_t k, const Eigen::Ref<const VectorXd>& x) {
    VectorXd z = m.cov_chol[k].triangularView<Eigen::Lower>().solve(x - m.means[k]);
    return cache[k].log_norm - 0.5 * z.squaredNorm();
}

struct EStepResult {
    double mean_loglik;
    std::vector<double> point_loglik;
};

/// Fills `resp` (n x K) and returns per-point and mean log-likelihoods.
EStepResult e_step(const GmmModel& m, const MatrixXd& x, MatrixXd& resp, int threads) {
    const auto n = static_cast<std::size_t>(x.cols());
    const auto k_count = m.weights.size();
    const auto cache = component_cache(m);
    const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> point_ll(n);
    std::vector<double> chunk_ll(n_chunks, 0.0);
    resp.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k_count));
    for_each_chunk(n_chunks, threads, [&](std::size_t c) {
        std::vector<double> logp(k_count);
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        double acc = 0.0;
        for (std::size_t i = c * kChunk; i < end; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            for (std::size_t k = 0; k < k_count; ++k) {
                logp[k] = component_log_density(m, cache, k, x.col(col));
            }
            const double lse = log_sum_exp(logp);
            for (std::size_t k = 0; k < k_count; ++k) {
                resp(col, static_cast<Eigen::Index>(k)) = std::exp(logp[k] - lse);
            }
            point_ll[i] = lse;
            acc += lse;
        }
        chunk_ll[c] = acc;
    });
    double total = 0.0;
    for (double v : chunk_ll) {
        total += v;
    }
    return {total / static_cast<double>(n), std::move(point_ll)};
}

/// Standard M-step with the ridge added to each covariance diagonal.
/// Components with zero responsibility mass keep their previous parameters.
void m_step(GmmModel& m, const MatrixXd& x, const MatrixXd& resp, double ridge, int threads) {
    const auto n = static_cast<std::size_t>(x.cols());
    const auto d = x.rows();
    const auto k_count = static_cast<Eigen::Index>(m.weights.size());
    const std::size_t n_chunks = (n + kChunk - 1) / kChunk;

    std::vector<VectorXd> part_mass(n_chunks, VectorXd::Zero(k_count));
    std::vector<MatrixXd> part_sum(n_chunks, MatrixXd::Zero(d, k_count));
    for_each_chunk(n_chunks, threads, [&](std::size_t c) {
        const auto begin = static_cast<Eigen::Index>(c * kChunk);
        const auto len = static_cast<Eigen::Index>(std::min(n, (c + 1) * kChunk)) - begin;
        const auto r = resp.middleRows(begin, len);
        part_mass[c] = r.colwise().sum().transpose();
        part_sum[c] = x.middleCols(begin, len) * r;
    });
    VectorXd mass = VectorXd::Zero(k_count);
    MatrixXd sums = MatrixXd::Zero(d, k_count);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        mass += part_mass[c];
        sums += part_sum[c];
    }

    std::vector<VectorXd> means(static_cast<std::size_t>(k_count));
    for (Eigen::Index k = 0; k < k_count; ++k) {
        means[static_cast<std::size_t>(k)] =
            mass(k) > 0.0 ? VectorXd(sums.col(k) / mass(k)) : m.means[static_cast<std::size_t>(k)];
    }

    std::vector<std::vector<MatrixXd>> part_scatter(
        n_chunks, std::vector<MatrixXd>(static_cast<std::size_t>(k_count)));
    for_each_chunk(n_chunks, threads, [&](std::size_t c) {
        const auto begin = static_cast<Eigen::Index>(c * kChunk);
        const auto len = static_cast<Eigen::Index>(std::min(n, (c + 1) * kChunk)) - begin;
        for (Eigen::Index k = 0; k < k_count; ++k) {
            MatrixXd centered = x.middleCols(begin, len).colwise() - means[static_cast<std::size_t>(k)];
            const VectorXd sw = resp.col(k).segment(begin, len).cwiseSqrt();
            centered *= sw.asDiagonal();
            part_scatter[c][static_cast<std::size_t>(k)] = centered * centered.transpose();
        }
    });

    for (Eigen::Index k = 0; k < k_count; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        m.weights[ks] = mass(k) / static_cast<double>(n);
        if (!(mass(k) > 0.0)) {
            continue;
        }
        MatrixXd scatter = MatrixXd::Zero(d, d);
        for (std::size_t c = 0; c < n_chunks; ++c) {
            scatter += part_scatter[c][ks];
        }
        MatrixXd cov = scatter / mass(k);
        cov = 0.5 * (cov + cov.transpose());
        cov.diagonal().array() += ridge;
        m.means[ks] = means[ks];
        m.cov_chol[ks] = cholesky_or_throw(cov);
    }
}

MatrixXd global_covariance(const MatrixXd& x, double ridge) {
    const VectorXd mu = x.rowwise().mean();
    const MatrixXd centered = x.colwise() - mu;
    MatrixXd cov = centered * centered.transpose() / static_cast<double>(x.cols());
    cov.diagonal().array() += ridge;
    return cov;
}

std::vector<std::size_t> init_centers(const MatrixXd& x, const GmmConfig& cfg, std::mt19937_64& rng) {
    const auto n = static_cast<std::size_t>(x.cols());
    const auto k_count = static_cast<std::size_t>(cfg.components);
    std::vector<std::size_t> centers;
    const auto pick = [&](std::size_t bound) {
        return std::min(bound - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(bound)));
    };
    if (cfg.init == InitMethod::RandomPoints) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) {
            idx[i] = i;
        }
        for (std::size_t i = 0; i < k_count; ++i) {
            std::swap(idx[i], idx[i + pick(n - i)]);
            centers.push_back(idx[i]);
        }
        return centers;
    }
    centers.push_back(pick(n));
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k_count) {
        const auto last = static_cast<Eigen::Index>(centers.back());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dd = (x.col(static_cast<Eigen::Index>(i)) - x.col(last)).squaredNorm();
            dist2[i] = std::min(dist2[i], dd);
            total += dist2[i];
        }
        if (!(total > 0.0)) {
            centers.push_back(pick(n));
            continue;
        }
        const double target = uniform01(rng) * total;
        double acc = 0.0;
        std::size_t chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += dist2[i];
            if (acc > target && dist2[i] > 0.0) {
                chosen = i;
                break;
            }
        }
        centers.push_back(chosen);
    }
    return centers;
}

void drop_component(GmmModel& m, std::size_t k) {
    m.weights.erase(m.weights.begin() + static_cast<std::ptrdiff_t>(k));
    m.means.erase(m.means.begin() + static_cast<std::ptrdiff_t>(k));
    m.cov_chol.erase(m.cov_chol.begin() + static_cast<std::ptrdiff_t>(k));
}

void normalize_weights(GmmModel& m) {
    double total = 0.0;
    for (double w : m.weights) {
        total += w;
    }
    for (double& w : m.weights) {
        w /= total;
    }
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string to_string(InitMethod m) {
    return m == InitMethod::KMeansPlusPlus ? "kmeans_pp" : "random_points";
}

InitMethod parse_init_method(const std::string& s) {
    if (s == "kmeans_pp") {
        return InitMethod::KMeansPlusPlus;
    }
    if (s == "random_points") {
        return InitMethod::RandomPoints;
    }
    fail(ErrorCode::InvalidConfig, "unknown init method '" + s + "'");
}

void GmmConfig::validate() const {
    if (components < 1 || max_iters < 1 || !(rel_tol > 0.0) || !(cov_ridge > 0.0)) {
        fail(ErrorCode::InvalidConfig,
             "gmm config needs components >= 1, max_iters >= 1, rel_tol > 0, cov_ridge > 0");
    }
}

double log_sum_exp(std::span<const double> values) {
    if (values.empty()) {
        fail(ErrorCode::EmptyInput, "log_sum_exp of an empty array");
    }
    const double hi = *std::max_element(values.begin(), values.end());
    if (hi == kNegInf) {
        return kNegInf;
    }
    if (std::isinf(hi)) {
        return hi;
    }
    double acc = 0.0;
    for (double v : values) {
        acc += std::exp(v - hi);
    }
    return hi + std::log(acc);
}

double log_gaussian(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov_chol) {
    const auto d = x.size();
    if (mean.size() != d || cov_chol.rows() != d || cov_chol.cols() != d) {
        fail(ErrorCode::DimensionMismatch, "log_gaussian dimension mismatch");
    }
    double log_det_half = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(cov_chol(i, i) > 0.0)) {
            fail(ErrorCode::NonPositiveDiagonal, "Cholesky factor has a non-positive diagonal");
        }
        log_det_half += std::log(cov_chol(i, i));
    }
    const VectorXd z = cov_chol.triangularView<Eigen::Lower>().solve(x - mean);
    return -0.5 * (static_cast<double>(d) * kLog2Pi + 2.0 * log_det_half + z.squaredNorm());
}

GmmModel fit(std::span<const std::vector<double>> data, const GmmConfig& cfg, int threads) {
    cfg.validate();
    if (data.empty()) {
        fail(ErrorCode::TooFewPoints, "cannot fit a mixture to zero points");
    }
    const auto d = static_cast<Eigen::Index>(data.front().size());
    if (d == 0) {
        fail(ErrorCode::DimensionMismatch, "zero-dimensional data");
    }
    const auto n = static_cast<Eigen::Index>(data.size());
    if (static_cast<std::size_t>(cfg.components) > data.size()) {
        fail(ErrorCode::TooFewPoints, std::to_string(cfg.components) + " components need at least as many points, got " +
                                          std::to_string(data.size()));
    }
    MatrixXd x(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = data[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != d) {
            fail(ErrorCode::DimensionMismatch, "all points must share one dimension");
        }
        x.col(i) = Eigen::Map<const VectorXd>(row.data(), d);
    }

    GmmModel m;
    m.dim = static_cast<int>(d);
    m.config = cfg;

    bool identical = true;
    for (Eigen::Index i = 1; i < n && identical; ++i) {
        identical = x.col(i) == x.col(0);
    }
    if (identical && cfg.components > 1) {
        m.degenerate = true;
        m.weights = {1.0};
        m.means = {x.col(0)};
        MatrixXd cov = MatrixXd::Identity(d, d) * cfg.cov_ridge;
        m.cov_chol = {cholesky_or_throw(cov)};
        MatrixXd resp;
        m.train_loglik = e_step(m, x, resp, threads).mean_loglik;
        m.loglik_trace = {m.train_loglik};
        m.converged = true;
        return m;
    }

    std::mt19937_64 rng(cfg.seed);
    const MatrixXd global_chol = cholesky_or_throw(global_covariance(x, cfg.cov_ridge));
    for (std::size_t c : init_centers(x, cfg, rng)) {
        m.weights.push_back(1.0 / cfg.components);
        m.means.push_back(x.col(static_cast<Eigen::Index>(c)));
        m.cov_chol.push_back(global_chol);
    }

    std::vector<bool> reseeded(m.weights.size(), false);
    MatrixXd resp;
    EStepResult e = e_step(m, x, resp, threads);
    m.loglik_trace.push_back(e.mean_loglik);
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const GmmModel before = m;
        m_step(m, x, resp, cfg.cov_ridge, threads);

        for (std::size_t k = m.weights.size(); k-- > 0;) {
            if (m.weights[k] >= kEmptyWeight || m.weights.size() == 1) {
                continue;
            }
            if (!reseeded[k]) {
                // Keep the tiny weight so the likelihood is essentially
                // unchanged; the next E-step decides whether it revives.
                const auto worst = std::min_element(e.point_loglik.begin(), e.point_loglik.end()) -
                                   e.point_loglik.begin();
                m.means[k] = x.col(worst);
                m.cov_chol[k] = global_chol;
                m.weights[k] = std::max(m.weights[k], std::numeric_limits<double>::min());
                reseeded[k] = true;
                ++m.reseeded;
            } else {
                drop_component(m, k);
                reseeded.erase(reseeded.begin() + static_cast<std::ptrdiff_t>(k));
            }
        }
        normalize_weights(m);

        const double prev = e.mean_loglik;
        EStepResult next = e_step(m, x, resp, threads);
        if (next.mean_loglik < prev) {
            // The ridge makes the covariance update inexact, so a step can
            // lose likelihood near the optimum. Keep the better parameters.
            m = before;
            m.converged = true;
            break;
        }
        e = std::move(next);
        m.loglik_trace.push_back(e.mean_loglik);
        m.iterations = it;
        const double scale = std::max(std::abs(prev), std::numeric_limits<double>::min());
        if ((e.mean_loglik - prev) / scale < cfg.rel_tol) {
            m.converged = true;
            break;
        }
    }
    m.train_loglik = e.mean_loglik;
    return m;
}

double score(const GmmModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.dim) {
        fail(ErrorCode::DimensionMismatch, "score: vector of dimension " + std::to_string(x.size()) +
                                               " against model of dimension " + std::to_string(model.dim));
    }
    const Eigen::Map<const VectorXd> v(x.data(), model.dim);
    const auto cache = component_cache(model);
    std::vector<double> logp(model.weights.size());
    for (std::size_t k = 0; k < logp.size(); ++k) {
        logp[k] = component_log_density(model, cache, k, v);
    }
    return log_sum_exp(logp);
}

double score(const GmmModel& model, const std::optional<std::vector<double>>& x) {
    if (!x) {
        return kNegInf;
    }
    return score(model, std::span<const double>(*x));
}

std::string model_to_json(const GmmModel& model) {
    const auto& c = model.config;
    std::string out = "{\n";
    out += "  \"format_version\": 1,\n";
    out += "  \"dim\": " + std::to_string(model.dim) + ",\n";
    out += "  \"components\": " + std::to_string(model.components()) + ",\n";
    out += "  \"weights\": [";
    for (std::size_t k = 0; k < model.weights.size(); ++k) {
        out += (k ? ", " : "") + fmt17(model.weights[k]);
    }
    out += "],\n  \"means\": [";
    for (std::size_t k = 0; k < model.means.size(); ++k) {
        out += k ? ",\n    [" : "\n    [";
        for (Eigen::Index i = 0; i < model.dim; ++i) {
            out += (i ? ", " : "") + fmt17(model.means[k](i));
        }
        out += "]";
    }
    out += "\n  ],\n  \"cov_chol\": [";
    for (std::size_t k = 0; k < model.cov_chol.size(); ++k) {
        out += k ? ",\n    [" : "\n    [";
        for (Eigen::Index i = 0; i < model.dim; ++i) {
            out += i ? ", [" : "[";
            for (Eigen::Index j = 0; j <= i; ++j) {
                out += (j ? ", " : "") + fmt17(model.cov_chol[k](i, j));
            }
            out += "]";
        }
        out += "]";
    }
    out += "\n  ],\n";
    out += "  \"config\": {\"components\": " + std::to_string(c.components) +
           ", \"max_iters\": " + std::to_string(c.max_iters) + ", \"rel_tol\": " + fmt17(c.rel_tol) +
           ", \"cov_ridge\": " + fmt17(c.cov_ridge) + ", \"seed\": " + std::to_string(c.seed) +
           ", \"init\": \"" + to_string(c.init) + "\"},\n";
    out += "  \"train_loglik\": " + fmt17(model.train_loglik) + "\n}\n";
    return out;
}

GmmModel model_from_json(const std::string& text) {
    GmmModel m;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format_version").get<int>() != 1) {
            fail(ErrorCode::InvalidModel, "unsupported model format_version");
        }
        m.dim = j.at("dim").get<int>();
        const int k_count = j.at("components").get<int>();
        m.weights = j.at("weights").get<std::vector<double>>();
        const auto& means = j.at("means");
        const auto& chol = j.at("cov_chol");
        if (m.dim < 1 || k_count < 1 || static_cast<int>(m.weights.size()) != k_count ||
            static_cast<int>(means.size()) != k_count || static_cast<int>(chol.size()) != k_count) {
            fail(ErrorCode::InvalidModel, "model arrays disagree with dim/components");
        }
        for (int k = 0; k < k_count; ++k) {
            const auto mu = means[static_cast<std::size_t>(k)].get<std::vector<double>>();
            if (static_cast<int>(mu.size()) != m.dim) {
                fail(ErrorCode::InvalidModel, "mean has wrong dimension");
            }
            m.means.push_back(Eigen::Map<const VectorXd>(mu.data(), m.dim));
            MatrixXd l = MatrixXd::Zero(m.dim, m.dim);
            const auto& rows = chol[static_cast<std::size_t>(k)];
            if (static_cast<int>(rows.size()) != m.dim) {
                fail(ErrorCode::InvalidModel, "cov_chol has wrong row count");
            }
            for (int i = 0; i < m.dim; ++i) {
                const auto row = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
                if (static_cast<int>(row.size()) != i + 1) {
                    fail(ErrorCode::InvalidModel, "cov_chol row has wrong length");
                }
                for (int jj = 0; jj <= i; ++jj) {
                    l(i, jj) = row[static_cast<std::size_t>(jj)];
                }
                if (!(l(i, i) > 0.0)) {
                    fail(ErrorCode::InvalidModel, "cov_chol has a non-positive diagonal");
                }
            }
            m.cov_chol.push_back(std::move(l));
        }
        const auto& c = j.at("config");
        m.config.components = c.at("components").get<int>();
        m.config.max_iters = c.at("max_iters").get<int>();
        m.config.rel_tol = c.at("rel_tol").get<double>();
        m.config.cov_ridge = c.at("cov_ridge").get<double>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.init = parse_init_method(c.at("init").get<std::string>());
        m.train_loglik = j.at("train_loglik").get<double>();
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::InvalidModel, std::string("unreadable model: ") + ex.what());
    }
    return m;
}

} // namespace seasonal
