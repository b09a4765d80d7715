#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace seasonal {

enum class InitMethod { KMeansPlusPlus, RandomPoints };

std::string to_string(InitMethod m);
InitMethod parse_init_method(const std::string& s);

struct GmmConfig {
    int components = 4;
    int max_iters = 200;
    double rel_tol = 1e-6;   ///< on relative change of the mean log-likelihood
    double cov_ridge = 1e-6; ///< added to every covariance diagonal
    std::uint64_t seed = 0;
    InitMethod init = InitMethod::KMeansPlusPlus;

    void validate() const;

    friend bool operator==(const GmmConfig&, const GmmConfig&) = default;
};

/// Full-covariance Gaussian mixture. Covariances are held as lower Cholesky
/// factors with strictly positive diagonals.
struct GmmModel {
    int dim = 0;
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> cov_chol;
    GmmConfig config;
    double train_loglik = 0.0;

    // Fit diagnostics; not serialised.
    std::vector<double> loglik_trace;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false; ///< all points identical, collapsed to one component
    int reseeded = 0;

    int components() const { return static_cast<int>(weights.size()); }
};

/// log(sum(exp(values))) with max-shift; -inf when every value is -inf.
/// Throws EmptyInput.
double log_sum_exp(std::span<const double> values);

/// log N(x; mean, L L^T). Throws DimensionMismatch or NonPositiveDiagonal.
double log_gaussian(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                    const Eigen::MatrixXd& cov_chol);

/// EM fit. `threads` parallelises the E/M passes over fixed-size point chunks;
/// the reduction order is independent of the thread count, so results are
/// bit-identical for any value. A step that would lower the mean
/// log-likelihood is discarded and ends the fit.
GmmModel fit(std::span<const std::vector<double>> data, const GmmConfig& cfg, int threads = 1);

/// Log-likelihood under the mixture; -inf for an undefined rate vector.
double score(const GmmModel& model, const std::optional<std::vector<double>>& x);
double score(const GmmModel& model, std::span<const double> x);

std::string model_to_json(const GmmModel& model);
GmmModel model_from_json(const std::string& text);

} // namespace seasonal
