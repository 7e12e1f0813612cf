// nu-one-class SVM with an RBF kernel.
//
// Solves the dual
//     min_a  1/2 sum_ij a_i a_j K(x_i, x_j)
//     s.t.   0 <= a_i <= 1/(nu n),  sum_i a_i = 1
// with two-coordinate (SMO) descent, picking the maximally KKT-violating
// pair each step. The decision function is
//     f(x) = sum_i a_i K(sv_i, x) - rho,   K(u, v) = exp(-gamma |u - v|^2)
// evaluated on z-scored features; f(x) < 0 marks an outlier.

#pragma once

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace shso {

using Sample = std::vector<double>;

struct SvmParams {
    double nu = 0.05;
    std::optional<double> gamma; // defaults to 1 / dimension
    double tol = 1e-4; // bound on the KKT residual of the returned model
    std::size_t max_iterations = 100'000;
};

/// Per-dimension z-scoring; constant dimensions keep a unit scale.
struct Scaling {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Scaling fit(std::span<const Sample> samples);
    Sample apply(std::span<const double> raw) const;
};

struct SvmModel {
    double nu = 0.0;
    double gamma = 0.0;
    double rho = 0.0;
    Scaling scaling;
    std::vector<Sample> support_vectors; // scaled
    std::vector<double> alphas;

    /// sum_i a_i K(sv_i, z) for an already scaled point.
    double kernel_sum(std::span<const double> scaled) const;
    double decision(std::span<const double> raw) const;

    nlohmann::json to_json() const;
    static SvmModel from_json(const nlohmann::json& doc);
};

struct FitDiagnostics {
    std::size_t iterations = 0;
    double pair_violation = 0.0; // max_j G_j - min_i G_i over the working sets
    double kkt_violation = 0.0;  // worst KKT residual of the final (alpha, rho)
    bool converged = false;
    std::size_t free_support_vectors = 0;
    std::size_t bounded_support_vectors = 0;
};

struct TrainedSvm {
    SvmModel model;
    std::vector<double> alpha;           // one per training sample
    std::vector<double> training_scores; // f(x_i)
    FitDiagnostics diagnostics;
};

class SvmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateData : public SvmError {
public:
    using SvmError::SvmError;
};

class NonConvergence : public SvmError {
public:
    NonConvergence(const std::string& what, FitDiagnostics diagnostics)
        : SvmError(what), diagnostics(diagnostics)
    {
    }
    FitDiagnostics diagnostics;
};

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma);

/// Throws DegenerateData when n < 2 or n * nu < 1, NonConvergence when the
/// iteration cap is hit before the pair violation drops to tol / 10.
TrainedSvm fit(std::span<const Sample> samples, const SvmParams& params);

struct Prediction {
    double score = 0.0;
    bool is_outlier = false;
};

Prediction predict(const SvmModel& model, std::span<const double> raw);

struct CrossValidation {
    std::vector<double> fold_accuracy;
    double mean = 0.0;
};

/// k-fold CV on positive-only data: accuracy is the fraction of held-out
/// samples predicted as inliers. Folds come from a seeded shuffle.
CrossValidation cross_validate(std::span<const Sample> samples, const SvmParams& params, std::size_t folds,
                               std::uint64_t seed);

/// Deterministic Fisher-Yates permutation of 0..n-1 driven by mt19937_64.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

} // namespace shso
