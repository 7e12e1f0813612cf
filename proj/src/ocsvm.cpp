#include "shso/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

namespace shso {

namespace {

// SMO stops once the pair violation is a tenth of tol. Stopping at tol
// itself bounds the KKT residual but leaves decision values up to about
// tol away from the exact optimum; the extra margin keeps them close.
constexpr double kStopFraction = 0.1;

constexpr std::size_t kFullMatrixLimit = 4096;
constexpr std::size_t kColumnCacheSize = 512;

/// Kernel columns: the whole Gram matrix for small problems, a FIFO cache
/// of columns otherwise.
class KernelColumns {
public:
    KernelColumns(const std::vector<Sample>& z, double gamma) : z_(z), gamma_(gamma)
    {
        const std::size_t n = z.size();
        if (n <= kFullMatrixLimit) {
            full_.resize(n * n);
            for (std::size_t i = 0; i < n; ++i) {
                full_[i * n + i] = 1.0;
                for (std::size_t j = 0; j < i; ++j)
                    full_[i * n + j] = full_[j * n + i] = rbf_kernel(z[i], z[j], gamma);
            }
        }
    }

    std::span<const double> column(std::size_t i)
    {
        const std::size_t n = z_.size();
        if (!full_.empty())
            return std::span<const double>(full_).subspan(i * n, n);
        if (auto it = cache_.find(i); it != cache_.end())
            return it->second;
        if (order_.size() >= kColumnCacheSize) {
            cache_.erase(order_.front());
            order_.erase(order_.begin());
        }
        std::vector<double> col(n);
        for (std::size_t j = 0; j < n; ++j)
            col[j] = rbf_kernel(z_[i], z_[j], gamma_);
        order_.push_back(i);
        return cache_.emplace(i, std::move(col)).first->second;
    }

private:
    const std::vector<Sample>& z_;
    double gamma_;
    std::vector<double> full_;
    std::unordered_map<std::size_t, std::vector<double>> cache_;
    std::vector<std::size_t> order_;
};

} // namespace

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma)
{
    double d2 = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double d = u[k] - v[k];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

Scaling Scaling::fit(std::span<const Sample> samples)
{
    Scaling s;
    const std::size_t dim = samples.empty() ? 0 : samples.front().size();
    const double n = static_cast<double>(samples.size());
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 0.0);
    for (const auto& x : samples)
        for (std::size_t k = 0; k < dim; ++k)
            s.mean[k] += x[k];
    for (auto& m : s.mean)
        m /= n;
    for (const auto& x : samples)
        for (std::size_t k = 0; k < dim; ++k)
            s.stddev[k] += (x[k] - s.mean[k]) * (x[k] - s.mean[k]);
    for (auto& sd : s.stddev) {
        sd = std::sqrt(sd / n);
        if (!(sd > 1e-12))
            sd = 1.0;
    }
    return s;
}

Sample Scaling::apply(std::span<const double> raw) const
{
    Sample z(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k)
        z[k] = (raw[k] - mean[k]) / stddev[k];
    return z;
}

double SvmModel::kernel_sum(std::span<const double> scaled) const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
        sum += alphas[i] * rbf_kernel(support_vectors[i], scaled, gamma);
    return sum;
}

double SvmModel::decision(std::span<const double> raw) const
{
    return kernel_sum(scaling.apply(raw)) - rho;
}

nlohmann::json SvmModel::to_json() const
{
    nlohmann::json doc;
    doc["nu"] = nu;
    doc["gamma"] = gamma;
    doc["rho"] = rho;
    doc["scaling"] = {{"mean", scaling.mean}, {"std", scaling.stddev}};
    doc["svs"] = support_vectors;
    doc["alphas"] = alphas;
    return doc;
}

SvmModel SvmModel::from_json(const nlohmann::json& doc)
{
    SvmModel m;
    try {
        m.nu = doc.at("nu").get<double>();
        m.gamma = doc.at("gamma").get<double>();
        m.rho = doc.at("rho").get<double>();
        m.scaling.mean = doc.at("scaling").at("mean").get<std::vector<double>>();
        m.scaling.stddev = doc.at("scaling").at("std").get<std::vector<double>>();
        m.support_vectors = doc.at("svs").get<std::vector<Sample>>();
        m.alphas = doc.at("alphas").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw SvmError(std::string("malformed model: ") + e.what());
    }
    if (m.alphas.size() != m.support_vectors.size() || m.scaling.mean.size() != m.scaling.stddev.size())
        throw SvmError("malformed model: inconsistent array sizes");
    for (const auto& sv : m.support_vectors)
        if (sv.size() != m.scaling.mean.size())
            throw SvmError("malformed model: support vector dimension mismatch");
    return m;
}

TrainedSvm fit(std::span<const Sample> samples, const SvmParams& params)
{
    const std::size_t n = samples.size();
    if (n < 2)
        throw DegenerateData("need at least two training vectors");
    if (!(params.nu > 0.0 && params.nu <= 1.0))
        throw std::invalid_argument("nu must lie in (0, 1]");
    if (static_cast<double>(n) * params.nu < 1.0)
        throw DegenerateData("n * nu < 1: the box constraint admits no feasible point");
    const std::size_t dim = samples.front().size();
    for (const auto& x : samples)
        if (x.size() != dim)
            throw std::invalid_argument("training vectors differ in dimension");
    const double gamma = params.gamma.value_or(1.0 / static_cast<double>(std::max<std::size_t>(dim, 1)));
    if (!(gamma > 0.0))
        throw std::invalid_argument("gamma must be positive");

    TrainedSvm out;
    SvmModel& model = out.model;
    model.nu = params.nu;
    model.gamma = gamma;
    model.scaling = Scaling::fit(samples);
    std::vector<Sample> z;
    z.reserve(n);
    for (const auto& x : samples)
        z.push_back(model.scaling.apply(x));

    const double cap = 1.0 / (params.nu * static_cast<double>(n));
    std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
    KernelColumns kernel(z, gamma);

    // Gradient of the dual objective: G = K alpha.
    std::vector<double> grad(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const auto col = kernel.column(j);
        for (std::size_t i = 0; i < n; ++i)
            grad[i] += alpha[j] * col[i];
    }

    FitDiagnostics& diag = out.diagnostics;
    for (;;) {
        // i: may grow (alpha < cap), smallest gradient; j: may shrink, largest.
        std::size_t up = n, low = n;
        double g_up = std::numeric_limits<double>::infinity();
        double g_low = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            if (alpha[k] < cap && grad[k] < g_up) {
                g_up = grad[k];
                up = k;
            }
            if (alpha[k] > 0.0 && grad[k] > g_low) {
                g_low = grad[k];
                low = k;
            }
        }
        diag.pair_violation = (up == n || low == n) ? 0.0 : std::max(0.0, g_low - g_up);
        if (diag.pair_violation <= kStopFraction * params.tol) {
            diag.converged = true;
            break;
        }
        if (diag.iterations >= params.max_iterations)
            break;
        ++diag.iterations;

        // Copy one column: fetching the second may evict the first from the cache.
        const auto up_span = kernel.column(up);
        const std::vector<double> col_up(up_span.begin(), up_span.end());
        const auto col_low = kernel.column(low);
        const double curvature = std::max(col_up[up] + col_low[low] - 2.0 * col_up[low], 1e-12);
        const double room_up = cap - alpha[up];
        const double room_low = alpha[low];
        double delta = (g_low - g_up) / curvature;
        if (delta >= room_up || delta >= room_low)
            delta = std::min(room_up, room_low);
        alpha[up] = delta == room_up ? cap : alpha[up] + delta;
        alpha[low] = delta == room_low ? 0.0 : alpha[low] - delta;
        for (std::size_t k = 0; k < n; ++k)
            grad[k] += delta * (col_up[k] - col_low[k]);
    }

    if (!diag.converged)
        throw NonConvergence("one-class SVM did not converge within " + std::to_string(params.max_iterations) +
                                 " iterations",
                             diag);

    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] <= 0.0)
            continue;
        model.support_vectors.push_back(z[i]);
        model.alphas.push_back(alpha[i]);
    }

    // Recompute the kernel sums exactly as predict() does, then place rho.
    // With free support vectors, rho is the smallest of their sums so every
    // margin vector, and every duplicate of one, scores >= 0; otherwise it
    // splits the KKT interval.
    std::vector<double> sums(n);
    for (std::size_t i = 0; i < n; ++i)
        sums[i] = model.kernel_sum(z[i]);
    double free_min = std::numeric_limits<double>::infinity();
    double bounded_max = -std::numeric_limits<double>::infinity();
    double zero_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0 && alpha[i] < cap) {
            free_min = std::min(free_min, sums[i]);
            ++diag.free_support_vectors;
        } else if (alpha[i] >= cap) {
            bounded_max = std::max(bounded_max, sums[i]);
            ++diag.bounded_support_vectors;
        } else {
            zero_min = std::min(zero_min, sums[i]);
        }
    }
    if (diag.free_support_vectors > 0)
        model.rho = free_min;
    else if (std::isfinite(bounded_max) && std::isfinite(zero_min))
        model.rho = 0.5 * (bounded_max + zero_min);
    else
        model.rho = std::isfinite(bounded_max) ? bounded_max : zero_min;

    out.training_scores.resize(n);
    diag.kkt_violation = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = sums[i] - model.rho;
        out.training_scores[i] = f;
        double r = 0.0;
        if (alpha[i] <= 0.0)
            r = std::max(0.0, -f);
        else if (alpha[i] >= cap)
            r = std::max(0.0, f);
        else
            r = std::abs(f);
        diag.kkt_violation = std::max(diag.kkt_violation, r);
    }
    out.alpha = std::move(alpha);
    return out;
}

Prediction predict(const SvmModel& model, std::span<const double> raw)
{
    Prediction p;
    p.score = model.decision(raw);
    p.is_outlier = p.score < 0.0;
    return p;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

CrossValidation cross_validate(std::span<const Sample> samples, const SvmParams& params, std::size_t folds,
                               std::uint64_t seed)
{
    const std::size_t n = samples.size();
    if (folds < 2)
        throw std::invalid_argument("cross-validation needs at least two folds");
    if (n < folds)
        throw std::invalid_argument("cross-validation needs at least as many samples as folds");
    const auto perm = seeded_permutation(n, seed);
    CrossValidation cv;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t begin = f * n / folds;
        const std::size_t end = (f + 1) * n / folds;
        std::vector<Sample> train;
        train.reserve(n - (end - begin));
        for (std::size_t k = 0; k < n; ++k)
            if (k < begin || k >= end)
                train.push_back(samples[perm[k]]);
        const TrainedSvm trained = fit(train, params);
        std::size_t inliers = 0;
        for (std::size_t k = begin; k < end; ++k)
            inliers += predict(trained.model, samples[perm[k]]).is_outlier ? 0 : 1;
        cv.fold_accuracy.push_back(static_cast<double>(inliers) / static_cast<double>(end - begin));
    }
    cv.mean = std::accumulate(cv.fold_accuracy.begin(), cv.fold_accuracy.end(), 0.0) /
              static_cast<double>(cv.fold_accuracy.size());
    return cv;
}

} // namespace shso
