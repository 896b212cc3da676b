#pragma once

#include "csor/error.hpp"
#include "csor/norms.hpp"
#include "csor/sparse.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

// =============================================================================
// Constructive computation of sigma-suitable vectors (A w <= sigma w, w > 0).
//
// The driver runs the Jacobi iteration for (I - A/sigma) w = 1 in normalized
// form: z = A w, u = z/sigma + s 1, s <- s/|u|_inf, w <- u/|u|_inf, starting
// from w = 1, s = 1. The unnormalized iterate is w / s = sum_{i<=t} (A/sigma)^i 1.
// Every product also yields Collatz bounds min/max (Aw)_i/w_i on rho(A).
// =============================================================================

namespace csor {

enum class SuitableStatus { Suitable, SigmaBelowRho, Underflow, IterationLimit };

inline std::string_view to_string(SuitableStatus s) {
    switch (s) {
    case SuitableStatus::Suitable: return "Suitable";
    case SuitableStatus::SigmaBelowRho: return "SigmaBelowRho";
    case SuitableStatus::Underflow: return "Underflow";
    case SuitableStatus::IterationLimit: return "IterationLimit";
    }
    return "Unknown";
}

struct CollatzBounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct SuitableOptions {
    std::size_t max_iterations = 0; ///< 0 selects 10 n + 1000
    bool record_history = true;
    unsigned workers = 1; ///< threads used by each matrix-vector product
    /// Sees every normalized iterate w^(t) with its scale s^(t), t >= 1.
    std::function<void(std::size_t t, std::span<const double> w, double scale)> observer;
};

struct SuitableResult {
    SuitableStatus status = SuitableStatus::IterationLimit;
    double sigma = 0.0;
    std::optional<WeightVector> w; ///< present iff status == Suitable, max entry 1
    std::size_t iterations = 0;    ///< matrix-vector products performed
    double scale = 1.0;            ///< s^(t) at termination
    std::vector<CollatzBounds> collatz_history;

    bool ok() const noexcept { return status == SuitableStatus::Suitable; }
};

inline std::size_t default_suitable_iterations(Index n) { return 10 * n + 1000; }

namespace detail {

inline CollatzBounds ratio_range(std::span<const double> z, std::span<const double> w) {
    if (z.empty())
        return {0.0, 0.0};
    CollatzBounds b{std::numeric_limits<double>::infinity(), 0.0};
    for (Index i = 0; i < z.size(); ++i) {
        const double r = z[i] / w[i];
        b.lower = std::min(b.lower, r);
        b.upper = std::max(b.upper, r);
    }
    return b;
}

} // namespace detail

/// Collatz bracket lower <= rho(A) <= upper for any w > 0.
inline CollatzBounds collatz_bounds(const SparseMatrix& a, const WeightVector& w) {
    require_same_size(w.size(), a.size(), "collatz_bounds");
    const DenseVector z = matvec(a, w.values());
    return detail::ratio_range(z, w.values());
}

inline SuitableResult compute_suitable(const SparseMatrix& a, double sigma, const SuitableOptions& opts = {}) {
    const Index n = a.size();
    if (n == 0)
        throw DomainError("compute_suitable needs a nonempty matrix");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw DomainError("sigma must be finite and positive");

    const std::size_t limit = opts.max_iterations ? opts.max_iterations : default_suitable_iterations(n);
    SuitableResult res;
    res.sigma = sigma;

    DenseVector w(n, 1.0);
    DenseVector z(n);
    double s = 1.0;
    while (true) {
        if (res.iterations == limit) {
            res.status = SuitableStatus::IterationLimit;
            break;
        }
        matvec_into(a, w, z, opts.workers);
        ++res.iterations;

        const CollatzBounds bounds = detail::ratio_range(z, w);
        if (opts.record_history)
            res.collatz_history.push_back(bounds);

        if (detail::check_ratios(z, w, sigma).suitable) {
            WeightVector candidate(w);
            // Independent re-verification on a freshly computed product.
            if (check_suitable(a, candidate, sigma).suitable) {
                res.status = SuitableStatus::Suitable;
                res.w = std::move(candidate);
                break;
            }
        }
        if (bounds.lower > sigma) {
            res.status = SuitableStatus::SigmaBelowRho;
            break;
        }

        double norm = 0.0;
        for (Index i = 0; i < n; ++i) {
            z[i] = z[i] / sigma + s;
            norm = std::max(norm, z[i]);
        }
        s /= norm;
        for (Index i = 0; i < n; ++i)
            w[i] = z[i] / norm;
        if (opts.observer)
            opts.observer(res.iterations, w, s);
        if (s < std::numeric_limits<double>::min()) {
            res.status = SuitableStatus::Underflow;
            break;
        }
    }
    res.scale = s;
    return res;
}

/// Tightest Collatz bracket seen along the shifted power iteration
/// w <- (A + I) w / |(A + I) w|_inf started at w = 1. Both ends are always
/// valid bounds because every iterate stays strictly positive.
inline CollatzBounds spectral_radius_bracket(const SparseMatrix& a, std::size_t iterations) {
    if (iterations == 0)
        throw DomainError("spectral_radius_bracket needs at least one iteration");
    const Index n = a.size();
    if (n == 0)
        return {0.0, 0.0};

    DenseVector w(n, 1.0);
    DenseVector z(n);
    CollatzBounds best{0.0, std::numeric_limits<double>::infinity()};
    for (std::size_t k = 0; k < iterations; ++k) {
        matvec_into(a, w, z);
        const CollatzBounds b = detail::ratio_range(z, w);
        best.lower = std::max(best.lower, b.lower);
        best.upper = std::min(best.upper, b.upper);
        if (best.lower == best.upper)
            break;

        double norm = 0.0;
        for (Index i = 0; i < n; ++i) {
            z[i] += w[i];
            norm = std::max(norm, z[i]);
        }
        bool degenerate = false;
        for (Index i = 0; i < n; ++i) {
            w[i] = z[i] / norm;
            degenerate |= !(w[i] >= std::numeric_limits<double>::min());
        }
        if (degenerate)
            break;
    }
    return best;
}

} // namespace csor
