#pragma once

#include "csor/error.hpp"
#include "csor/norms.hpp"
#include "csor/sor.hpp"
#include "csor/sparse.hpp"
#include "csor/suitable.hpp"

#include <cmath>
#include <optional>
#include <string>

// =============================================================================
// Katz and PageRank drivers.
//
// The indices are row vectors, k* = v* (1 - alpha M)^-1, so every system is
// solved in transposed form with A = M^T and s = 1/alpha:
//
//   Katz:        (I/alpha - M^T) k = v / alpha
//   pseudorank:  (I/alpha - G^T) p = (1 - alpha) v / alpha
//
// A sigma-suitable vector for A certifies every alpha < 1/sigma at once.
// For strongly preferential PageRank (dangling distribution u = v) the rank
// is p / |p|_1.
// =============================================================================

namespace csor {

struct RankingOptions {
    double omega = 1.0;
    double target_error = 1e-10;
    std::size_t max_iterations = 1000000;
    bool use_quantized = false;
    Schedule schedule = Schedule::sequential();
};

struct RankingResult {
    DenseVector scores;
    SolveCertificate cert;
};

namespace detail {

inline const WeightVector& suitable_weights(const SuitableResult& suit, Index n) {
    if (!suit.ok() || !suit.w)
        throw NotSuitableError("ranking needs a Suitable result, got " + std::string(to_string(suit.status)));
    require_same_size(suit.w->size(), n, "suitable vector");
    return *suit.w;
}

inline void check_attenuation(double alpha, double sigma) {
    if (!(alpha > 0.0))
        throw DomainError("alpha must be positive");
    if (!(alpha * sigma < 1.0))
        throw DomainError("alpha must be below 1/sigma for a certified contraction");
}

inline void check_preference(std::span<const double> v, Index n, bool stochastic) {
    require_same_size(v.size(), n, "preference vector");
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw DomainError("preference vector must be finite and nonnegative");
        sum += x;
    }
    if (stochastic && std::abs(sum - 1.0) > 1e-12)
        throw DomainError("preference vector must sum to one");
}

inline RankingResult run_transposed(const SparseMatrix& at, std::span<const double> b, double alpha,
                                    const SuitableResult& suit, const RankingOptions& opts,
                                    const SolveObserver& observer) {
    SorConfig cfg;
    cfg.s = 1.0 / alpha;
    cfg.sigma = suit.sigma;
    cfg.omega = opts.omega;
    cfg.w = suitable_weights(suit, at.size());
    cfg.target_error = opts.target_error;
    cfg.max_iterations = opts.max_iterations;
    cfg.use_quantized = opts.use_quantized;
    auto res = solve(at, b, cfg, opts.schedule, observer);
    return {std::move(res.x), res.cert};
}

} // namespace detail

/// Katz scores from the already transposed matrix M^T; `suit` must be
/// suitable for M^T.
inline RankingResult katz_transposed(const SparseMatrix& mt, double alpha, std::span<const double> v,
                                     const SuitableResult& suit, const RankingOptions& opts = {},
                                     const SolveObserver& observer = {}) {
    detail::check_preference(v, mt.size(), false);
    detail::check_attenuation(alpha, suit.sigma);
    DenseVector b(v.begin(), v.end());
    for (double& x : b)
        x /= alpha;
    return detail::run_transposed(mt, b, alpha, suit, opts, observer);
}

inline RankingResult katz(const SparseMatrix& m, double alpha, std::span<const double> v, const SuitableResult& suit,
                          const RankingOptions& opts = {}) {
    return katz_transposed(transpose(m), alpha, v, suit, opts);
}

/// Pseudorank from G^T, where G is row-normalized; `suit` must be suitable
/// for G^T. alpha = 0 returns v exactly.
inline RankingResult pseudorank_transposed(const SparseMatrix& gt, double alpha, std::span<const double> v,
                                           const SuitableResult& suit, const RankingOptions& opts = {},
                                           const SolveObserver& observer = {}) {
    detail::check_preference(v, gt.size(), true);
    if (alpha == 0.0) {
        SolveCertificate cert;
        cert.r = 0.0;
        cert.s = std::numeric_limits<double>::infinity();
        cert.sigma = suit.sigma;
        cert.wnorm_bound = cert.supnorm_bound = 0.0;
        cert.schedule = opts.schedule.tag();
        cert.certified = true;
        return {DenseVector(v.begin(), v.end()), cert};
    }
    if (!(alpha < 1.0))
        throw DomainError("PageRank damping must lie in [0, 1)");
    detail::check_attenuation(alpha, suit.sigma);
    DenseVector b(v.begin(), v.end());
    for (double& x : b)
        x = (1.0 - alpha) * x / alpha;
    return detail::run_transposed(gt, b, alpha, suit, opts, observer);
}

inline RankingResult pseudorank(const SparseMatrix& g, double alpha, std::span<const double> v,
                                const SuitableResult& suit, const RankingOptions& opts = {}) {
    return pseudorank_transposed(transpose(g), alpha, v, suit, opts);
}

struct PageRankResult {
    DenseVector rank;       ///< p / |p|_1
    double pseudorank_l1;   ///< |p|_1 of the computed pseudorank
    SolveCertificate cert;  ///< certifies the pseudorank p, not the normalized rank
};

/// Strongly preferential PageRank. `dangling` must mark exactly the null
/// rows of G; the certificate is the one of the underlying pseudorank.
inline PageRankResult strong_pagerank(const SparseMatrix& g, std::span<const double> dangling, double alpha,
                                      std::span<const double> v, const SuitableResult& suit,
                                      const RankingOptions& opts = {}) {
    require_same_size(dangling.size(), g.size(), "dangling indicator");
    for (Index i = 0; i < g.size(); ++i)
        if ((dangling[i] != 0.0) != g.row_is_null(i))
            throw DomainError("dangling indicator does not match the null rows");
    auto p = pseudorank(g, alpha, v, suit, opts);
    const double norm = l1norm(p.scores);
    if (!(norm > 0.0))
        throw DomainError("pseudorank has zero l1 norm");
    PageRankResult out{std::move(p.scores), norm, p.cert};
    for (double& x : out.rank)
        x /= norm;
    return out;
}

// -----------------------------------------------------------------------------
// l1 certificates for Gauss-Seidel (omega = 1) PageRank-type systems.
//
// For (I - alpha P^T) x = (1 - alpha) v with P sub- or fully stochastic, the
// residual after a step is the previous-value part of alpha P^T applied to
// x^(t) - x^(t+1); its l1 norm is at most alpha, and |(I - alpha P^T)^-1|_1
// <= 1/(1 - alpha). Hence |xbar - x^(t+1)|_1 <= alpha/(1-alpha) |x^(t+1) - x^(t)|_1.
// -----------------------------------------------------------------------------

inline double pagerank_l1_bound(std::span<const double> x_prev, std::span<const double> x_next, double alpha) {
    require_same_size(x_prev.size(), x_next.size(), "pagerank_l1_bound");
    double diff = 0.0;
    for (Index i = 0; i < x_prev.size(); ++i)
        diff += std::abs(x_next[i] - x_prev[i]);
    return alpha / (1.0 - alpha) * diff;
}

/// An l1 certificate. Wasteful as a sup-norm bound, but it needs no
/// suitable vector.
struct L1Certificate {
    double alpha = 0.0;
    std::size_t iterations = 0;
    double l1_bound = std::numeric_limits<double>::infinity();
    std::string schedule;
    bool certified = false;
};

struct L1RankingResult {
    DenseVector scores;
    L1Certificate cert;
};

/// Pseudorank by omega = 1 iterations from G^T under any schedule, stopped
/// on the l1 bound.
inline L1RankingResult pseudorank_l1(const SparseMatrix& gt, double alpha, std::span<const double> v,
                                     double target_error, const Schedule& schedule = Schedule::sequential(),
                                     std::size_t max_iterations = 1000000, const SolveObserver& observer = {}) {
    detail::check_preference(v, gt.size(), true);
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw DomainError("PageRank damping must lie in (0, 1)");
    const Index n = gt.size();
    DenseVector b(v.begin(), v.end());
    for (double& x : b)
        x = (1.0 - alpha) * x / alpha;

    L1RankingResult out{DenseVector(n, 0.0), {}};
    out.cert.alpha = alpha;
    out.cert.schedule = schedule.tag();
    DenseVector next(n);
    SorStepper stepper(gt, schedule);
    for (std::size_t t = 0; t < max_iterations; ++t) {
        stepper.step(b, out.scores, next, 1.0 / alpha, 1.0, t);
        if (observer)
            observer(t, out.scores, next);
        out.cert.l1_bound = pagerank_l1_bound(out.scores, next, alpha);
        out.cert.iterations = t + 1;
        out.scores.swap(next);
        if (out.cert.l1_bound <= target_error) {
            out.cert.certified = true;
            break;
        }
    }
    return out;
}

/// PageRank with an arbitrary dangling distribution u, P = G + d u^T. The
/// rank-one part of P^T is applied on the fly (P itself is never formed) and
/// always reads previous values; the sparse part G^T is swept Gauss-Seidel
/// style in index order. Certified by the l1 bound.
inline L1RankingResult generic_pagerank(const SparseMatrix& g, std::span<const double> dangling,
                                        std::span<const double> u, double alpha, std::span<const double> v,
                                        double target_error, std::size_t max_iterations = 1000000,
                                        const SolveObserver& observer = {}) {
    const Index n = g.size();
    detail::check_preference(v, n, true);
    detail::check_preference(u, n, true);
    require_same_size(dangling.size(), n, "dangling indicator");
    for (Index i = 0; i < n; ++i)
        if ((dangling[i] != 0.0) != g.row_is_null(i))
            throw DomainError("dangling indicator does not match the null rows");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw DomainError("PageRank damping must lie in (0, 1)");

    const SparseMatrix gt = transpose(g);
    L1RankingResult out{DenseVector(n, 0.0), {}};
    out.cert.alpha = alpha;
    out.cert.schedule = "seq";
    DenseVector& x = out.scores;
    DenseVector next(n);
    for (std::size_t t = 0; t < max_iterations; ++t) {
        double dangling_mass = 0.0;
        for (Index j = 0; j < n; ++j)
            if (dangling[j] != 0.0)
                dangling_mass += x[j];
        next = x;
        for (Index i = 0; i < n; ++i) {
            const bool self_dangling = dangling[i] != 0.0;
            const double diag = gt.diag(i) + (self_dangling ? u[i] : 0.0);
            double acc = 0.0;
            const auto rc = gt.row_cols(i);
            const auto rv = gt.row_values(i);
            for (std::size_t k = 0; k < rc.size(); ++k)
                if (rc[k] != i)
                    acc += rv[k] * next[rc[k]];
            acc += u[i] * (dangling_mass - (self_dangling ? x[i] : 0.0));
            next[i] = ((1.0 - alpha) * v[i] + alpha * acc) / (1.0 - alpha * diag);
        }
        if (observer)
            observer(t, x, next);
        out.cert.l1_bound = pagerank_l1_bound(x, next, alpha);
        out.cert.iterations = t + 1;
        x.swap(next);
        if (out.cert.l1_bound <= target_error) {
            out.cert.certified = true;
            break;
        }
    }
    return out;
}

} // namespace csor
