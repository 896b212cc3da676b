#pragma once

#include "csor/error.hpp"
#include "csor/norms.hpp"
#include "csor/schedule.hpp"
#include "csor/sparse.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

// =============================================================================
// Step-asynchronous SOR for (sI - A) x = b with A >= 0.
//
// Each iteration updates every component exactly once:
//
//   x_i <- (1 - omega) x_i + omega (b_i + sum_{j != i} a_ij x_j) / (s - a_ii)
//
// where x_j is the previous or the next value as dictated by the schedule.
// Given w > 0 with A w <= sigma w and s > sigma, the w-norm of the error
// contracts by r = |1 - omega| + omega max_k (sigma - a_kk) / (s - a_kk)
// per iteration, and |xbar - x^(t+1)|_w <= r/(1-r) |x^(t+1) - x^(t)|_w.
// =============================================================================

namespace csor {

namespace detail {

inline double max_diag_ratio(std::span<const double> diag, double s, double sigma) {
    if (!(s > sigma))
        throw DomainError("s must exceed sigma");
    double m = 0.0;
    for (double akk : diag) {
        if (!(akk < sigma))
            throw DomainError("a diagonal entry reaches sigma; suitability cannot certify that row");
        m = std::max(m, (sigma - akk) / (s - akk));
    }
    return m;
}

} // namespace detail

/// Upper end of the admissible relaxation range, 2 / (1 + max_k ratio_k).
inline double omega_max(std::span<const double> diag, double s, double sigma) {
    return 2.0 / (1.0 + detail::max_diag_ratio(diag, s, sigma));
}

inline double contraction_factor(std::span<const double> diag, double s, double sigma, double omega) {
    const double ratio = detail::max_diag_ratio(diag, s, sigma);
    if (!(omega > 0.0) || !(omega < 2.0 / (1.0 + ratio)))
        throw DomainError("omega outside the convergence interval (0, omega_max)");
    return std::abs(1.0 - omega) + omega * ratio;
}

struct SorConfig {
    double s = 1.0;
    double sigma = 0.5;
    double omega = 1.0;
    WeightVector w;
    double target_error = 1e-9; ///< certified bound to reach, sup norm
    std::size_t max_iterations = 100000;
    bool use_quantized = false;
};

struct SolveCertificate {
    double r = 1.0;
    double omega = 1.0;
    double s = 0.0;
    double sigma = 0.0;
    double omega_max = 0.0;
    std::size_t iterations = 0;
    double wnorm_bound = std::numeric_limits<double>::infinity();   ///< on |xbar - x|_w
    double supnorm_bound = std::numeric_limits<double>::infinity(); ///< on |xbar - x|_inf
    double last_step_supnorm = 0.0; ///< |x^(t+1) - x^(t)|_inf of the final step
    std::string schedule;
    bool quantized = false;
    bool certified = false; ///< false when the iteration limit stopped the run
};

struct SolveResult {
    DenseVector x;
    SolveCertificate cert;
};

/// Called after every iteration with the iteration index and both iterates.
using SolveObserver =
    std::function<void(std::size_t t, std::span<const double> previous, std::span<const double> next)>;

namespace detail {

inline double relaxed(double old_value, double acc, double shift, double omega) {
    return (1.0 - omega) * old_value + omega * (acc / shift);
}

inline void check_step_inputs(const SparseMatrix& a, std::span<const double> b, std::span<const double> x,
                              std::span<double> next) {
    require_same_size(b.size(), a.size(), "right-hand side");
    require_same_size(x.size(), a.size(), "iterate");
    require_same_size(next.size(), a.size(), "next iterate");
}

inline void check_shift(const SparseMatrix& a, double s) {
    for (double akk : a.diag())
        if (!(s - akk > 0.0))
            throw DomainError("s must exceed every diagonal entry");
}

} // namespace detail

/// One step under an explicit plan.
inline void sor_step_plan(const SparseMatrix& a, std::span<const double> b, std::span<const double> x,
                          std::span<double> next, double s, double omega, const StepPlan& plan) {
    detail::check_step_inputs(a, b, x, next);
    detail::check_shift(a, s);
    if (!is_compatible(a, plan))
        throw DomainError("step plan violates the update preorder");
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (Index i : processing_order(plan)) {
        double acc = b[i];
        for (Index k = offsets[i]; k < offsets[i + 1]; ++k) {
            const Index j = cols[k];
            if (j != i)
                acc += vals[k] * (plan.previous[k] ? x[j] : next[j]);
        }
        next[i] = detail::relaxed(x[i], acc, s - a.diag(i), omega);
    }
}

inline void sor_step_sequential(const SparseMatrix& a, std::span<const double> b, std::span<const double> x,
                                std::span<double> next, double s, double omega, std::span<const Index> order) {
    detail::check_step_inputs(a, b, x, next);
    std::copy(x.begin(), x.end(), next.begin());
    for (Index i : order) {
        double acc = b[i];
        const auto rc = a.row_cols(i);
        const auto rv = a.row_values(i);
        for (std::size_t k = 0; k < rc.size(); ++k)
            if (rc[k] != i)
                acc += rv[k] * next[rc[k]];
        next[i] = detail::relaxed(x[i], acc, s - a.diag(i), omega);
    }
}

inline void sor_step_jacobi(const SparseMatrix& a, std::span<const double> b, std::span<const double> x,
                            std::span<double> next, double s, double omega) {
    detail::check_step_inputs(a, b, x, next);
    for (Index i = 0; i < a.size(); ++i) {
        double acc = b[i];
        const auto rc = a.row_cols(i);
        const auto rv = a.row_values(i);
        for (std::size_t k = 0; k < rc.size(); ++k)
            if (rc[k] != i)
                acc += rv[k] * x[rc[k]];
        next[i] = detail::relaxed(x[i], acc, s - a.diag(i), omega);
    }
}

// -----------------------------------------------------------------------------
// Shared-memory parallel steps.
//
// Indices are split into contiguous blocks, one per worker; each worker
// updates its block in ascending order. A component publishes its new value
// by storing the current epoch into its stamp with release semantics; a
// reader that acquires the epoch reads the new value, otherwise the previous
// one. Values are therefore never older than one step, and the barrier at the
// end of the step makes the whole vector visible to everybody.
// -----------------------------------------------------------------------------

/// What a parallel step actually did, expressed as a plan: ranks are global
/// write timestamps and `previous` records which reads missed the new value.
struct StepTrace {
    StepPlan plan;
};

class ParallelSorTeam {
public:
    ParallelSorTeam(const SparseMatrix& a, unsigned workers)
        : a_(a), workers_(std::max(1u, workers)), stamps_(a.size(), 0),
          sync_(static_cast<std::ptrdiff_t>(workers_) + 1) {
        pool_.reserve(workers_);
        for (unsigned k = 0; k < workers_; ++k)
            pool_.emplace_back([this, k] { worker(k); });
    }

    ParallelSorTeam(const ParallelSorTeam&) = delete;
    ParallelSorTeam& operator=(const ParallelSorTeam&) = delete;

    ~ParallelSorTeam() {
        quit_ = true;
        sync_.arrive_and_wait();
    }

    unsigned workers() const noexcept { return workers_; }

    void step(std::span<const double> b, std::span<const double> x, std::span<double> next, double s,
              double omega, StepTrace* trace = nullptr) {
        detail::check_step_inputs(a_, b, x, next);
        detail::check_shift(a_, s);
        job_ = Job{b, x, next, s, omega, trace};
        ++epoch_;
        clock_.store(0);
        if (trace) {
            trace->plan.rank.assign(a_.size(), 0);
            trace->plan.previous.assign(a_.nnz(), 1);
        }
        sync_.arrive_and_wait(); // start
        sync_.arrive_and_wait(); // done
    }

private:
    struct Job {
        std::span<const double> b;
        std::span<const double> x;
        std::span<double> next;
        double s = 0.0;
        double omega = 1.0;
        StepTrace* trace = nullptr;
    };

    void worker(unsigned k) {
        const Index n = a_.size();
        const Index begin = n * k / workers_;
        const Index end = n * (k + 1) / workers_;
        while (true) {
            sync_.arrive_and_wait();
            if (quit_)
                return;
            run_block(begin, end);
            sync_.arrive_and_wait();
        }
    }

    void run_block(Index begin, Index end) {
        const Job& job = job_;
        const std::uint64_t epoch = epoch_;
        const auto offsets = a_.row_offsets();
        const auto cols = a_.col_indices();
        const auto vals = a_.values();
        for (Index i = begin; i < end; ++i) {
            double acc = job.b[i];
            for (Index k = offsets[i]; k < offsets[i + 1]; ++k) {
                const Index j = cols[k];
                if (j == i)
                    continue;
                const bool fresh = std::atomic_ref<std::uint64_t>(stamps_[j]).load(std::memory_order_acquire) ==
                                   epoch;
                acc += vals[k] * (fresh ? job.next[j] : job.x[j]);
                if (job.trace && fresh)
                    job.trace->plan.previous[k] = 0;
            }
            job.next[i] = detail::relaxed(job.x[i], acc, job.s - a_.diag(i), job.omega);
            if (job.trace)
                job.trace->plan.rank[i] = clock_.fetch_add(1);
            std::atomic_ref<std::uint64_t>(stamps_[i]).store(epoch, std::memory_order_release);
        }
    }

    const SparseMatrix& a_;
    unsigned workers_;
    std::vector<std::uint64_t> stamps_;
    std::uint64_t epoch_ = 0;
    std::atomic<std::uint64_t> clock_{0};
    Job job_;
    bool quit_ = false;
    std::barrier<> sync_;
    std::vector<std::jthread> pool_;
};

/// Performs iteration t of the schedule, writing x^(t+1) into `next`.
class SorStepper {
public:
    SorStepper(const SparseMatrix& a, const Schedule& schedule) : a_(a), schedule_(schedule) {
        if (schedule.kind() == Schedule::Kind::Sequential)
            order_ = schedule.sweep_order(a.size());
        if (schedule.kind() == Schedule::Kind::ParallelBlocks)
            team_ = std::make_unique<ParallelSorTeam>(a, schedule.workers());
    }

    void step(std::span<const double> b, std::span<const double> x, std::span<double> next, double s,
              double omega, std::size_t t, StepTrace* trace = nullptr) {
        switch (schedule_.kind()) {
        case Schedule::Kind::Sequential:
            detail::check_shift(a_, s);
            sor_step_sequential(a_, b, x, next, s, omega, order_);
            return;
        case Schedule::Kind::Jacobi:
            detail::check_shift(a_, s);
            sor_step_jacobi(a_, b, x, next, s, omega);
            return;
        case Schedule::Kind::ParallelBlocks:
            team_->step(b, x, next, s, omega, trace);
            return;
        case Schedule::Kind::RandomPreorder:
        case Schedule::Kind::Replay:
            sor_step_plan(a_, b, x, next, s, omega, schedule_.plan(a_, t));
            return;
        }
    }

private:
    const SparseMatrix& a_;
    const Schedule& schedule_;
    std::vector<Index> order_;
    std::unique_ptr<ParallelSorTeam> team_;
};

inline DenseVector sor_step(const SparseMatrix& a, std::span<const double> b, std::span<const double> x,
                            const SorConfig& cfg, const Schedule& schedule, std::size_t t) {
    DenseVector next(a.size());
    SorStepper(a, schedule).step(b, x, next, cfg.s, cfg.omega, t);
    return next;
}

class NotSuitableError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Iterates until r/(1-r) |x^(t+1) - x^(t)|_w <= target_error, measuring the
/// step in the w-norm or, with use_quantized, in the dominating w'-norm.
inline SolveResult solve(const SparseMatrix& a, std::span<const double> b, const SorConfig& cfg,
                         const Schedule& schedule, const SolveObserver& observer = {},
                         std::optional<DenseVector> x0 = std::nullopt) {
    const Index n = a.size();
    require_same_size(b.size(), n, "right-hand side");
    require_same_size(cfg.w.size(), n, "weight vector");
    if (!(cfg.target_error > 0.0))
        throw DomainError("target error must be positive");
    if (!(cfg.s > cfg.sigma))
        throw DomainError("s must exceed sigma");
    const auto check = check_suitable(a, cfg.w, cfg.sigma);
    if (!check.suitable)
        throw NotSuitableError("weight vector is not sigma-suitable (ratio " + std::to_string(check.max_ratio) +
                               " at index " + std::to_string(check.witness_index) + ")");

    SolveCertificate cert;
    cert.s = cfg.s;
    cert.sigma = cfg.sigma;
    cert.omega = cfg.omega;
    cert.omega_max = omega_max(a.diag(), cfg.s, cfg.sigma);
    cert.r = contraction_factor(a.diag(), cfg.s, cfg.sigma, cfg.omega);
    cert.schedule = schedule.tag();
    cert.quantized = cfg.use_quantized;

    std::optional<QuantizedWeights> q;
    if (cfg.use_quantized)
        q = quantize(cfg.w);
    const double amplification = cert.r / (1.0 - cert.r);
    const double wmax = cfg.w.max();

    DenseVector x = x0 ? std::move(*x0) : DenseVector(n, 0.0);
    require_same_size(x.size(), n, "initial iterate");
    DenseVector next(n);
    DenseVector diff(n);
    SorStepper stepper(a, schedule);
    for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
        stepper.step(b, x, next, cfg.s, cfg.omega, t);
        if (observer)
            observer(t, x, next);
        for (Index i = 0; i < n; ++i)
            diff[i] = next[i] - x[i];
        const double step = q ? wnorm_quantized(diff, *q) : wnorm(diff, cfg.w);
        x.swap(next);

        cert.iterations = t + 1;
        cert.wnorm_bound = amplification * step;
        cert.supnorm_bound = cert.wnorm_bound * wmax;
        cert.last_step_supnorm = supnorm(diff);
        if (cert.supnorm_bound <= cfg.target_error) {
            cert.certified = true;
            break;
        }
    }
    return {std::move(x), cert};
}

/// The coarse sup-norm bound (max w / min w) r/(1-r) |x^(t+1) - x^(t)|_inf,
/// reported next to the w-norm certificate for comparison.
inline double certified_sup_bound(const SolveCertificate& cert, const WeightVector& w) {
    return w.max() / w.min() * (cert.r / (1.0 - cert.r)) * cert.last_step_supnorm;
}

} // namespace csor
