#pragma once

#include "csor/error.hpp"
#include "csor/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

// =============================================================================
// Update schedules for step-asynchronous SOR.
//
// One iteration is described by an update total preorder (rank[i] < rank[j]:
// i is written before j; equal ranks are simultaneous) and, for every stored
// entry a_ij, whether the update of x_i reads the previous value x_j^(t) or
// the next value x_j^(t+1). Reading the next value is only legal when
// rank[j] < rank[i]; the diagonal never enters the update.
// =============================================================================

namespace csor {

struct StepPlan {
    std::vector<std::uint64_t> rank;    ///< per index
    std::vector<std::uint8_t> previous; ///< per stored entry (CSR position); 1 = reads x^(t)

    friend bool operator==(const StepPlan&, const StepPlan&) = default;
};

/// True when every next-value read refers to an index ranked strictly earlier.
inline bool is_compatible(const SparseMatrix& a, const StepPlan& plan) {
    if (plan.rank.size() != a.size() || plan.previous.size() != a.nnz())
        return false;
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    for (Index i = 0; i < a.size(); ++i)
        for (Index k = offsets[i]; k < offsets[i + 1]; ++k)
            if (cols[k] != i && !plan.previous[k] && plan.rank[cols[k]] >= plan.rank[i])
                return false;
    return true;
}

/// Order in which a plan's indices are processed: ascending rank, ties by index.
inline std::vector<Index> processing_order(const StepPlan& plan) {
    std::vector<Index> order(plan.rank.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index x, Index y) { return plan.rank[x] < plan.rank[y]; });
    return order;
}

class Schedule {
public:
    enum class Kind { Sequential, Jacobi, RandomPreorder, ParallelBlocks, Replay };

    /// Gauss-Seidel sweep in the given order; an empty order means 0..n-1.
    static Schedule sequential(std::vector<Index> order = {}) {
        Schedule s(Kind::Sequential);
        s.order_ = std::move(order);
        return s;
    }
    static Schedule jacobi() { return Schedule(Kind::Jacobi); }
    static Schedule random_preorder(std::uint64_t seed) {
        Schedule s(Kind::RandomPreorder);
        s.seed_ = seed;
        return s;
    }
    static Schedule parallel_blocks(unsigned workers) {
        if (workers == 0)
            throw DomainError("parallel schedule needs at least one worker");
        Schedule s(Kind::ParallelBlocks);
        s.workers_ = workers;
        return s;
    }
    /// Replays recorded plans; iteration t uses plans[t].
    static Schedule replay(std::vector<StepPlan> plans) {
        Schedule s(Kind::Replay);
        s.plans_ = std::move(plans);
        return s;
    }

    /// Parses "seq", "jacobi", "random:SEED" or "par:K".
    static Schedule parse(std::string_view text) {
        auto number = [&](std::string_view digits) {
            std::uint64_t v = 0;
            const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
            if (digits.empty() || ec != std::errc{} || p != digits.data() + digits.size())
                throw FormatError("bad schedule \"" + std::string(text) + "\"");
            return v;
        };
        if (text == "seq")
            return sequential();
        if (text == "jacobi")
            return jacobi();
        if (text.starts_with("random:"))
            return random_preorder(number(text.substr(7)));
        if (text.starts_with("par:")) {
            const auto k = number(text.substr(4));
            if (k == 0 || k > 4096)
                throw FormatError("worker count must be in [1, 4096]");
            return parallel_blocks(static_cast<unsigned>(k));
        }
        throw FormatError("unknown schedule \"" + std::string(text) +
                          "\" (expected seq, jacobi, random:SEED or par:K)");
    }

    Kind kind() const noexcept { return kind_; }
    unsigned workers() const noexcept { return workers_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<Index>& order() const noexcept { return order_; }

    std::string tag() const {
        switch (kind_) {
        case Kind::Sequential: return "seq";
        case Kind::Jacobi: return "jacobi";
        case Kind::RandomPreorder: return "random:" + std::to_string(seed_);
        case Kind::ParallelBlocks: return "par:" + std::to_string(workers_);
        case Kind::Replay: return "replay";
        }
        return "unknown";
    }

    /// Realized plan of iteration t. Not available for ParallelBlocks, whose
    /// plan is only known after the fact (see StepTrace).
    StepPlan plan(const SparseMatrix& a, std::size_t t) const {
        const Index n = a.size();
        StepPlan p;
        switch (kind_) {
        case Kind::Sequential: {
            p.rank.resize(n);
            const auto ord = sweep_order(n);
            for (Index pos = 0; pos < n; ++pos)
                p.rank[ord[pos]] = pos;
            fill_minimal_previous(a, p);
            return p;
        }
        case Kind::Jacobi:
            p.rank.assign(n, 0);
            p.previous.assign(a.nnz(), 1);
            return p;
        case Kind::RandomPreorder:
            return random_plan(a, t);
        case Kind::Replay:
            if (t >= plans_.size())
                throw DomainError("replay schedule has no plan for iteration " + std::to_string(t));
            if (!is_compatible(a, plans_[t]))
                throw DomainError("replayed plan violates the update preorder");
            return plans_[t];
        case Kind::ParallelBlocks:
            break;
        }
        throw DomainError("parallel schedules have no precomputed plan");
    }

    /// Sequential sweep order, validated as a permutation of 0..n-1.
    std::vector<Index> sweep_order(Index n) const {
        if (order_.empty()) {
            std::vector<Index> id(n);
            std::iota(id.begin(), id.end(), Index{0});
            return id;
        }
        if (order_.size() != n)
            throw DimensionError("sequential order has wrong length");
        std::vector<bool> seen(n, false);
        for (Index i : order_) {
            if (i >= n || seen[i])
                throw DomainError("sequential order is not a permutation");
            seen[i] = true;
        }
        return order_;
    }

private:
    explicit Schedule(Kind k) : kind_(k) {}

    static void fill_minimal_previous(const SparseMatrix& a, StepPlan& p) {
        p.previous.assign(a.nnz(), 0);
        const auto offsets = a.row_offsets();
        const auto cols = a.col_indices();
        for (Index i = 0; i < a.size(); ++i)
            for (Index k = offsets[i]; k < offsets[i + 1]; ++k)
                p.previous[k] = p.rank[cols[k]] >= p.rank[i] ? 1 : 0;
    }

    // A fresh generator per iteration keeps plan(a, t) a pure function of
    // (seed, t). Each iteration draws a permutation, groups consecutive
    // positions into simultaneous updates with probability `tie`, and lets
    // every optional read use the previous value with probability `stale`.
    // One draw in ten pins each knob to 0 or 1, so pure sequential sweeps,
    // pure Jacobi steps and "P_i = everything" all occur.
    // splitmix64 finalizer; seed_seq is far too slow to run every iteration.
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    StepPlan random_plan(const SparseMatrix& a, std::size_t t) const {
        const Index n = a.size();
        std::mt19937_64 rng(mix(seed_ ^ mix(t + 0x9e3779b97f4a7c15ULL)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<int> mode(0, 9);
        auto knob = [&] {
            switch (mode(rng)) {
            case 0: return 0.0;
            case 1: return 1.0;
            default: return unit(rng);
            }
        };
        const double tie = knob();
        const double stale = knob();

        std::vector<Index> perm(n);
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);

        StepPlan p;
        p.rank.resize(n);
        std::uint64_t level = 0;
        for (Index pos = 0; pos < n; ++pos) {
            if (pos > 0 && (tie == 0.0 || (tie < 1.0 && !(unit(rng) < tie))))
                ++level;
            p.rank[perm[pos]] = level;
        }
        fill_minimal_previous(a, p);
        if (stale == 1.0)
            std::fill(p.previous.begin(), p.previous.end(), 1);
        else if (stale > 0.0)
            for (auto& flag : p.previous)
                if (!flag && unit(rng) < stale)
                    flag = 1;
        return p;
    }

    Kind kind_;
    std::vector<Index> order_;
    std::uint64_t seed_ = 0;
    unsigned workers_ = 1;
    std::vector<StepPlan> plans_;
};

} // namespace csor
