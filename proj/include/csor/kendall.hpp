#pragma once

#include "csor/error.hpp"
#include "csor/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace csor {

class UndefinedCorrelationError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Integer summary of a pair of score vectors over all pairs i < j.
struct TauCounts {
    std::int64_t numerator = 0;     ///< sum sgn(r_i - r_j) sgn(s_i - s_j)
    std::int64_t untied_first = 0;  ///< sum sgn(r_i - r_j)^2
    std::int64_t untied_second = 0; ///< sum sgn(s_i - s_j)^2

    friend bool operator==(const TauCounts&, const TauCounts&) = default;
};

/// Tie-aware (tau-b) correlation from the pair counts.
inline double tau_from_counts(const TauCounts& c) {
    if (c.untied_first == 0 || c.untied_second == 0)
        throw UndefinedCorrelationError("Kendall tau is undefined when a vector is constant");
    const long double den = std::sqrt(static_cast<long double>(c.untied_first) * c.untied_second);
    return static_cast<double>(c.numerator / den);
}

namespace detail {

inline void check_tau_inputs(std::span<const double> r, std::span<const double> s) {
    require_same_size(r.size(), s.size(), "kendall_tau");
    if (r.size() < 2)
        throw DomainError("Kendall tau needs at least two scores");
    for (Index i = 0; i < r.size(); ++i)
        if (std::isnan(r[i]) || std::isnan(s[i]))
            throw DomainError("Kendall tau inputs must be NaN-free");
}

inline std::int64_t tied_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Sorts `v` and returns the number of strict inversions.
inline std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2)
        return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += static_cast<std::int64_t>(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid)
        buf[k++] = v[i++];
    while (j < hi)
        buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

} // namespace detail

/// O(n log n) pair counts: sort by (r, s), count ties, then count
/// discordant pairs as inversions of s with a merge sort.
inline TauCounts kendall_counts(std::span<const double> r, std::span<const double> s) {
    detail::check_tau_inputs(r, s);
    const std::size_t n = r.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return r[a] != r[b] ? r[a] < r[b] : s[a] < s[b];
    });

    std::int64_t tied_first = 0, tied_both = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && r[idx[j]] == r[idx[i]])
            ++j;
        tied_first += detail::tied_pairs(static_cast<std::int64_t>(j - i));
        for (std::size_t k = i; k < j;) {
            std::size_t m = k;
            while (m < j && s[idx[m]] == s[idx[k]])
                ++m;
            tied_both += detail::tied_pairs(static_cast<std::int64_t>(m - k));
            k = m;
        }
        i = j;
    }

    std::vector<double> seq(n), buf(n);
    for (std::size_t i = 0; i < n; ++i)
        seq[i] = s[idx[i]];
    const std::int64_t discordant = detail::merge_count(seq, buf, 0, n);

    std::int64_t tied_second = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && seq[j] == seq[i])
            ++j;
        tied_second += detail::tied_pairs(static_cast<std::int64_t>(j - i));
        i = j;
    }

    const std::int64_t total = detail::tied_pairs(static_cast<std::int64_t>(n));
    TauCounts c;
    c.untied_first = total - tied_first;
    c.untied_second = total - tied_second;
    c.numerator = total - tied_first - tied_second + tied_both - 2 * discordant;
    return c;
}

/// O(n^2) pair counts straight from the definition.
inline TauCounts kendall_counts_brute(std::span<const double> r, std::span<const double> s) {
    detail::check_tau_inputs(r, s);
    auto sgn = [](double d) -> std::int64_t { return (d > 0) - (d < 0); };
    TauCounts c;
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = i + 1; j < r.size(); ++j) {
            const std::int64_t a = sgn(r[i] - r[j]);
            const std::int64_t b = sgn(s[i] - s[j]);
            c.numerator += a * b;
            c.untied_first += a * a;
            c.untied_second += b * b;
        }
    return c;
}

inline double kendall_tau(std::span<const double> r, std::span<const double> s) {
    return tau_from_counts(kendall_counts(r, s));
}

/// Round-half-to-even at the given number of decimal digits.
inline DenseVector round_scores(std::span<const double> x, unsigned decimal_digits) {
    const double scale = std::pow(10.0, static_cast<double>(decimal_digits));
    DenseVector out(x.begin(), x.end());
    for (double& v : out) {
        const double scaled = v * scale;
        // Beyond 2^52 every double is already on the grid.
        if (std::isfinite(scaled) && std::abs(scaled) < 4503599627370496.0)
            v = std::nearbyint(scaled) / scale;
    }
    return out;
}

} // namespace csor
