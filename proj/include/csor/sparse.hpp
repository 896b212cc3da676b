#pragma once

#include "csor/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

// =============================================================================
// Row-compressed nonnegative square matrices.
//
// INVARIANTS (enforced by every factory):
// - column indices inside a row are strictly ascending
// - stored values are finite and > 0 (exact zeros are never stored)
// - diag()[i] mirrors the stored (i,i) entry, 0 when absent
//
// Matrices are immutable after construction; concurrent reads are safe.
// =============================================================================

namespace csor {

using Index = std::size_t;
using DenseVector = std::vector<double>;

struct Triplet {
    Index row;
    Index col;
    double value;
};

class SparseMatrix {
public:
    /// The n x n zero matrix.
    explicit SparseMatrix(Index n = 0) : n_(n), row_offsets_(n + 1, 0), diag_(n, 0.0) {}

    /// Builds from unordered triplets. Duplicates are summed, zeros dropped.
    static SparseMatrix from_triplets(Index n, std::vector<Triplet> entries) {
        for (const auto& e : entries) {
            if (e.row >= n || e.col >= n)
                throw DomainError("triplet (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                                  ") outside a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
            if (!(e.value >= 0.0) || !std::isfinite(e.value))
                throw DomainError("matrix entries must be finite and nonnegative");
        }
        std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });

        SparseMatrix m(n);
        m.col_indices_.reserve(entries.size());
        m.values_.reserve(entries.size());
        std::size_t k = 0;
        while (k < entries.size()) {
            const Index row = entries[k].row;
            const Index col = entries[k].col;
            // Summed in input order so duplicate handling is reproducible.
            double sum = 0.0;
            for (; k < entries.size() && entries[k].row == row && entries[k].col == col; ++k)
                sum += entries[k].value;
            if (sum == 0.0)
                continue;
            if (!std::isfinite(sum))
                throw DomainError("summed matrix entry overflows");
            m.col_indices_.push_back(col);
            m.values_.push_back(sum);
            ++m.row_offsets_[row + 1];
        }
        for (Index i = 0; i < n; ++i)
            m.row_offsets_[i + 1] += m.row_offsets_[i];
        m.rebuild_diag();
        return m;
    }

    /// Builds from a dense row-major square array; zeros are skipped.
    static SparseMatrix from_dense(const std::vector<std::vector<double>>& rows) {
        const Index n = rows.size();
        std::vector<Triplet> entries;
        for (Index i = 0; i < n; ++i) {
            require_same_size(rows[i].size(), n, "from_dense row");
            for (Index j = 0; j < n; ++j)
                if (rows[i][j] != 0.0)
                    entries.push_back({i, j, rows[i][j]});
        }
        return from_triplets(n, std::move(entries));
    }

    /// Adopts raw CSR arrays after validating every invariant.
    static SparseMatrix from_csr(Index n, std::vector<Index> row_offsets, std::vector<Index> col_indices,
                                 std::vector<double> values) {
        if (row_offsets.size() != n + 1 || row_offsets.front() != 0)
            throw FormatError("row offsets must have n + 1 entries starting at 0");
        if (col_indices.size() != values.size() || row_offsets.back() != values.size())
            throw FormatError("row offsets, column indices and values disagree on nnz");
        for (Index i = 0; i < n; ++i) {
            if (row_offsets[i] > row_offsets[i + 1])
                throw FormatError("row offsets must be nondecreasing");
            for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
                if (col_indices[k] >= n)
                    throw FormatError("column index out of range");
                if (k > row_offsets[i] && col_indices[k] <= col_indices[k - 1])
                    throw FormatError("column indices must be strictly ascending within a row");
                if (!(values[k] > 0.0) || !std::isfinite(values[k]))
                    throw FormatError("stored values must be finite and positive");
            }
        }
        SparseMatrix m(n);
        m.row_offsets_ = std::move(row_offsets);
        m.col_indices_ = std::move(col_indices);
        m.values_ = std::move(values);
        m.rebuild_diag();
        return m;
    }

    Index size() const noexcept { return n_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
    std::span<const Index> col_indices() const noexcept { return col_indices_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> diag() const noexcept { return diag_; }
    double diag(Index i) const { return diag_[i]; }

    std::span<const Index> row_cols(Index i) const {
        return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }
    std::span<const double> row_values(Index i) const {
        return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }

    /// Entry lookup by binary search; 0 when not stored.
    double at(Index i, Index j) const {
        const auto cols = row_cols(i);
        const auto it = std::lower_bound(cols.begin(), cols.end(), j);
        if (it == cols.end() || *it != j)
            return 0.0;
        return values_[row_offsets_[i] + static_cast<std::size_t>(it - cols.begin())];
    }

    bool row_is_null(Index i) const { return row_offsets_[i] == row_offsets_[i + 1]; }

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    void rebuild_diag() {
        diag_.assign(n_, 0.0);
        for (Index i = 0; i < n_; ++i)
            diag_[i] = at(i, i);
    }

    Index n_;
    std::vector<Index> row_offsets_;
    std::vector<Index> col_indices_;
    std::vector<double> values_;
    std::vector<double> diag_;
};

namespace detail {

inline void matvec_rows(const SparseMatrix& a, std::span<const double> x, std::span<double> y, Index begin,
                        Index end) {
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (Index i = begin; i < end; ++i) {
        double acc = 0.0;
        for (Index k = offsets[i]; k < offsets[i + 1]; ++k)
            acc += vals[k] * x[cols[k]];
        y[i] = acc;
    }
}

} // namespace detail

/// y = A x, summing each row in ascending column order. Rows are split into
/// contiguous blocks when `workers > 1`; the result does not depend on it.
inline void matvec_into(const SparseMatrix& a, std::span<const double> x, std::span<double> y,
                        unsigned workers = 1) {
    require_same_size(x.size(), a.size(), "matvec input");
    require_same_size(y.size(), a.size(), "matvec output");
    const Index n = a.size();
    if (workers <= 1 || n < 2 * workers) {
        detail::matvec_rows(a, x, y, 0, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned k = 0; k < workers; ++k) {
        const Index begin = n * k / workers;
        const Index end = n * (k + 1) / workers;
        pool.emplace_back([&, begin, end] { detail::matvec_rows(a, x, y, begin, end); });
    }
}

inline DenseVector matvec(const SparseMatrix& a, std::span<const double> x, unsigned workers = 1) {
    DenseVector y(a.size());
    matvec_into(a, x, y, workers);
    return y;
}

inline DenseVector row_sums(const SparseMatrix& a) {
    return matvec(a, DenseVector(a.size(), 1.0));
}

inline SparseMatrix transpose(const SparseMatrix& a) {
    const Index n = a.size();
    std::vector<Index> offsets(n + 1, 0);
    for (Index c : a.col_indices())
        ++offsets[c + 1];
    for (Index i = 0; i < n; ++i)
        offsets[i + 1] += offsets[i];

    std::vector<Index> cols(a.nnz());
    std::vector<double> vals(a.nnz());
    std::vector<Index> next(offsets.begin(), offsets.end() - 1);
    // Scanning rows in order keeps every output row sorted by column.
    for (Index i = 0; i < n; ++i) {
        const auto rc = a.row_cols(i);
        const auto rv = a.row_values(i);
        for (std::size_t k = 0; k < rc.size(); ++k) {
            const Index slot = next[rc[k]]++;
            cols[slot] = i;
            vals[slot] = rv[k];
        }
    }
    return SparseMatrix::from_csr(n, std::move(offsets), std::move(cols), std::move(vals));
}

struct NormalizedRows {
    SparseMatrix matrix;  ///< every nonnull row sums to one
    DenseVector dangling; ///< 1 for null rows, 0 otherwise
};

inline NormalizedRows row_normalize(const SparseMatrix& a) {
    const Index n = a.size();
    std::vector<Index> offsets(a.row_offsets().begin(), a.row_offsets().end());
    std::vector<Index> cols(a.col_indices().begin(), a.col_indices().end());
    std::vector<double> vals(a.values().begin(), a.values().end());
    DenseVector dangling(n, 0.0);
    for (Index i = 0; i < n; ++i) {
        if (a.row_is_null(i)) {
            dangling[i] = 1.0;
            continue;
        }
        double sum = 0.0;
        for (double v : a.row_values(i))
            sum += v;
        for (Index k = offsets[i]; k < offsets[i + 1]; ++k)
            vals[k] /= sum;
    }
    return {SparseMatrix::from_csr(n, std::move(offsets), std::move(cols), std::move(vals)), std::move(dangling)};
}

} // namespace csor
