#pragma once

#include "csor/error.hpp"
#include "csor/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace csor {

/// Strictly positive weights defining the norm max_i |x_i| / w_i.
class WeightVector {
public:
    WeightVector() = default;

    explicit WeightVector(DenseVector w) : w_(std::move(w)) {
        for (double v : w_)
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError("weights must be finite and strictly positive");
    }

    /// Scales `w` so that its largest entry is exactly 1.
    static WeightVector normalized_from(DenseVector w) {
        const double m = w.empty() ? 1.0 : *std::max_element(w.begin(), w.end());
        if (!(m > 0.0) || !std::isfinite(m))
            throw DomainError("cannot normalize a weight vector without a finite positive maximum");
        for (double& v : w)
            v /= m;
        return WeightVector(std::move(w));
    }

    static WeightVector ones(Index n) { return WeightVector(DenseVector(n, 1.0)); }

    Index size() const noexcept { return w_.size(); }
    std::span<const double> values() const noexcept { return w_; }
    double operator[](Index i) const { return w_[i]; }

    double max() const { return w_.empty() ? 1.0 : *std::max_element(w_.begin(), w_.end()); }
    double min() const { return w_.empty() ? 1.0 : *std::min_element(w_.begin(), w_.end()); }
    bool normalized() const { return max() == 1.0; }

private:
    DenseVector w_;
};

inline double wnorm(std::span<const double> x, const WeightVector& w) {
    require_same_size(x.size(), w.size(), "wnorm");
    double m = 0.0;
    for (Index i = 0; i < x.size(); ++i)
        m = std::max(m, std::abs(x[i]) / w[i]);
    return m;
}

inline double supnorm(std::span<const double> x) {
    double m = 0.0;
    for (double v : x)
        m = std::max(m, std::abs(v));
    return m;
}

inline double l1norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x)
        s += std::abs(v);
    return s;
}

struct SuitabilityCheck {
    bool suitable = false;
    double max_ratio = 0.0; ///< max_i (Aw)_i / w_i
    Index witness_index = 0;
};

namespace detail {

/// Suitability of `w` given the precomputed product z = A w. A row passes
/// only if both z_i / w_i <= sigma and z_i <= sigma * w_i hold in floating
/// point, so the verdict agrees with either way of writing the inequality.
inline SuitabilityCheck check_ratios(std::span<const double> z, std::span<const double> w, double sigma) {
    SuitabilityCheck c;
    c.suitable = true;
    for (Index i = 0; i < z.size(); ++i) {
        const double ratio = z[i] / w[i];
        if (i == 0 || ratio > c.max_ratio) {
            c.max_ratio = ratio;
            c.witness_index = i;
        }
        if (!(ratio <= sigma) || !(z[i] <= sigma * w[i]))
            c.suitable = false;
    }
    return c;
}

} // namespace detail

inline SuitabilityCheck check_suitable(const SparseMatrix& a, const WeightVector& w, double sigma) {
    require_same_size(w.size(), a.size(), "check_suitable");
    if (!(sigma > 0.0))
        throw DomainError("sigma must be positive");
    const DenseVector z = matvec(a, w.values());
    return detail::check_ratios(z, w.values(), sigma);
}

// -----------------------------------------------------------------------------
// Byte quantization: exponent e_i = ceil(-log2 w_i) so that w'_i = 2^-e_i
// satisfies w_i / 2 < w'_i <= w_i.
// -----------------------------------------------------------------------------

inline constexpr int kMaxQuantizedExponent = 255;

class QuantizationRangeError : public DomainError {
public:
    using DomainError::DomainError;
};

struct QuantizedWeights {
    std::vector<std::uint8_t> exponents;

    Index size() const noexcept { return exponents.size(); }
    double dequantized(Index i) const { return std::ldexp(1.0, -static_cast<int>(exponents[i])); }

    friend bool operator==(const QuantizedWeights&, const QuantizedWeights&) = default;
};

/// With w = m * 2^e and m in [0.5, 1), ceil(-log2 w) = 1 - e exactly.
inline int quantized_exponent(double w) {
    int e = 0;
    std::frexp(w, &e);
    return 1 - e;
}

inline QuantizedWeights quantize(const WeightVector& w) {
    if (!w.normalized())
        throw DomainError("quantization requires weights normalized to a maximum of 1");
    QuantizedWeights q;
    q.exponents.resize(w.size());
    for (Index i = 0; i < w.size(); ++i) {
        const int e = quantized_exponent(w[i]);
        if (e > kMaxQuantizedExponent)
            throw QuantizationRangeError("weight " + std::to_string(i) + " is below 2^-255");
        q.exponents[i] = static_cast<std::uint8_t>(e);
    }
    return q;
}

inline double wnorm_quantized(std::span<const double> x, const QuantizedWeights& q) {
    require_same_size(x.size(), q.size(), "wnorm_quantized");
    double m = 0.0;
    for (Index i = 0; i < x.size(); ++i)
        m = std::max(m, std::ldexp(std::abs(x[i]), q.exponents[i]));
    return m;
}

} // namespace csor
