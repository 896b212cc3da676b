#pragma once

#include "csor/error.hpp"
#include "csor/norms.hpp"
#include "csor/rankings.hpp"
#include "csor/sor.hpp"
#include "csor/sparse.hpp"
#include "csor/suitable.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

// =============================================================================
// Binary files (all integers and floats little-endian, no padding):
//
//   matrix     "CSOR1" n:u64 nnz:u64 row_offsets:(n+1)*u64 col_indices:nnz*u64
//              values:nnz*f64 diag:n*f64
//   vector     "CSORV" n:u64 entries:n*f64
//   quantized  "CSORQ" n:u64 exponents:n*u8
// =============================================================================

namespace csor {

namespace io {

inline constexpr std::string_view kMatrixMagic = "CSOR1";
inline constexpr std::string_view kVectorMagic = "CSORV";
inline constexpr std::string_view kQuantizedMagic = "CSORQ";

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int k = 0; k < 8; ++k)
        b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
    out.write(b.data(), 8);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 8))
        throw FormatError("truncated binary file");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k)
        v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void expect_magic(std::istream& in, std::string_view magic) {
    std::array<char, 5> b{};
    if (!in.read(b.data(), 5) || std::string_view(b.data(), 5) != magic)
        throw FormatError("missing \"" + std::string(magic) + "\" header");
}

// Guards allocations against corrupt length fields.
inline std::uint64_t get_count(std::istream& in, std::uint64_t max) {
    const std::uint64_t v = get_u64(in);
    if (v > max)
        throw FormatError("implausible length field in binary file");
    return v;
}

inline void expect_end(std::istream& in) {
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes after binary payload");
}

inline std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + p.string());
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create " + p.string());
    return out;
}

inline void finish(std::ostream& out, const std::filesystem::path& p) {
    out.flush();
    if (!out)
        throw IoError("failed writing " + p.string());
}

inline constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;

} // namespace detail

inline void write_matrix(std::ostream& out, const SparseMatrix& a) {
    out.write(kMatrixMagic.data(), 5);
    detail::put_u64(out, a.size());
    detail::put_u64(out, a.nnz());
    for (Index v : a.row_offsets())
        detail::put_u64(out, v);
    for (Index v : a.col_indices())
        detail::put_u64(out, v);
    for (double v : a.values())
        detail::put_f64(out, v);
    for (double v : a.diag())
        detail::put_f64(out, v);
}

inline SparseMatrix read_matrix(std::istream& in) {
    detail::expect_magic(in, kMatrixMagic);
    const auto n = detail::get_count(in, detail::kMaxElements);
    const auto nnz = detail::get_count(in, detail::kMaxElements);
    std::vector<Index> offsets(n + 1), cols(nnz);
    std::vector<double> vals(nnz);
    for (auto& v : offsets)
        v = detail::get_u64(in);
    for (auto& v : cols)
        v = detail::get_u64(in);
    for (auto& v : vals)
        v = detail::get_f64(in);
    auto a = SparseMatrix::from_csr(n, std::move(offsets), std::move(cols), std::move(vals));
    for (Index i = 0; i < n; ++i)
        if (std::bit_cast<std::uint64_t>(detail::get_f64(in)) != std::bit_cast<std::uint64_t>(a.diag(i)))
            throw FormatError("stored diagonal disagrees with the matrix entries");
    detail::expect_end(in);
    return a;
}

inline void write_vector(std::ostream& out, std::span<const double> x) {
    out.write(kVectorMagic.data(), 5);
    detail::put_u64(out, x.size());
    for (double v : x)
        detail::put_f64(out, v);
}

inline DenseVector read_vector(std::istream& in) {
    detail::expect_magic(in, kVectorMagic);
    DenseVector x(detail::get_count(in, detail::kMaxElements));
    for (auto& v : x)
        v = detail::get_f64(in);
    detail::expect_end(in);
    return x;
}

inline void write_quantized(std::ostream& out, const QuantizedWeights& q) {
    out.write(kQuantizedMagic.data(), 5);
    detail::put_u64(out, q.size());
    out.write(reinterpret_cast<const char*>(q.exponents.data()), static_cast<std::streamsize>(q.size()));
}

inline QuantizedWeights read_quantized(std::istream& in) {
    detail::expect_magic(in, kQuantizedMagic);
    QuantizedWeights q;
    q.exponents.resize(detail::get_count(in, detail::kMaxElements));
    if (!in.read(reinterpret_cast<char*>(q.exponents.data()), static_cast<std::streamsize>(q.size())))
        throw FormatError("truncated binary file");
    detail::expect_end(in);
    return q;
}

inline void save_matrix(const std::filesystem::path& p, const SparseMatrix& a) {
    auto out = detail::open_out(p);
    write_matrix(out, a);
    detail::finish(out, p);
}

inline SparseMatrix load_matrix(const std::filesystem::path& p) {
    auto in = detail::open_in(p);
    return read_matrix(in);
}

inline void save_vector(const std::filesystem::path& p, std::span<const double> x) {
    auto out = detail::open_out(p);
    write_vector(out, x);
    detail::finish(out, p);
}

inline DenseVector load_vector(const std::filesystem::path& p) {
    auto in = detail::open_in(p);
    return read_vector(in);
}

inline void save_quantized(const std::filesystem::path& p, const QuantizedWeights& q) {
    auto out = detail::open_out(p);
    write_quantized(out, q);
    detail::finish(out, p);
}

inline QuantizedWeights load_quantized(const std::filesystem::path& p) {
    auto in = detail::open_in(p);
    return read_quantized(in);
}

/// 64-bit FNV-1a digest of a byte stream.
inline std::uint64_t fnv1a64(std::istream& in) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        for (std::streamsize k = 0; k < in.gcount(); ++k) {
            h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(k)]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

inline std::string file_digest(const std::filesystem::path& p) {
    auto in = detail::open_in(p);
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << fnv1a64(in);
    return hex.str();
}

// -----------------------------------------------------------------------------
// JSON documents
// -----------------------------------------------------------------------------

/// Infinite bounds are written as null.
inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json to_json(const SolveCertificate& c) {
    return {{"r", c.r},
            {"omega", c.omega},
            {"omega_max", c.omega_max},
            {"s", finite_or_null(c.s)},
            {"sigma", c.sigma},
            {"iterations", c.iterations},
            {"wnorm_bound", finite_or_null(c.wnorm_bound)},
            {"supnorm_bound", finite_or_null(c.supnorm_bound)},
            {"last_step_supnorm", c.last_step_supnorm},
            {"schedule", c.schedule},
            {"quantized", c.quantized},
            {"certified", c.certified}};
}

inline nlohmann::json to_json(const L1Certificate& c) {
    return {{"alpha", c.alpha},
            {"iterations", c.iterations},
            {"l1_bound", finite_or_null(c.l1_bound)},
            {"schedule", c.schedule},
            {"certified", c.certified}};
}

/// `w_path` names the vector file holding w, empty when there is none.
inline nlohmann::json to_json(const SuitableResult& r, const std::string& w_path) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& b : r.collatz_history)
        hist.push_back({b.lower, b.upper});
    return {{"status", std::string(to_string(r.status))},
            {"sigma", r.sigma},
            {"iterations", r.iterations},
            {"scale", r.scale},
            {"w", w_path.empty() ? nlohmann::json() : nlohmann::json(w_path)},
            {"collatz_history", std::move(hist)}};
}

} // namespace io

} // namespace csor
