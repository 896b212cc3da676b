#pragma once

#include "csor/error.hpp"
#include "csor/sparse.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace csor {

struct EdgeListOptions {
    bool transpose = false;      ///< store arc (u,v) at (v,u)
    double default_weight = 1.0; ///< weight of two-column lines
};

struct GraphIngestSummary {
    Index node_count = 0;
    std::size_t arc_count = 0; ///< stored entries after duplicate summing
    Index dangling_count = 0;  ///< all-zero rows
    bool transposed = false;
};

inline GraphIngestSummary summarize(const SparseMatrix& a, bool transposed) {
    GraphIngestSummary s;
    s.node_count = a.size();
    s.arc_count = a.nnz();
    s.transposed = transposed;
    for (Index i = 0; i < a.size(); ++i)
        s.dangling_count += a.row_is_null(i) ? 1 : 0;
    return s;
}

namespace detail {

inline std::string_view next_token(std::string_view& rest) {
    std::size_t b = 0;
    while (b < rest.size() && (rest[b] == ' ' || rest[b] == '\t' || rest[b] == '\r'))
        ++b;
    std::size_t e = b;
    while (e < rest.size() && rest[e] != ' ' && rest[e] != '\t' && rest[e] != '\r')
        ++e;
    const auto tok = rest.substr(b, e - b);
    rest.remove_prefix(e);
    return tok;
}

inline bool parse_node(std::string_view tok, Index& out) {
    unsigned long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        return false;
    out = static_cast<Index>(v);
    return true;
}

} // namespace detail

/// Reads "u v" / "u v weight" lines; '#' lines and blank lines are skipped.
/// Duplicate arcs sum. The dimension is 1 + the largest node id.
inline SparseMatrix load_edge_list(std::istream& in, const EdgeListOptions& options = {}) {
    if (!(options.default_weight >= 0.0) || !std::isfinite(options.default_weight))
        throw DomainError("default weight must be finite and nonnegative");

    std::vector<Triplet> arcs;
    Index max_id = 0;
    bool any = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view rest = line;
        const auto first = detail::next_token(rest);
        if (first.empty() || first.front() == '#')
            continue;
        const auto second = detail::next_token(rest);
        const auto third = detail::next_token(rest);
        if (!detail::next_token(rest).empty())
            throw FormatError("expected \"u v\" or \"u v weight\"", line_no);

        Index u = 0, v = 0;
        if (second.empty() || !detail::parse_node(first, u) || !detail::parse_node(second, v))
            throw FormatError("node ids must be nonnegative integers", line_no);
        double w = options.default_weight;
        if (!third.empty()) {
            const auto [ptr, ec] = std::from_chars(third.data(), third.data() + third.size(), w);
            if (ec != std::errc{} || ptr != third.data() + third.size() || !std::isfinite(w))
                throw FormatError("malformed weight", line_no);
            if (w < 0.0)
                throw FormatError("negative weight", line_no);
        }
        if (options.transpose)
            std::swap(u, v);
        max_id = std::max({max_id, u, v});
        any = true;
        arcs.push_back({u, v, w});
    }
    if (in.bad())
        throw IoError("failed while reading edge list");
    return SparseMatrix::from_triplets(any ? max_id + 1 : 0, std::move(arcs));
}

} // namespace csor
