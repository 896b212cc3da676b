#include "csor/edge_list.hpp"
#include "csor/sparse.hpp"
#include "support/generators.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <sstream>

using namespace csor;

namespace {

SparseMatrix parse(const std::string& text, EdgeListOptions opts = {}) {
    std::istringstream in(text);
    return load_edge_list(in, opts);
}

} // namespace

TEST_CASE("edge list: plain arcs", "[sparse][ingest]") {
    const auto a = parse("0 1\n1 0\n");
    REQUIRE(a.size() == 2);
    CHECK(a.at(0, 1) == 1.0);
    CHECK(a.at(1, 0) == 1.0);
    CHECK(a.diag(0) == 0.0);
    CHECK(a.diag(1) == 0.0);
    CHECK(a.nnz() == 2);
}

TEST_CASE("edge list: weighted self loop", "[sparse][ingest]") {
    const auto a = parse("0 0 2.5\n");
    REQUIRE(a.size() == 1);
    CHECK(a.diag(0) == 2.5);
}

TEST_CASE("edge list: duplicates sum", "[sparse][ingest]") {
    const auto a = parse("0 1 3\n0 1 4\n");
    CHECK(a.at(0, 1) == 7.0);
    CHECK(a.nnz() == 1);
}

TEST_CASE("edge list: comments, blanks, transpose and default weight", "[sparse][ingest]") {
    const auto a = parse("# header\n\n0 2\n  # indented comment\n1 2 0.5\n", {true, 2.0});
    REQUIRE(a.size() == 3);
    CHECK(a.at(2, 0) == 2.0);
    CHECK(a.at(2, 1) == 0.5);
    CHECK(a.at(0, 2) == 0.0);
    const auto s = summarize(a, true);
    CHECK(s.node_count == 3);
    CHECK(s.arc_count == 2);
    CHECK(s.dangling_count == 2);
    CHECK(s.transposed);
}

TEST_CASE("edge list: errors carry the line number", "[sparse][ingest]") {
    auto line_of = [](const std::string& text) {
        try {
            parse(text);
        } catch (const FormatError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("0 1\n1 2 -3\n") == 2);
    CHECK(line_of("0 1\n# ok\nfoo bar\n") == 3);
    CHECK(line_of("0\n") == 1);
    CHECK(line_of("0 1 2 3\n") == 1);
    CHECK(line_of("-1 2\n") == 1);
    CHECK(line_of("0 1 nan\n") == 1);
    CHECK(line_of("0 1 1x\n") == 1);
}

TEST_CASE("edge list: row sums match a per-line accumulation", "[sparse][ingest]") {
    const std::string text = testing::power_law_edge_list(7, 300, 3);
    const auto a = parse(text);
    std::map<Index, double> per_line;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        Index u, v;
        ls >> u >> v;
        per_line[u] += 1.0;
    }
    const auto sums = row_sums(a);
    for (Index i = 0; i < a.size(); ++i)
        CHECK(sums[i] == Catch::Approx(per_line[i]).margin(1e-12));
}

TEST_CASE("matvec examples", "[sparse][matvec]") {
    const auto p = SparseMatrix::from_dense({{0, 1}, {1, 0}});
    CHECK(matvec(p, DenseVector{3, 1}) == DenseVector{1, 3});
    const auto z = SparseMatrix(4);
    CHECK(matvec(z, DenseVector{1, 2, 3, 4}) == DenseVector(4, 0.0));
    const auto u = SparseMatrix::from_dense({{0, 1}, {0, 0}});
    CHECK(matvec(u, DenseVector{3, 1}) == DenseVector{1, 0});
    CHECK_THROWS_AS(matvec(u, DenseVector{1, 2, 3}), DimensionError);
}

TEST_CASE("parallel matvec is bitwise identical to the serial one", "[sparse][matvec]") {
    std::mt19937_64 rng(11);
    const auto a = testing::random_matrix(rng, 200, 0.1, testing::Structure::General);
    const auto x = testing::random_vector(rng, 200, -1.0, 1.0);
    CHECK(matvec(a, x, 4) == matvec(a, x, 1));
}

TEST_CASE("row_normalize examples", "[sparse][normalize]") {
    {
        const auto [g, d] = row_normalize(SparseMatrix::from_dense({{1, 1}, {0, 0}}));
        CHECK(g == SparseMatrix::from_dense({{0.5, 0.5}, {0, 0}}));
        CHECK(d == DenseVector{0, 1});
    }
    {
        const auto id = SparseMatrix::from_dense({{1, 0}, {0, 1}});
        const auto [g, d] = row_normalize(id);
        CHECK(g == id);
        CHECK(d == DenseVector{0, 0});
    }
    {
        const auto [g, d] = row_normalize(SparseMatrix::from_dense({{2, 6}, {4, 0}}));
        CHECK(g == SparseMatrix::from_dense({{0.25, 0.75}, {1, 0}}));
        CHECK(d == DenseVector{0, 0});
    }
}

TEST_CASE("row_normalize: rows sum to one or are null", "[sparse][normalize][property]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = testing::random_matrix(rng, 40, 0.2, testing::Structure::NullRows);
        const auto [g, d] = row_normalize(a);
        const auto sums = row_sums(g);
        for (Index i = 0; i < a.size(); ++i) {
            if (a.row_is_null(i)) {
                CHECK(d[i] == 1.0);
                CHECK(sums[i] == 0.0);
            } else {
                CHECK(d[i] == 0.0);
                CHECK(std::abs(sums[i] - 1.0) <= 1e-15);
            }
        }
    }
}

TEST_CASE("transpose examples and properties", "[sparse][transpose]") {
    CHECK(transpose(SparseMatrix::from_dense({{0, 1}, {0, 0}})) == SparseMatrix::from_dense({{0, 0}, {1, 0}}));
    const auto sym = SparseMatrix::from_dense({{1, 2}, {2, 3}});
    CHECK(transpose(sym) == sym);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = testing::random_matrix(rng, 5 + trial % 20, 0.3, testing::Structure::General);
        const auto at = transpose(a);
        CHECK(transpose(at) == a);
        DenseVector col_sums(a.size(), 0.0);
        for (Index i = 0; i < a.size(); ++i)
            for (Index j = 0; j < a.size(); ++j)
                col_sums[j] += a.at(i, j);
        const auto sums = row_sums(at);
        for (Index j = 0; j < a.size(); ++j)
            CHECK(sums[j] == Catch::Approx(col_sums[j]).margin(1e-12));
    }
}

TEST_CASE("factories reject invalid input", "[sparse]") {
    CHECK_THROWS_AS(SparseMatrix::from_triplets(2, {{0, 2, 1.0}}), DomainError);
    CHECK_THROWS_AS(SparseMatrix::from_triplets(2, {{0, 1, -1.0}}), DomainError);
    CHECK_THROWS_AS(SparseMatrix::from_csr(2, {0, 1, 1}, {0}, {0.0}), FormatError);
    CHECK_THROWS_AS(SparseMatrix::from_csr(2, {0, 2, 2}, {1, 0}, {1.0, 1.0}), FormatError);
    const auto zero_dropped = SparseMatrix::from_triplets(2, {{0, 1, 0.0}, {1, 1, 0.0}});
    CHECK(zero_dropped.nnz() == 0);
}
