#include "csor/sor.hpp"
#include "csor/suitable.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace csor;

namespace {

const SparseMatrix kSwap = SparseMatrix::from_dense({{0, 1}, {1, 0}});

SorConfig config(double s, double sigma, WeightVector w, double omega = 1.0) {
    SorConfig c;
    c.s = s;
    c.sigma = sigma;
    c.omega = omega;
    c.w = std::move(w);
    return c;
}

DenseVector textbook_jacobi(const testing::Dense& a, const DenseVector& b, const DenseVector& x, double s) {
    const std::size_t n = b.size();
    DenseVector next(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = b[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && a[i][j] != 0.0)
                acc += a[i][j] * x[j];
        next[i] = acc / (s - a[i][i]);
    }
    return next;
}

DenseVector textbook_gauss_seidel(const testing::Dense& a, const DenseVector& b, DenseVector x, double s) {
    const std::size_t n = b.size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = b[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && a[i][j] != 0.0)
                acc += a[i][j] * x[j];
        x[i] = acc / (s - a[i][i]);
    }
    return x;
}

} // namespace

TEST_CASE("contraction_factor examples", "[sor][theory]") {
    const DenseVector zero2(2, 0.0);
    CHECK(contraction_factor(zero2, 3.0, 2.0, 1.0) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    for (double s : {1.5, 4.0, 100.0})
        CHECK(contraction_factor(zero2, s, 1.2, 1.0) == Catch::Approx(1.2 / s).epsilon(1e-15));
    double prev = 0.0;
    for (double omega : {1e-1, 1e-3, 1e-6, 1e-9}) {
        const double r = contraction_factor(zero2, 3.0, 2.0, omega);
        CHECK(r < 1.0);
        CHECK(r > prev);
        prev = r;
    }
    CHECK(prev > 1.0 - 1e-8);
}

TEST_CASE("omega_max examples", "[sor][theory]") {
    const DenseVector zero2(2, 0.0);
    CHECK(omega_max(zero2, 3.0, 2.0) == Catch::Approx(1.2).epsilon(1e-15));
    CHECK(omega_max(zero2, 2.0 + 1e-9, 2.0) > 1.0);
    CHECK(omega_max(zero2, 2.0 + 1e-9, 2.0) < 1.0 + 1e-9);
    // A diagonal entry close to sigma only shrinks its own ratio.
    CHECK(omega_max(DenseVector{0.0, 1.999}, 3.0, 2.0) == omega_max(zero2, 3.0, 2.0));
    for (double s : {2.1, 3.0, 10.0}) {
        const double om = omega_max(DenseVector{0.5, 0.0, 1.0}, s, 2.0);
        CHECK(om > 1.0);
        CHECK(om < 2.0);
    }
}

TEST_CASE("contraction parameters reject invalid inputs", "[sor][theory]") {
    const DenseVector zero2(2, 0.0);
    CHECK_THROWS_AS(contraction_factor(zero2, 3.0, 2.0, 0.0), DomainError);
    CHECK_THROWS_AS(contraction_factor(zero2, 3.0, 2.0, 1.25), DomainError);
    CHECK_THROWS_AS(contraction_factor(zero2, 2.0, 2.0, 1.0), DomainError);
    CHECK_THROWS_AS(omega_max(DenseVector{2.0, 0.0}, 3.0, 2.0), DomainError);
}

TEST_CASE("omega = 1 minimizes the contraction factor", "[sor][theory]") {
    const DenseVector diag{0.0, 0.3, 0.7};
    const double best = contraction_factor(diag, 2.5, 1.0, 1.0);
    const double om = omega_max(diag, 2.5, 1.0);
    for (int k = 1; k < 200; ++k) {
        const double omega = om * k / 200.0;
        CHECK(contraction_factor(diag, 2.5, 1.0, omega) >= best);
    }
}

TEST_CASE("sor_step examples", "[sor][step]") {
    const DenseVector b{1, 1}, x0{0, 0};
    const auto cfg = config(3.0, 2.0, WeightVector::ones(2));
    const auto gs = sor_step(kSwap, b, x0, cfg, Schedule::sequential({0, 1}), 0);
    CHECK(gs[0] == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(gs[1] == Catch::Approx(4.0 / 9.0).epsilon(1e-15));
    const auto jac = sor_step(kSwap, b, x0, cfg, Schedule::jacobi(), 0);
    CHECK(jac[0] == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(jac[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(sor_step(kSwap, DenseVector{0, 0}, x0, cfg, Schedule::sequential(), 0) == DenseVector{0, 0});
    const auto rev = sor_step(kSwap, b, x0, cfg, Schedule::sequential({1, 0}), 0);
    CHECK(rev[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(rev[0] == Catch::Approx(4.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("plan execution matches the sequential and Jacobi fast paths", "[sor][schedule]") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        const auto a = testing::random_matrix(rng, 3 + trial, 0.3, testing::Structure::General);
        const double s = 2.0 * (spectral_radius_bracket(a, 1).upper + 1.0);
        const auto b = testing::random_vector(rng, a.size(), 0.0, 1.0);
        const auto x = testing::random_vector(rng, a.size(), -1.0, 1.0);
        std::vector<Index> perm(a.size());
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (double omega : {0.7, 1.0, 1.1}) {
            DenseVector fast(a.size()), planned(a.size());
            const auto seq = Schedule::sequential(perm);
            sor_step_sequential(a, b, x, fast, s, omega, perm);
            sor_step_plan(a, b, x, planned, s, omega, seq.plan(a, 0));
            CHECK(fast == planned);
            sor_step_jacobi(a, b, x, fast, s, omega);
            sor_step_plan(a, b, x, planned, s, omega, Schedule::jacobi().plan(a, 0));
            CHECK(fast == planned);
        }
    }
}

TEST_CASE("schedule degeneration to textbook Jacobi and Gauss-Seidel", "[sor][schedule]") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = testing::random_matrix(rng, 2 + trial, 0.4, testing::Structure::General);
        const auto d = testing::to_dense(a);
        const double s = 1.0 + spectral_radius_bracket(a, 1).upper;
        const auto b = testing::random_vector(rng, a.size(), 0.0, 1.0);
        auto x = testing::random_vector(rng, a.size(), 0.0, 1.0);
        const auto cfg = config(s, s / 2, WeightVector::ones(a.size()));
        CHECK(sor_step(a, b, x, cfg, Schedule::jacobi(), 0) == textbook_jacobi(d, b, x, s));
        CHECK(sor_step(a, b, x, cfg, Schedule::sequential(), 0) == textbook_gauss_seidel(d, b, x, s));
    }
}

TEST_CASE("random preorders are compatible and reproducible", "[sor][schedule]") {
    std::mt19937_64 rng(47);
    const auto a = testing::random_matrix(rng, 30, 0.3, testing::Structure::General);
    const auto sched = Schedule::random_preorder(99);
    bool saw_jacobi_like = false, saw_all_previous = false, saw_fresh_read = false;
    for (std::size_t t = 0; t < 200; ++t) {
        const auto p = sched.plan(a, t);
        REQUIRE(is_compatible(a, p));
        CHECK(p == Schedule::random_preorder(99).plan(a, t));
        const bool all_tied = std::all_of(p.rank.begin(), p.rank.end(), [](auto r) { return r == 0; });
        const bool all_prev = std::all_of(p.previous.begin(), p.previous.end(), [](auto f) { return f == 1; });
        saw_jacobi_like |= all_tied;
        saw_all_previous |= all_prev && !all_tied;
        saw_fresh_read |= !all_prev;
    }
    CHECK(saw_jacobi_like);
    CHECK(saw_all_previous);
    CHECK(saw_fresh_read);
    CHECK(Schedule::random_preorder(1).plan(a, 0) != Schedule::random_preorder(2).plan(a, 0));
}

TEST_CASE("schedule parsing", "[sor][schedule]") {
    CHECK(Schedule::parse("seq").kind() == Schedule::Kind::Sequential);
    CHECK(Schedule::parse("jacobi").kind() == Schedule::Kind::Jacobi);
    CHECK(Schedule::parse("random:17").seed() == 17);
    CHECK(Schedule::parse("par:4").workers() == 4);
    CHECK(Schedule::parse("random:17").tag() == "random:17");
    CHECK_THROWS_AS(Schedule::parse("random"), FormatError);
    CHECK_THROWS_AS(Schedule::parse("random:"), FormatError);
    CHECK_THROWS_AS(Schedule::parse("par:0"), FormatError);
    CHECK_THROWS_AS(Schedule::parse("gauss"), FormatError);
    CHECK_THROWS_AS(Schedule::sequential({0, 0}).sweep_order(2), DomainError);
}

TEST_CASE("incompatible plans are rejected", "[sor][schedule]") {
    StepPlan bad;
    bad.rank = {0, 0};
    bad.previous = {0, 0}; // reads a simultaneous update as fresh
    DenseVector next(2);
    CHECK_FALSE(is_compatible(kSwap, bad));
    CHECK_THROWS_AS(sor_step_plan(kSwap, DenseVector{1, 1}, DenseVector{0, 0}, next, 3.0, 1.0, bad), DomainError);
    CHECK_THROWS_AS(Schedule::replay({bad}).plan(kSwap, 0), DomainError);
}

TEST_CASE("solve: two-cycle example", "[sor][solve]") {
    const DenseVector b{1, 1};
    auto cfg = config(3.0, 2.0, WeightVector::ones(2));
    cfg.target_error = 1e-12;
    std::vector<double> errors;
    const DenseVector exact{0.5, 0.5};
    const auto res = solve(kSwap, b, cfg, Schedule::sequential(), [&](std::size_t, auto, auto next) {
        errors.push_back(testing::max_abs_diff(exact, DenseVector(next.begin(), next.end())));
    });
    REQUIRE(errors.size() >= 2);
    CHECK(errors[0] == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(errors[0] <= 2.0 / 3.0 * 0.5);
    CHECK(res.cert.certified);
    CHECK(res.cert.r == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(testing::max_abs_diff(res.x, exact) <= res.cert.supnorm_bound);
}

TEST_CASE("solve: zero right-hand side is certified at once", "[sor][solve]") {
    const auto cfg = config(3.0, 2.0, WeightVector::ones(2));
    const auto res = solve(kSwap, DenseVector{0, 0}, cfg, Schedule::jacobi());
    CHECK(res.x == DenseVector{0, 0});
    CHECK(res.cert.iterations == 1);
    CHECK(res.cert.supnorm_bound == 0.0);
    CHECK(res.cert.certified);
}

TEST_CASE("solve: precondition failures", "[sor][solve]") {
    const DenseVector b{1, 1};
    CHECK_THROWS_AS(solve(kSwap, b, config(3.0, 0.5, WeightVector::ones(2)), Schedule::sequential()),
                    NotSuitableError);
    CHECK_THROWS_AS(solve(kSwap, b, config(2.0, 2.0, WeightVector::ones(2)), Schedule::sequential()), DomainError);
    CHECK_THROWS_AS(solve(kSwap, b, config(3.0, 2.0, WeightVector::ones(2), 1.5), Schedule::sequential()),
                    DomainError);
    auto cfg = config(3.0, 2.0, WeightVector::ones(2));
    cfg.max_iterations = 2;
    cfg.target_error = 1e-15;
    const auto res = solve(kSwap, b, cfg, Schedule::sequential());
    CHECK_FALSE(res.cert.certified);
    CHECK(res.cert.iterations == 2);
}

TEST_CASE("solve: certified bound dominates the dense-oracle error", "[sor][solve][property]") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 25; ++trial) {
        auto raw = testing::random_matrix(rng, 50, 0.1, testing::Structure::General);
        // Rescale so that rho(A) = 0.8 < s = 1.
        const double rho = testing::dense_spectral_radius(raw);
        std::vector<Triplet> t;
        for (Index i = 0; i < raw.size(); ++i)
            for (Index j = 0; j < raw.size(); ++j)
                if (raw.at(i, j) != 0.0)
                    t.push_back({i, j, raw.at(i, j) * 0.8 / rho});
        const auto a = SparseMatrix::from_triplets(50, t);
        const auto suit = compute_suitable(a, 0.9);
        REQUIRE(suit.ok());
        const auto b = testing::random_vector(rng, 50, 0.0, 1.0);
        const auto exact = testing::dense_shifted_solve(a, 1.0, b);
        for (const auto& sched : {Schedule::sequential(), Schedule::jacobi(), Schedule::random_preorder(trial)}) {
            auto cfg = config(1.0, 0.9, *suit.w);
            cfg.target_error = 1e-8;
            const auto res = solve(a, b, cfg, sched);
            REQUIRE(res.cert.certified);
            CHECK(testing::max_abs_diff(res.x, exact) <= res.cert.supnorm_bound);
            CHECK(certified_sup_bound(res.cert, *suit.w) >= res.cert.supnorm_bound);
        }
    }
}

TEST_CASE("solve: quantized stopping dominates the full-precision one", "[sor][solve][quantize]") {
    std::mt19937_64 rng(59);
    const auto a = testing::random_matrix(rng, 30, 0.2, testing::Structure::NullRows);
    const double upper = spectral_radius_bracket(a, 100).upper;
    const auto suit = compute_suitable(a, 1.1 * upper);
    REQUIRE(suit.ok());
    const auto b = testing::random_vector(rng, 30, 0.0, 1.0);
    auto cfg = config(1.5 * upper, 1.1 * upper, *suit.w);
    cfg.target_error = 1e-10;
    const auto plain = solve(a, b, cfg, Schedule::sequential());
    cfg.use_quantized = true;
    const auto quant = solve(a, b, cfg, Schedule::sequential());
    CHECK(quant.cert.quantized);
    CHECK(quant.cert.iterations >= plain.cert.iterations);
    const auto exact = testing::dense_shifted_solve(a, 1.5 * upper, b);
    CHECK(testing::max_abs_diff(quant.x, exact) <= quant.cert.supnorm_bound);
}

TEST_CASE("certified_sup_bound uses the weight spread", "[sor][solve]") {
    SolveCertificate c;
    c.r = 0.5;
    c.last_step_supnorm = 0.25;
    CHECK(certified_sup_bound(c, WeightVector::ones(3)) == 0.25);
    CHECK(certified_sup_bound(c, WeightVector(DenseVector{1.0, 0.5})) == 0.5);
}

TEST_CASE("per-iteration contraction under random preorders", "[sor][theory][property]") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 40; ++trial) {
        const auto a = testing::random_matrix(rng, 4 + trial % 30, 0.3, testing::Structure::General);
        const double upper = spectral_radius_bracket(a, 50).upper;
        if (upper == 0.0)
            continue;
        const double sigma = 1.1 * upper, s = 1.5 * upper;
        const auto suit = compute_suitable(a, sigma);
        REQUIRE(suit.ok());
        const auto& w = *suit.w;
        const auto b = testing::random_vector(rng, a.size(), 0.0, 1.0);
        const auto exact = testing::dense_shifted_solve(a, s, b);
        const double scale = testing::wnorm_of_diff(exact, DenseVector(a.size(), 0.0), w.values());
        const double om = omega_max(a.diag(), s, sigma);
        for (double omega : {0.25, 1.0, (1.0 + om) / 2}) {
            auto cfg = config(s, sigma, w, omega);
            cfg.max_iterations = 30;
            cfg.target_error = 1e-300;
            const double r = contraction_factor(a.diag(), s, sigma, omega);
            solve(a, b, cfg, Schedule::random_preorder(1000 + trial), [&](std::size_t, auto prev, auto next) {
                const double before = testing::wnorm_of_diff(exact, prev, w.values());
                const double after = testing::wnorm_of_diff(exact, next, w.values());
                CHECK(after <= r * before + 1e-12 * scale);
                double step = 0.0;
                for (Index i = 0; i < a.size(); ++i)
                    step = std::max(step, std::abs(next[i] - prev[i]) / w[i]);
                CHECK(after <= r / (1 - r) * step + 1e-12 * scale);
            });
        }
    }
}
