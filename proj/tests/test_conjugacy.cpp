#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rigidlab/conjugacy.hpp"

using namespace rigidlab;

namespace {

const IntMatrix kCat = IntMatrix::from({{2, 1}, {1, 1}});
const double kMu = (3.0 + std::sqrt(5.0)) / 2.0;

PerturbedMap cat_generic(double eps) {
    std::vector<TrigMode> ms = {
        {Eigen::Vector2i(1, 0), Eigen::Vector2d(0.12, 0.32), 0.4},
        {Eigen::Vector2i(0, 1), Eigen::Vector2d(0.28, -0.12), 1.1},
        {Eigen::Vector2i(1, 1), Eigen::Vector2d(-0.08, 0.16), 2.3}};
    return make_generic(kCat, ms, eps);
}

PerturbedMap desk_instance(double eps = 0.01) {
    return make_counterexample(kCat, kCat, 1, 2,
                               TrigScalar::cosine(Eigen::Vector2i(1, 0), 1.0), eps);
}

Vec rand_point(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = u(rng);
    return x;
}

// Weierstrass-type calibration series with exact Hoelder exponent 1/2.
double weierstrass_half(double t) {
    double v = 0;
    for (int k = 0; k <= 20; ++k)
        v += std::pow(2.0, -0.5 * k) * std::cos(2.0 * M_PI * std::ldexp(1.0, k) * t);
    return v;
}

} // namespace

TEST_CASE("linear map has zero conjugacy displacement", "[conjugacy]") {
    PerturbedMap f(kCat, TrigDisplacement{});
    auto h = solve_conjugacy(f);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        Vec x = rand_point(rng, 2);
        CHECK(h.displacement(x).norm() < 1e-14);
        CHECK(h.equation_residual(x) < 1e-14);
    }
}

TEST_CASE("series conjugacy satisfies its equation on a grid", "[conjugacy]") {
    PerturbedMap f = cat_generic(0.01);
    auto h = solve_conjugacy(f, 1e-10);
    auto grid = residual_on_grid(2, 64, 2, [&](const Vec& x) { return h.equation_residual(x); });
    CHECK(grid.sup < 1e-8);
    CHECK(grid.sup <= h.tail_bound() * (1.0 + 1e-6) + 1e-12);

    SECTION("homotopy: u is genuinely periodic") {
        std::mt19937_64 rng(9);
        for (int t = 0; t < 20; ++t) {
            Vec x = rand_point(rng, 2);
            Vec v(2);
            v << (t % 3) - 1, (t % 5) - 2;
            CHECK((h.displacement(x + v) - h.displacement(x)).norm() < 1e-10);
        }
    }
}

TEST_CASE("skew series solves the twisted equation", "[conjugacy]") {
    PerturbedMap f = desk_instance();
    auto eta = skew_series(f, 40);
    CHECK(eta.tail_bound() ==
          Catch::Approx(0.01 * std::pow(kMu, -40.0) / (kMu - 1.0)).epsilon(1e-12));
    std::mt19937_64 rng(17);
    for (int t = 0; t < 1000; ++t) {
        Vec x = rand_point(rng, 2);
        CHECK(eta.equation_residual(x) <= eta.tail_bound() * (1.0 + 1e-9) + 1e-14);
    }

    SECTION("psi = 0 gives eta = 0") {
        PerturbedMap f0 = make_counterexample(kCat, kCat, 1, 2,
                                              TrigScalar::cosine(Eigen::Vector2i(1, 0), 1.0), 0.0);
        auto eta0 = skew_series(f0, 40);
        std::mt19937_64 r2(5);
        for (int t = 0; t < 10; ++t) CHECK(eta0.eta(rand_point(r2, 2)) == 0.0);
    }
}

TEST_CASE("skew series agrees with the general band series", "[conjugacy]") {
    PerturbedMap f = desk_instance();
    auto h = solve_conjugacy(f, 1e-11);
    auto eta = skew_series(f, 60);
    const Vec e_u = f.skew()->e_u;
    std::mt19937_64 rng(23);
    for (int t = 0; t < 50; ++t) {
        Vec xy = rand_point(rng, 4);
        Vec u = h.displacement(xy);
        // u must live in the fiber band only: u = -eta(x) * (0, e_u)
        double e = eta.eta(xy.head(2));
        Vec expected = Vec::Zero(4);
        expected.tail(2) = -e * e_u;
        CHECK((u - expected).lpNorm<Eigen::Infinity>() < 1e-8);
    }

    SECTION("band coefficients vanish outside the shear band") {
        Vec xy = rand_point(rng, 4);
        Vec coeffs = h.band_values(xy);
        // bands ascending by modulus: mu^-2, mu^-1, mu, mu^2; shear sits at mu
        CHECK(std::abs(coeffs[0]) < 1e-12);
        CHECK(std::abs(coeffs[1]) < 1e-12);
        CHECK(std::abs(coeffs[3]) < 1e-12);
        CHECK(std::abs(coeffs[2]) > 1e-4);
    }
}

TEST_CASE("reverse conjugacy composes to the identity", "[conjugacy]") {
    PerturbedMap f = cat_generic(0.01);
    auto h = solve_conjugacy(f, 1e-11);
    ReverseConjugacyField hbar(f, 32);
    CHECK(hbar.residual() < 1e-9);
    double worst = 0.0;
    for (std::size_t idx = 0; idx < hbar.size(); ++idx) {
        Vec y = hbar.apply_at(idx);             // hbar(x)
        Vec back = h.apply(y);                  // h(hbar(x))
        worst = std::max(worst, torus_dist(back, hbar.point_of(idx)));
    }
    CHECK(worst < 10.0 * (hbar.residual() + h.tail_bound()) + 1e-10);
}

TEST_CASE("regularity estimator calibration", "[conjugacy]") {
    const std::size_t m = 1 << 16;
    SECTION("linear function is Lipschitz with slope 1") {
        std::vector<double> g(m);
        for (std::size_t i = 0; i < m; ++i) g[i] = static_cast<double>(i) / m;
        auto est = estimate_regularity(g);
        CHECK(est.alpha >= 0.95);
        CHECK(est.verdict == LipschitzVerdict::Lipschitz);
    }
    SECTION("Weierstrass exponent 1/2") {
        std::vector<double> g(m);
        for (std::size_t i = 0; i < m; ++i) g[i] = weierstrass_half(static_cast<double>(i) / m);
        auto est = estimate_regularity(g);
        CHECK(est.alpha > 0.45);
        CHECK(est.alpha < 0.55);
        CHECK(est.verdict == LipschitzVerdict::NotLipschitz);
    }
    SECTION("scaling invariance") {
        std::vector<double> g(m), g5(m);
        for (std::size_t i = 0; i < m; ++i) {
            g[i] = weierstrass_half(static_cast<double>(i) / m);
            g5[i] = -5.0 * g[i];
        }
        auto a = estimate_regularity(g);
        auto b = estimate_regularity(g5);
        CHECK(std::abs(a.alpha - b.alpha) < 1e-12);
        CHECK(a.verdict == b.verdict);
    }
    SECTION("sample-count precondition") {
        std::vector<double> g(100, 0.0);
        CHECK_THROWS_AS(estimate_regularity(g), InsufficientScales);
    }
}

TEST_CASE("desk-instance eta measures the predicted critical exponent", "[conjugacy]") {
    PerturbedMap f = desk_instance();
    auto eta = skew_series(f, 45);
    // sample along the expanding direction of the base block
    const auto& spa = analyze(kCat).spectral;
    Vec dir = spa.eigenvectors.col(1);
    std::mt19937_64 rng(31);
    Vec x0 = rand_point(rng, 2);
    auto samples = sample_along_line([&](const Vec& x) { return eta.eta(torus_wrap(x)); }, x0,
                                     dir, 1 << 17);
    auto est = estimate_regularity(samples);
    CHECK(std::abs(est.alpha - f.skew()->alpha_star) <= 0.1);
    CHECK(est.verdict == LipschitzVerdict::NotLipschitz);
}

TEST_CASE("rigidity verdicts", "[conjugacy]") {
    SECTION("linear cat map: rigid expected") {
        PerturbedMap f(kCat, TrigDisplacement{});
        auto out = continue_orbits(f, 3);
        auto rep = periodic_data(out.records, kPeriodicTolGeneric);
        auto v = rigidity_verdict(rep, f.linear_analysis(), std::nullopt);
        CHECK(v.classification == RigidityClass::RigidExpected);
    }
    SECTION("desk instance: counterexample regime") {
        PerturbedMap f = desk_instance();
        auto out = continue_orbits(f, 3);
        auto rep = periodic_data(out.records, default_periodic_tolerance(f));
        RegularityEstimate reg;
        reg.alpha = 0.5;
        reg.verdict = LipschitzVerdict::NotLipschitz;
        auto v = rigidity_verdict(rep, f.linear_analysis(), reg);
        CHECK(v.classification == RigidityClass::CounterexampleRegime);
    }
    SECTION("strong generic perturbation: obstructed") {
        PerturbedMap f = cat_generic(0.05);
        auto out = continue_orbits(f, 4);
        auto rep = periodic_data(out.records, default_periodic_tolerance(f));
        auto v = rigidity_verdict(rep, f.linear_analysis(), std::nullopt);
        CHECK(v.classification == RigidityClass::Obstructed);
    }
}
