#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rigidlab/periodic.hpp"

using namespace rigidlab;

namespace {

const IntMatrix kCat = IntMatrix::from({{2, 1}, {1, 1}});
const double kLogMu = std::log((3.0 + std::sqrt(5.0)) / 2.0);

PerturbedMap cat_linear() { return PerturbedMap(kCat, TrigDisplacement{}); }

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

} // namespace

TEST_CASE("linear cat orbits match lattice counts", "[periodic]") {
    auto out = continue_orbits(cat_linear(), 2);
    REQUIRE(out.diverged_seeds == 0);
    // period 1: the origin; period 2: (5 - 1)/2 = 2 orbits
    int p1 = 0, p2 = 0;
    for (const auto& r : out.records) {
        if (r.period == 1) ++p1;
        if (r.period == 2) ++p2;
        CHECK(r.residual < 1e-10);
    }
    CHECK(p1 == 1);
    CHECK(p2 == 2);
    CHECK(torus_dist(out.records[0].points[0], Vec::Zero(2)) < 1e-12);

    SECTION("all exponents are the linear ones") {
        for (const auto& r : out.records) {
            CHECK(std::abs(r.exponents[0] + kLogMu) < 1e-10);
            CHECK(std::abs(r.exponents[1] - kLogMu) < 1e-10);
        }
    }
}

TEST_CASE("perturbed orbits converge quickly", "[periodic]") {
    auto out = continue_orbits(cat_generic(0.03), 4);
    CHECK(out.diverged_seeds == 0);
    // orbit counts per period: 1, 2, 5, 10
    std::map<int, int> counts;
    for (const auto& r : out.records) counts[r.period]++;
    CHECK(counts[1] == 1);
    CHECK(counts[2] == 2);
    CHECK(counts[3] == 5);
    CHECK(counts[4] == 10);
    for (const auto& r : out.records) {
        CHECK(r.residual < 1e-10);
        CHECK(r.newton_iterations <= 10);
    }
}

TEST_CASE("uncertified map is refused", "[periodic]") {
    // construct a map below the invertibility bound but above the cone margin
    std::vector<TrigMode> ms = {{Eigen::Vector2i(1, 0), Eigen::Vector2d(0.0, 1.0), 0.0}};
    PerturbedMap f(kCat, TrigDisplacement(ms).scaled(0.055));
    CHECK_FALSE(f.anosov_certified());
    CHECK_THROWS_AS(continue_orbits(f, 2), PerturbationTooLarge);
}

TEST_CASE("monodromy spectra are cyclic invariants", "[periodic]") {
    PerturbedMap f = cat_generic(0.03);
    auto out = continue_orbits(f, 3);
    for (const auto& r : out.records) {
        if (r.period < 2) continue;
        // recompute the monodromy starting from the second orbit point
        Mat mono = Mat::Identity(2, 2);
        Vec z = r.points[1];
        for (int s = 0; s < r.period; ++s) {
            mono = f.jacobian(z).matrix * mono;
            z = f.eval(z);
        }
        auto mods = detail::moduli_of(mono);
        for (std::size_t i = 0; i < mods.size(); ++i)
            CHECK(std::abs(mods[i] - r.moduli[i]) < 1e-8);
    }
}

TEST_CASE("period doubling consistency", "[periodic]") {
    PerturbedMap f = cat_generic(0.03);
    auto out = continue_orbits(f, 2);
    for (const auto& r : out.records) {
        // treat the tau-orbit as a 2tau revisit: exponents must agree
        Mat m2 = r.monodromy * r.monodromy;
        auto mods = detail::moduli_of(m2);
        for (std::size_t i = 0; i < mods.size(); ++i) {
            double e2 = std::log(mods[i]) / (2.0 * r.period);
            CHECK(std::abs(e2 - r.exponents[i]) < 1e-9);
        }
    }
}

TEST_CASE("skew instance has constant periodic data matching L", "[periodic]") {
    PerturbedMap f = desk_instance();
    auto out = continue_orbits(f, 3);
    REQUIRE(out.records.size() >= 2);

    SECTION("monodromy spectrum is the block-power spectrum") {
        for (const auto& r : out.records) {
            std::vector<double> expected = {-2 * kLogMu, -kLogMu, kLogMu, 2 * kLogMu};
            for (int i = 0; i < 4; ++i)
                CHECK(std::abs(r.exponents[static_cast<std::size_t>(i)] -
                               expected[static_cast<std::size_t>(i)]) < 1e-8);
        }
    }
    SECTION("verdict CONSTANT and MATCHES_LINEAR") {
        auto rep = periodic_data(out.records, default_periodic_tolerance(f));
        CHECK(rep.verdict == PeriodicVerdict::Constant);
        CHECK(rep.max_deviation < 1e-8);
        auto cmp = compare_with_linear(rep, f.linear_analysis().spectral);
        CHECK(cmp.matches);
        CHECK(cmp.max_deviation < 1e-8);
    }
}

TEST_CASE("linear map periodic data is exactly constant", "[periodic]") {
    auto out = continue_orbits(cat_linear(), 3);
    auto rep = periodic_data(out.records, kPeriodicTolGeneric);
    CHECK(rep.verdict == PeriodicVerdict::Constant);
    CHECK(rep.max_deviation < 1e-10);
    auto cmp = compare_with_linear(rep, cat_linear().linear_analysis().spectral);
    CHECK(cmp.matches);
    CHECK(cmp.max_deviation < 1e-10);
}

TEST_CASE("strong generic perturbation breaks constant data", "[periodic]") {
    PerturbedMap f = cat_generic(0.05);
    auto out = continue_orbits(f, 4);
    auto rep = periodic_data(out.records, default_periodic_tolerance(f));
    CHECK(rep.verdict == PeriodicVerdict::Nonconstant);
    CHECK(rep.max_deviation > 1e-4);
    // witness pair is reported
    CHECK(rep.witness_a != rep.witness_b);
    CHECK_THROWS_AS(compare_with_linear(rep, f.linear_analysis().spectral), Error);
}

TEST_CASE("artificially scaled data differs from linear", "[periodic]") {
    auto out = continue_orbits(cat_linear(), 2);
    for (auto& r : out.records)
        for (auto& e : r.exponents) e *= 1.05;
    auto rep = periodic_data(out.records, kPeriodicTolGeneric);
    REQUIRE(rep.verdict == PeriodicVerdict::Constant);
    auto cmp = compare_with_linear(rep, cat_linear().linear_analysis().spectral);
    CHECK_FALSE(cmp.matches);
    CHECK(cmp.first_fail_index == 0);
}
