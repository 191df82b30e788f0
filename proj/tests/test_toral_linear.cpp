#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "rigidlab/toral_linear.hpp"

using namespace rigidlab;

namespace {

const IntMatrix kCat = IntMatrix::from({{2, 1}, {1, 1}});

// Companion-style matrix of x^3 - 3x^2 + 1 (last row -1 0 3).
const IntMatrix kCompanion3 = IntMatrix::from({{0, 1, 0}, {0, 0, 1}, {-1, 0, 3}});

// Test-side oracle: isolate the real roots of a cubic by sign changes and
// bisection on the exact polynomial, independent of the library's root path.
double bisect_root(const IntPolynomial& p, double lo, double hi) {
    double flo = p.eval(lo);
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = p.eval(mid);
        if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("cat map spectral data", "[toral_linear]") {
    auto an = analyze(kCat);
    // roots of x^2 - 3x + 1
    const double mu = (3.0 + std::sqrt(5.0)) / 2.0;
    REQUIRE(an.spectral.real_spectrum);
    REQUIRE(an.spectral.hyperbolic);
    REQUIRE(an.spectral.distinct_modulus);
    REQUIRE(an.spectral.stable_count == 1);
    REQUIRE(an.spectral.unstable_count == 1);
    CHECK(an.spectral.eigenvalues[0] == Catch::Approx((3.0 - std::sqrt(5.0)) / 2.0).margin(1e-12));
    CHECK(an.spectral.eigenvalues[1] == Catch::Approx(mu).margin(1e-12));
    CHECK(an.spectral.exponents[1] == Catch::Approx(0.9624236501192069).margin(1e-10));
    CHECK(an.charpoly.to_string() == "1 -3 1");
}

TEST_CASE("companion of x^3-3x^2+1", "[toral_linear]") {
    auto an = analyze(kCompanion3);
    IntPolynomial p;
    p.coeffs = {1, 0, -3, 1};  // x^3 - 3x^2 + 1, constant term first in storage
    REQUIRE(an.charpoly == p);

    // Bisection oracle on the exact polynomial.
    double r1 = bisect_root(p, -1.0, 0.0);
    double r2 = bisect_root(p, 0.0, 1.0);
    double r3 = bisect_root(p, 2.0, 3.0);
    REQUIRE(an.spectral.real_spectrum);
    REQUIRE(an.spectral.stable_count == 2);
    REQUIRE(an.spectral.unstable_count == 1);
    // sorted by increasing modulus: -0.532.., 0.652.., 2.879..
    CHECK(an.spectral.eigenvalues[0] == Catch::Approx(r1).margin(1e-11));
    CHECK(an.spectral.eigenvalues[1] == Catch::Approx(r2).margin(1e-11));
    CHECK(an.spectral.eigenvalues[2] == Catch::Approx(r3).margin(1e-11));
}

TEST_CASE("identity and non-unimodular rejected", "[toral_linear]") {
    CHECK_THROWS_AS(analyze(IntMatrix::from({{1, 0}, {0, 1}})), NotHyperbolic);
    CHECK_THROWS_AS(analyze(IntMatrix::from({{2, 0}, {0, 1}})), NotUnimodular);
}

TEST_CASE("complex spectrum flagged, not fatal", "[toral_linear]") {
    // companion of x^3 - x - 1: one real root (plastic number), complex pair
    auto an = analyze(IntMatrix::from({{0, 1, 0}, {0, 0, 1}, {1, 1, 0}}));
    CHECK_FALSE(an.spectral.real_spectrum);
    CHECK(an.spectral.hyperbolic);
    CHECK_FALSE(an.spectral.distinct_modulus);  // conjugate pair shares modulus
}

TEST_CASE("char_poly block and involution cases", "[toral_linear]") {
    SECTION("block diagonal multiplies") {
        IntMatrix b = IntMatrix::from({{1, 1}, {1, 0}});
        IntMatrix blk = block_diag(kCat, b);
        CHECK(char_poly(blk) == char_poly(kCat) * char_poly(b));
    }
    SECTION("involution") {
        IntPolynomial p = char_poly(IntMatrix::from({{0, 1}, {1, 0}}));
        CHECK(p.to_string() == "1 0 -1");  // x^2 - 1
    }
    SECTION("cofactor oracle for 2x2") {
        // char poly of [[a,b],[c,d]] = x^2 - (a+d)x + (ad-bc), expanded by hand
        IntMatrix m = IntMatrix::from({{3, 2}, {1, 1}});
        IntPolynomial p = char_poly(m);
        CHECK(p.coeffs[2] == 1);
        CHECK(p.coeffs[1] == -4);
        CHECK(p.coeffs[0] == 1);
    }
}

TEST_CASE("irreducibility over Q", "[toral_linear]") {
    SECTION("x^2-3x+1 irreducible") {
        auto r = is_irreducible_over_Q(char_poly(kCat));
        CHECK(r.irreducible);
    }
    SECTION("square of irreducible factors") {
        IntPolynomial p = char_poly(kCat) * char_poly(kCat);
        auto r = is_irreducible_over_Q(p);
        REQUIRE_FALSE(r.irreducible);
        REQUIRE(r.factor.has_value());
        // the reported factor exactly divides p
        CHECK(p.divide_exact(*r.factor).has_value());
    }
    SECTION("x^2-1 splits") {
        IntPolynomial p;
        p.coeffs = {-1, 0, 1};
        auto r = is_irreducible_over_Q(p);
        REQUIRE_FALSE(r.irreducible);
        REQUIRE(r.factor.has_value());
        CHECK(r.factor->degree() == 1);
    }
    SECTION("degree cap") {
        IntPolynomial p;
        p.coeffs.assign(10, 0);
        p.coeffs[9] = 1;
        p.coeffs[0] = 1;
        CHECK_THROWS_AS(is_irreducible_over_Q(p), DegreeTooLarge);
    }
    SECTION("x^4+1: irreducible but reducible mod every prime") {
        IntPolynomial p;
        p.coeffs = {1, 0, 0, 0, 1};
        auto r = is_irreducible_over_Q(p);
        CHECK(r.irreducible);
        CHECK(r.method == "factor-search");
    }
    SECTION("desk-instance product polynomial factors") {
        IntMatrix a2 = kCat.pow(2);
        IntMatrix l = block_diag(a2, kCat);
        auto r = is_irreducible_over_Q(char_poly(l));
        CHECK_FALSE(r.irreducible);
    }
}

TEST_CASE("periodic point counts", "[toral_linear]") {
    CHECK(periodic_point_count(kCat, 1) == 1);
    CHECK(periodic_point_count(kCat, 2) == 5);
    CHECK_THROWS_AS(periodic_point_count(kCat, 0), Error);

    SECTION("enumeration matches |det(L^n - I)| exactly for n <= 8") {
        for (int n = 1; n <= 8; ++n) {
            auto pts = enumerate_periodic_points(kCat, n);
            CHECK(BigInt(pts.size()) == periodic_point_count(kCat, n));
        }
    }
    SECTION("period-1 point is the origin") {
        auto pts = enumerate_periodic_points(kCat, 1);
        REQUIRE(pts.size() == 1);
        CHECK(pts[0].num[0] == 0);
        CHECK(pts[0].num[1] == 0);
    }
    SECTION("period-2 points verified by brute force") {
        auto pts = enumerate_periodic_points(kCat, 2);
        REQUIRE(pts.size() == 5);
        // independent oracle: try all rationals i/5, j/5 against L^2 x = x mod 1
        IntMatrix l2 = kCat.pow(2);
        int found = 0;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                BigInt x0 = i, x1 = j, den = 5;
                BigInt y0 = l2(0, 0) * x0 + l2(0, 1) * x1;
                BigInt y1 = l2(1, 0) * x0 + l2(1, 1) * x1;
                if ((y0 - x0) % den == 0 && (y1 - x1) % den == 0) ++found;
            }
        CHECK(found == 5);
        bool has_origin = false;
        for (const auto& p : pts)
            if (p.num[0] == 0 && p.num[1] == 0) has_origin = true;
        CHECK(has_origin);
        // exact action permutes the set
        for (const auto& p : pts) {
            RationalPoint q = apply_lattice_map(kCat, p);
            CHECK(std::find(pts.begin(), pts.end(), q) != pts.end());
        }
    }
    SECTION("cap enforcement") {
        CHECK_THROWS_AS(enumerate_periodic_points(kCat, 8, 100), TooManyPoints);
    }
}

TEST_CASE("spectral invariants", "[toral_linear]") {
    for (const IntMatrix& m : {kCat, kCompanion3, IntMatrix::from({{3, 2}, {1, 1}})}) {
        auto an = analyze(m);
        double prod = 1.0, sum = 0.0;
        for (const auto& z : an.spectral.spectrum) prod *= std::abs(z);
        for (double e : an.spectral.exponents) sum += e;
        CHECK(std::abs(prod - 1.0) < 1e-10);
        CHECK(std::abs(sum) < 1e-10);
        // char poly at each numerical eigenvalue
        for (const auto& z : an.spectral.spectrum)
            CHECK(std::abs(an.charpoly.eval(z)) < 1e-8);
        // flag invariance: ||(I - P) L b|| small for every flag basis vector
        Mat a = m.to_double();
        auto check_flags = [&](const std::vector<Mat>& flags) {
            for (const Mat& q : flags) {
                Mat proj = q * q.transpose();
                Mat img = a * q;
                double resid = (img - proj * img).norm();
                CHECK(resid < 1e-12);
            }
        };
        check_flags(an.splitting.stable_flags);
        check_flags(an.splitting.unstable_flags);
    }
}

TEST_CASE("matrix text round trip", "[toral_linear]") {
    std::ostringstream os;
    kCompanion3.write(os);
    IntMatrix back = IntMatrix::parse(os.str());
    CHECK(back == kCompanion3);
}
