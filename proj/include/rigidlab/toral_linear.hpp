// Linear toral automorphisms L : T^d -> T^d induced by unimodular integer
// matrices.  Exactness lives in the integer layer (characteristic polynomial,
// determinants, Smith reduction); eigenvalues are floating point roots of the
// exact polynomial, refined to ~1e-12.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <numeric>
#include <vector>

#include "rigidlab/errors.hpp"
#include "rigidlab/polynomial.hpp"
#include "rigidlab/smith.hpp"
#include "rigidlab/torus.hpp"

namespace rigidlab {

constexpr double kHyperbolicTol = 1e-9;   // reject |beta| this close to 1
constexpr double kDistinctModulusTol = 1e-9;  // min gap of log-moduli

struct SpectralData {
    std::vector<std::complex<double>> spectrum;  // all eigenvalues, |.| increasing
    std::vector<double> eigenvalues;             // real eigenvalues (real case only)
    std::vector<double> exponents;               // log|beta_i|, ascending
    Mat eigenvectors;                            // unit columns, aligned with eigenvalues
    int stable_count = 0;
    int unstable_count = 0;
    bool hyperbolic = false;
    bool real_spectrum = false;
    bool distinct_modulus = false;
    bool diagonalizable = false;

    // Unstable exponents lambda^u_1 < ... < lambda^u_n.
    std::vector<double> unstable_exponents() const {
        return {exponents.begin() + stable_count, exponents.end()};
    }
    std::vector<double> stable_exponents() const {
        return {exponents.begin(), exponents.begin() + stable_count};
    }
};

struct FlagSplitting {
    // One-dimensional bands ordered by increasing modulus: stable_bands[0] is
    // the most contracted direction, unstable_bands[0] the weakest expansion.
    std::vector<Vec> stable_bands;
    std::vector<Vec> unstable_bands;
    // Orthonormal bases of the partial sums E_(1,i) = E_1 + ... + E_i.
    std::vector<Mat> stable_flags;
    std::vector<Mat> unstable_flags;
};

struct LinearAnalysis {
    IntMatrix matrix;
    IntPolynomial charpoly;
    SpectralData spectral;
    FlagSplitting splitting;  // populated only for real, distinct-modulus spectra
};

namespace detail {

// Unit-norm kernel direction of (A - beta I), via SVD.
inline Vec eigvec_for(const Mat& a, double beta) {
    Mat shifted = a - beta * Mat::Identity(a.rows(), a.cols());
    Eigen::JacobiSVD<Mat> svd(shifted, Eigen::ComputeFullV);
    Vec v = svd.matrixV().col(a.cols() - 1);
    // deterministic sign: largest-magnitude component positive
    int imax = 0;
    for (int i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    if (v[imax] < 0) v = -v;
    return v;
}

inline Mat orthonormal_span(const std::vector<Vec>& gens) {
    Mat m(gens[0].size(), static_cast<Eigen::Index>(gens.size()));
    for (std::size_t j = 0; j < gens.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = gens[j];
    Eigen::HouseholderQR<Mat> qr(m);
    Mat q = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
    return q;
}

} // namespace detail

inline LinearAnalysis analyze(const IntMatrix& matrix) {
    if (matrix.dim() < 2) throw Error("analyze: dimension must be >= 2");
    if (!matrix.is_unimodular())
        throw NotUnimodular("analyze: |det| = " + matrix.det().str() + ", expected 1");

    LinearAnalysis out;
    out.matrix = matrix;
    out.charpoly = char_poly(matrix);

    auto roots = detail::complex_roots(out.charpoly);
    std::sort(roots.begin(), roots.end(),
              [](auto a, auto b) { return std::abs(a) < std::abs(b); });

    SpectralData& sd = out.spectral;
    sd.spectrum = roots;
    for (const auto& z : roots)
        if (std::abs(std::abs(z) - 1.0) < kHyperbolicTol)
            throw NotHyperbolic("analyze: eigenvalue of modulus " + std::to_string(std::abs(z)));
    sd.hyperbolic = true;

    sd.real_spectrum = std::all_of(roots.begin(), roots.end(), [](auto z) {
        return std::abs(z.imag()) < kHyperbolicTol;
    });

    sd.exponents.reserve(roots.size());
    for (const auto& z : roots) sd.exponents.push_back(std::log(std::abs(z)));
    sd.stable_count = static_cast<int>(
        std::count_if(roots.begin(), roots.end(), [](auto z) { return std::abs(z) < 1.0; }));
    sd.unstable_count = matrix.dim() - sd.stable_count;

    sd.distinct_modulus = true;
    for (std::size_t i = 0; i + 1 < sd.exponents.size(); ++i)
        if (sd.exponents[i + 1] - sd.exponents[i] < kDistinctModulusTol) sd.distinct_modulus = false;

    bool distinct_values = true;
    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) < kHyperbolicTol) distinct_values = false;
    sd.diagonalizable = distinct_values;  // simple spectrum; Jordan blocks rejected elsewhere

    if (sd.real_spectrum) {
        sd.eigenvalues.reserve(roots.size());
        for (const auto& z : roots) sd.eigenvalues.push_back(z.real());
        Mat a = matrix.to_double();
        sd.eigenvectors.resize(matrix.dim(), matrix.dim());
        for (int i = 0; i < matrix.dim(); ++i)
            sd.eigenvectors.col(i) = detail::eigvec_for(a, sd.eigenvalues[static_cast<std::size_t>(i)]);

        if (sd.distinct_modulus) {
            FlagSplitting& fs = out.splitting;
            std::vector<Vec> sgen, ugen;
            for (int i = 0; i < sd.stable_count; ++i) {
                fs.stable_bands.push_back(sd.eigenvectors.col(i));
                sgen.push_back(sd.eigenvectors.col(i));
                fs.stable_flags.push_back(detail::orthonormal_span(sgen));
            }
            for (int i = sd.stable_count; i < matrix.dim(); ++i) {
                fs.unstable_bands.push_back(sd.eigenvectors.col(i));
                ugen.push_back(sd.eigenvectors.col(i));
                fs.unstable_flags.push_back(detail::orthonormal_span(ugen));
            }
        }
    }
    return out;
}

// |det(L^n - I)|, the exact number of n-periodic points of a hyperbolic L.
inline BigInt periodic_point_count(const IntMatrix& matrix, int period) {
    if (period < 1) throw Error("periodic_point_count: period must be >= 1");
    IntMatrix m = matrix.pow(period) - IntMatrix::identity(matrix.dim());
    BigInt d = m.det();
    if (d == 0) throw NotHyperbolic("periodic_point_count: det(L^n - I) = 0");
    return abs(d);
}

// A rational point on the torus: coordinates num[i]/den, each in [0,1).
struct RationalPoint {
    std::vector<BigInt> num;
    BigInt den = 1;

    void normalize() {
        for (auto& n : num) {
            n %= den;
            if (n < 0) n += den;
        }
    }

    Vec to_vec() const {
        Vec v(static_cast<Eigen::Index>(num.size()));
        for (std::size_t i = 0; i < num.size(); ++i)
            v[static_cast<Eigen::Index>(i)] =
                num[i].convert_to<double>() / den.convert_to<double>();
        return v;
    }

    bool operator==(const RationalPoint& o) const { return den == o.den && num == o.num; }
    bool operator<(const RationalPoint& o) const {
        // lexicographic on exact values; callers keep a common denominator
        for (std::size_t i = 0; i < num.size(); ++i) {
            BigInt l = num[i] * o.den, r = o.num[i] * den;
            if (l != r) return l < r;
        }
        return false;
    }
};

// Exact action x -> L x (mod 1) on rational points.
inline RationalPoint apply_lattice_map(const IntMatrix& l, const RationalPoint& p) {
    RationalPoint q;
    q.den = p.den;
    q.num.assign(p.num.size(), 0);
    for (int i = 0; i < l.dim(); ++i)
        for (int j = 0; j < l.dim(); ++j)
            q.num[static_cast<std::size_t>(i)] += l(i, j) * p.num[static_cast<std::size_t>(j)];
    q.normalize();
    return q;
}

// All x with L^n x = x (mod Z^d), exact, via the Smith form of L^n - I.
// The solution set is V * { (k_i / s_i) : 0 <= k_i < s_i } taken mod Z^d.
inline std::vector<RationalPoint> enumerate_periodic_points(const IntMatrix& matrix, int period,
                                                            std::size_t cap = 100000) {
    BigInt count = periodic_point_count(matrix, period);
    if (count > cap)
        throw TooManyPoints("enumerate_periodic_points: " + count.str() + " points exceeds cap " +
                            std::to_string(cap));

    IntMatrix m = matrix.pow(period) - IntMatrix::identity(matrix.dim());
    SmithForm sf = smith_normal_form(m);
    const int d = matrix.dim();

    std::vector<BigInt> diag(static_cast<std::size_t>(d));
    BigInt den = 1;
    for (int i = 0; i < d; ++i) {
        diag[static_cast<std::size_t>(i)] = abs(sf.s(i, i));
        den = den / boost::multiprecision::gcd(den, diag[static_cast<std::size_t>(i)]) *
              diag[static_cast<std::size_t>(i)];
    }

    std::vector<RationalPoint> pts;
    pts.reserve(count.convert_to<std::size_t>());
    std::vector<BigInt> k(static_cast<std::size_t>(d), 0);
    while (true) {
        RationalPoint p;
        p.den = den;
        p.num.assign(static_cast<std::size_t>(d), 0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                p.num[static_cast<std::size_t>(i)] +=
                    sf.v(i, j) * k[static_cast<std::size_t>(j)] * (den / diag[static_cast<std::size_t>(j)]);
        p.normalize();
        pts.push_back(std::move(p));

        int pos = d - 1;
        while (pos >= 0) {
            k[static_cast<std::size_t>(pos)] += 1;
            if (k[static_cast<std::size_t>(pos)] < diag[static_cast<std::size_t>(pos)]) break;
            k[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

} // namespace rigidlab
