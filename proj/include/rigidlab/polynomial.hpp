// Exact monic integer polynomials: characteristic polynomials of lattice
// automorphisms, and irreducibility over Q with a checkable certificate.
//
// Irreducibility is decided in three stages, all exact:
//   1. rational-root test (monic, so candidate roots divide the constant term)
//   2. reduction mod small primes; irreducible mod p  =>  irreducible over Q
//   3. exhaustive factor reconstruction from root subsets, each candidate
//      verified by exact integer division (complete for the desk-scale
//      degrees this library supports).

#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <complex>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rigidlab/int_matrix.hpp"

namespace rigidlab {

struct IntPolynomial {
    // coeffs[k] multiplies x^k; monic means coeffs.back() == 1.
    std::vector<BigInt> coeffs;

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    bool monic() const { return !coeffs.empty() && coeffs.back() == 1; }

    BigInt eval(const BigInt& x) const {
        BigInt r = 0;
        for (int k = degree(); k >= 0; --k) r = r * x + coeffs[static_cast<std::size_t>(k)];
        return r;
    }

    double eval(double x) const {
        double r = 0;
        for (int k = degree(); k >= 0; --k)
            r = r * x + static_cast<double>(coeffs[static_cast<std::size_t>(k)]);
        return r;
    }

    std::complex<double> eval(std::complex<double> x) const {
        std::complex<double> r = 0;
        for (int k = degree(); k >= 0; --k)
            r = r * x + static_cast<double>(coeffs[static_cast<std::size_t>(k)]);
        return r;
    }

    double eval_derivative(double x) const {
        double r = 0;
        for (int k = degree(); k >= 1; --k)
            r = r * x + static_cast<double>(k) * static_cast<double>(coeffs[static_cast<std::size_t>(k)]);
        return r;
    }

    std::complex<double> eval_derivative(std::complex<double> x) const {
        std::complex<double> r = 0;
        for (int k = degree(); k >= 1; --k)
            r = r * x + static_cast<double>(k) * static_cast<double>(coeffs[static_cast<std::size_t>(k)]);
        return r;
    }

    IntPolynomial operator*(const IntPolynomial& o) const {
        IntPolynomial r;
        r.coeffs.assign(coeffs.size() + o.coeffs.size() - 1, 0);
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            for (std::size_t j = 0; j < o.coeffs.size(); ++j)
                r.coeffs[i + j] += coeffs[i] * o.coeffs[j];
        return r;
    }

    bool operator==(const IntPolynomial& o) const { return coeffs == o.coeffs; }

    // Exact division by a monic divisor; nullopt when the remainder is nonzero.
    std::optional<IntPolynomial> divide_exact(const IntPolynomial& g) const {
        if (!g.monic() || g.degree() > degree()) return std::nullopt;
        std::vector<BigInt> rem = coeffs;
        const int dq = degree() - g.degree();
        std::vector<BigInt> q(static_cast<std::size_t>(dq) + 1, 0);
        for (int k = dq; k >= 0; --k) {
            BigInt c = rem[static_cast<std::size_t>(k + g.degree())];
            q[static_cast<std::size_t>(k)] = c;
            if (c == 0) continue;
            for (int j = 0; j <= g.degree(); ++j)
                rem[static_cast<std::size_t>(k + j)] -= c * g.coeffs[static_cast<std::size_t>(j)];
        }
        for (const auto& r : rem)
            if (r != 0) return std::nullopt;
        IntPolynomial out;
        out.coeffs = std::move(q);
        return out;
    }

    // Coefficient list, constant term last: x^2 - 3x + 1  ->  "1 -3 1".
    std::string to_string() const {
        std::ostringstream ss;
        for (int k = degree(); k >= 0; --k) ss << coeffs[static_cast<std::size_t>(k)] << (k ? " " : "");
        return ss.str();
    }
};

// Characteristic polynomial of an integer matrix, Faddeev-LeVerrier.
// All intermediate divisions are exact over Z.
inline IntPolynomial char_poly(const IntMatrix& a) {
    const int d = a.dim();
    IntPolynomial p;
    p.coeffs.assign(static_cast<std::size_t>(d) + 1, 0);
    p.coeffs[static_cast<std::size_t>(d)] = 1;
    IntMatrix m(d);  // zero
    BigInt c = 1;
    for (int k = 1; k <= d; ++k) {
        for (int i = 0; i < d; ++i) m(i, i) += c;
        m = a * m;
        BigInt tr = 0;
        for (int i = 0; i < d; ++i) tr += m(i, i);
        c = -tr / k;
        p.coeffs[static_cast<std::size_t>(d - k)] = c;
    }
    return p;
}

namespace detail {

// ---- F_p[x] arithmetic on small primes --------------------------------------

using FpPoly = std::vector<std::uint64_t>;  // coefficient of x^k at index k

inline FpPoly fp_trim(FpPoly f) {
    while (!f.empty() && f.back() == 0) f.pop_back();
    return f;
}

inline FpPoly fp_mulmod(const FpPoly& a, const FpPoly& b, const FpPoly& mod, std::uint64_t p) {
    FpPoly r(a.size() + b.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] = (r[i + j] + a[i] * b[j]) % p;
    }
    // reduce mod the monic modulus
    const std::size_t dm = mod.size() - 1;
    for (std::size_t k = r.size(); k-- > dm;) {
        std::uint64_t c = r[k];
        if (c == 0) continue;
        r[k] = 0;
        for (std::size_t j = 0; j < dm; ++j)
            r[k - dm + j] = (r[k - dm + j] + (p - mod[j] % p) * c) % p;
    }
    r.resize(dm);
    return r;
}

inline FpPoly fp_powmod_x(const BigInt& e, const FpPoly& mod, std::uint64_t p) {
    FpPoly base = {0, 1};  // x
    FpPoly acc = {1};
    BigInt n = e;
    while (n > 0) {
        if ((n & 1) != 0) acc = fp_mulmod(acc, base, mod, p);
        base = fp_mulmod(base, base, mod, p);
        n >>= 1;
    }
    return acc;
}

inline std::uint64_t fp_inv(std::uint64_t x, std::uint64_t p) {
    std::uint64_t r = 1, e = p - 2, base = x % p;
    while (e) {
        if (e & 1) r = r * base % p;
        base = base * base % p;
        e >>= 1;
    }
    return r;
}

inline FpPoly fp_mod(FpPoly a, const FpPoly& b, std::uint64_t p) {
    a = fp_trim(std::move(a));
    const std::uint64_t li = fp_inv(b.back(), p);
    while (a.size() >= b.size()) {
        const std::uint64_t c = a.back() * li % p;
        const std::size_t shift = a.size() - b.size();
        if (c)
            for (std::size_t j = 0; j < b.size(); ++j)
                a[shift + j] = (a[shift + j] + (p - b[j] * c % p)) % p;
        a.pop_back();  // leading term cancelled exactly
        a = fp_trim(std::move(a));
        if (a.empty()) break;
    }
    return a;
}

inline FpPoly fp_gcd(FpPoly a, FpPoly b, std::uint64_t p) {
    a = fp_trim(std::move(a));
    b = fp_trim(std::move(b));
    while (!b.empty()) {
        FpPoly r = fp_mod(a, b, p);
        a = std::move(b);
        b = std::move(r);
    }
    return a;
}

// Rabin's test: f (monic, degree n) is irreducible over F_p iff
// x^{p^n} == x (mod f) and gcd(x^{p^{n/q}} - x, f) = 1 for every prime q | n.
inline bool fp_irreducible(const IntPolynomial& f, std::uint64_t p) {
    const int n = f.degree();
    FpPoly mod(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        BigInt c = f.coeffs[static_cast<std::size_t>(k)] % static_cast<long long>(p);
        if (c < 0) c += static_cast<long long>(p);
        mod[static_cast<std::size_t>(k)] = c.convert_to<std::uint64_t>();
    }
    if (mod.back() == 0) return false;  // p divides the leading coefficient

    auto pow_big = [&](int e) {
        BigInt r = 1;
        for (int i = 0; i < e; ++i) r *= p;
        return r;
    };

    FpPoly xpn = fp_powmod_x(pow_big(n), mod, p);
    if (fp_trim(xpn) != FpPoly{0, 1}) return false;

    std::vector<int> qs;
    int m = n;
    for (int q = 2; q * q <= m; ++q)
        if (m % q == 0) {
            qs.push_back(q);
            while (m % q == 0) m /= q;
        }
    if (m > 1) qs.push_back(m);

    for (int q : qs) {
        FpPoly h = fp_powmod_x(pow_big(n / q), mod, p);
        // h - x
        FpPoly diff = h;
        if (diff.size() < 2) diff.resize(2, 0);
        diff[1] = (diff[1] + p - 1) % p;
        FpPoly g = fp_gcd(diff, mod, p);
        if (!(g.size() == 1 && g[0] != 0)) return false;
    }
    return true;
}

// Polished complex roots of a monic integer polynomial (companion matrix
// eigenvalues plus a few Newton steps on the exact coefficients).
inline std::vector<std::complex<double>> complex_roots(const IntPolynomial& f) {
    const int n = f.degree();
    Mat comp = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i)
        comp(i, n - 1) = -static_cast<double>(f.coeffs[static_cast<std::size_t>(i)]);
    Eigen::EigenSolver<Mat> es(comp);
    std::vector<std::complex<double>> roots(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::complex<double> z = es.eigenvalues()[i];
        for (int it = 0; it < 60; ++it) {
            std::complex<double> fv = f.eval(z);
            std::complex<double> dv = f.eval_derivative(z);
            if (std::abs(dv) < 1e-300) break;
            std::complex<double> step = fv / dv;
            z -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
        }
        roots[static_cast<std::size_t>(i)] = z;
    }
    std::sort(roots.begin(), roots.end(), [](auto a, auto b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return roots;
}

} // namespace detail

struct IrreducibilityResult {
    bool irreducible = false;
    // Certificate: how the answer was established.
    //   "degree-1"            trivially irreducible
    //   "rational-root"       explicit linear factor found
    //   "cubic-no-root"       degree <= 3 with no rational root
    //   "mod-p"               irreducible modulo `prime`
    //   "factor-found"        explicit factorization, see `factor`/`cofactor`
    //   "factor-search"       exhaustive root-subset search found no factor
    std::string method;
    std::uint64_t prime = 0;
    std::optional<IntPolynomial> factor;
    std::optional<IntPolynomial> cofactor;
};

inline IrreducibilityResult is_irreducible_over_Q(const IntPolynomial& f, int max_degree = 8) {
    if (!f.monic()) throw Error("is_irreducible_over_Q: polynomial must be monic");
    if (f.degree() > max_degree)
        throw DegreeTooLarge("is_irreducible_over_Q: degree " + std::to_string(f.degree()) +
                             " exceeds supported bound " + std::to_string(max_degree));
    IrreducibilityResult res;
    if (f.degree() <= 1) {
        res.irreducible = true;
        res.method = "degree-1";
        return res;
    }

    // 1. rational roots: monic, so any rational root is an integer dividing c0.
    const BigInt c0 = f.coeffs[0];
    auto linear_factor = [&](const BigInt& r) {
        IntPolynomial lin;
        lin.coeffs = {-r, 1};
        res.irreducible = false;
        res.method = "rational-root";
        res.factor = lin;
        res.cofactor = f.divide_exact(lin);
        return res;
    };
    if (c0 == 0) return linear_factor(0);
    const BigInt c0abs = abs(c0);
    for (BigInt t = 1; t * t <= c0abs; ++t) {
        if (c0abs % t != 0) continue;
        const BigInt pair = c0abs / t;
        for (const BigInt& cand : {t, pair}) {
            if (f.eval(cand) == 0) return linear_factor(cand);
            if (f.eval(BigInt(-cand)) == 0) return linear_factor(BigInt(-cand));
        }
    }
    if (f.degree() <= 3) {
        res.irreducible = true;
        res.method = "cubic-no-root";
        return res;
    }

    // 2. reduction modulo small primes.
    for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull}) {
        if (detail::fp_irreducible(f, p)) {
            res.irreducible = true;
            res.method = "mod-p";
            res.prime = p;
            return res;
        }
    }

    // 3. complete fallback: reconstruct candidate factors from root subsets and
    // certify by exact division.  Any true factorization over Z corresponds to
    // a subset of the (polished) complex roots with integer symmetric sums.
    auto roots = detail::complex_roots(f);
    const int n = f.degree();
    for (int mask = 1; mask < (1 << n) - 1; ++mask) {
        const int sz = __builtin_popcount(static_cast<unsigned>(mask));
        if (sz > n / 2) continue;
        std::vector<std::complex<double>> cf = {1.0};
        for (int i = 0; i < n; ++i) {
            if (!(mask & (1 << i))) continue;
            cf.push_back(0.0);
            for (std::size_t k = cf.size() - 1; k >= 1; --k)
                cf[k] = cf[k - 1] - roots[static_cast<std::size_t>(i)] * cf[k];
            cf[0] = -roots[static_cast<std::size_t>(i)] * cf[0];
        }
        IntPolynomial cand;
        cand.coeffs.assign(cf.size(), 0);
        bool ok = true;
        for (std::size_t k = 0; k < cf.size() && ok; ++k) {
            if (std::abs(cf[k].imag()) > 1e-6) ok = false;
            double rounded = std::round(cf[k].real());
            if (std::abs(cf[k].real() - rounded) > 0.3) ok = false;
            cand.coeffs[k] = static_cast<long long>(rounded);
        }
        if (!ok || !cand.monic()) continue;
        if (auto co = f.divide_exact(cand)) {
            res.irreducible = false;
            res.method = "factor-found";
            res.factor = cand;
            res.cofactor = *co;
            return res;
        }
    }
    res.irreducible = true;
    res.method = "factor-search";
    return res;
}

} // namespace rigidlab
