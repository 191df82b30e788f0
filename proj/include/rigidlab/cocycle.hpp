// Finite-time Lyapunov exponents of the derivative cocycle.
//
// The estimator runs a discrete QR iteration along the orbit and averages the
// log of the R diagonal over the second half of the horizon; the first half
// only aligns the frame.  For a constant cocycle the frame alignment error
// decays geometrically, so the windowed averages reproduce the exact
// exponents to rounding at moderate N.  Sorting is ascending throughout:
// lambda_1 <= ... <= lambda_d.

#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <vector>

#include "rigidlab/parallel.hpp"
#include "rigidlab/perturbation.hpp"

namespace rigidlab {

struct ExponentEstimate {
    Vec point;
    int horizon = 0;
    std::vector<double> exponents;   // ascending
    double tail_slope = 0.0;         // drift between quarter windows, max over indices
    double window_logdet = 0.0;      // mean log|det Df| over the averaging window
};

namespace detail {

// One QR step: M = Df(x) * Q, factor M = Q' R with positive diagonal.
inline void qr_step(const Mat& df, Mat& q, Vec& logdiag) {
    Mat m = df * q;
    Eigen::HouseholderQR<Mat> qr(m);
    Mat qq = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
    Mat r = qq.transpose() * m;
    for (int i = 0; i < r.rows(); ++i) {
        double di = r(i, i);
        if (di < 0) qq.col(i) = -qq.col(i);
        logdiag[i] = std::log(std::abs(di));
    }
    q = qq;
}

} // namespace detail

template <typename MapLike>
ExponentEstimate finite_time_exponents(const MapLike& f, const Vec& x0, int n) {
    if (n < 10) throw Error("finite_time_exponents: horizon must be >= 10");
    const int d = f.dim();
    Mat q = Mat::Identity(d, d);
    Vec logdiag(d);
    Vec sum_w1 = Vec::Zero(d), sum_w2 = Vec::Zero(d);
    double logdet_w2 = 0.0;
    const int q1 = n / 4, q2 = n / 2;
    int c1 = 0, c2 = 0;

    Vec x = x0;
    for (int k = 0; k < n; ++k) {
        Mat df = f.jacobian(x).matrix;
        detail::qr_step(df, q, logdiag);
        if (k >= q2) {
            sum_w2 += logdiag;
            logdet_w2 += logdiag.sum();  // prod R_ii = |det Df|, QR preserves it
            ++c2;
        } else if (k >= q1) {
            sum_w1 += logdiag;
            ++c1;
        }
        x = f.eval(x);
    }

    ExponentEstimate est;
    est.point = x0;
    est.horizon = n;
    Vec mean2 = sum_w2 / c2;
    Vec mean1 = c1 > 0 ? Vec(sum_w1 / c1) : mean2;
    est.tail_slope = (mean2 - mean1).lpNorm<Eigen::Infinity>();
    est.window_logdet = logdet_w2 / c2;
    est.exponents.assign(mean2.data(), mean2.data() + d);
    std::sort(est.exponents.begin(), est.exponents.end());
    return est;
}

enum class FieldFlag { RegularConsistent, Inconclusive, Nonconstant };

inline const char* to_string(FieldFlag f) {
    switch (f) {
        case FieldFlag::RegularConsistent: return "REGULAR_CONSISTENT";
        case FieldFlag::Inconclusive: return "INCONCLUSIVE";
        case FieldFlag::Nonconstant: return "NONCONSTANT";
    }
    return "?";
}

struct LyapunovField {
    std::vector<ExponentEstimate> samples;
    std::vector<double> median;       // per index
    std::vector<double> spread;       // max |lambda_i(x) - median_i| per index
    double max_spread = 0.0;
    double median_tail = 0.0;
    double max_tail = 0.0;
    int horizon = 0;
    double tolerance = 0.0;
    FieldFlag flag = FieldFlag::Inconclusive;
};

constexpr double kDefaultRegularityTol = 5e-3;  // tau_reg

// Exponent samples over a uniform grid.  For maps in more than two
// dimensions the grid runs over `axes` (default: the first two coordinates)
// with the remaining coordinates pinned to a fixed anchor, keeping the
// sample count at resolution^|axes|.
template <typename MapLike>
LyapunovField exponent_field(const MapLike& f, int resolution, int n,
                             double tau_reg = kDefaultRegularityTol, int workers = 1,
                             std::vector<int> axes = {}) {
    const int d = f.dim();
    if (axes.empty()) {
        if (d <= 2)
            for (int i = 0; i < d; ++i) axes.push_back(i);
        else
            axes = {0, 1};
    }
    double total = std::pow(static_cast<double>(resolution), static_cast<double>(axes.size()));
    if (total > 1e6) throw Error("exponent_field: grid larger than 1e6 points");
    const std::size_t npts = static_cast<std::size_t>(total);

    Vec anchor(d);
    for (int i = 0; i < d; ++i) anchor[i] = wrap01(0.5 + 0.318309886 * (i + 1));

    LyapunovField field;
    field.horizon = n;
    field.tolerance = tau_reg;
    field.samples.resize(npts);
    parallel_for(npts, workers, [&](std::size_t idx) {
        Vec x = anchor;
        std::size_t rem = idx;
        for (int a : axes) {
            x[a] = static_cast<double>(rem % resolution) / resolution;
            rem /= resolution;
        }
        field.samples[idx] = finite_time_exponents(f, x, n);
    });

    field.median.assign(static_cast<std::size_t>(d), 0.0);
    field.spread.assign(static_cast<std::size_t>(d), 0.0);
    std::vector<double> col(npts);
    for (int i = 0; i < d; ++i) {
        for (std::size_t s = 0; s < npts; ++s) col[s] = field.samples[s].exponents[static_cast<std::size_t>(i)];
        std::vector<double> sorted = col;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(npts / 2), sorted.end());
        double med = sorted[npts / 2];
        field.median[static_cast<std::size_t>(i)] = med;
        double sp = 0;
        for (double v : col) sp = std::max(sp, std::abs(v - med));
        field.spread[static_cast<std::size_t>(i)] = sp;
        field.max_spread = std::max(field.max_spread, sp);
    }
    std::vector<double> tails(npts);
    for (std::size_t s = 0; s < npts; ++s) tails[s] = field.samples[s].tail_slope;
    std::nth_element(tails.begin(), tails.begin() + static_cast<long>(npts / 2), tails.end());
    field.median_tail = tails[npts / 2];
    field.max_tail = *std::max_element(tails.begin(), tails.end());

    // Finite-scale reading: spread below tolerance with settled tails is
    // consistent with constant exponents; spread above tolerance counts as
    // nonconstant only when the tails show the estimates converged enough
    // that the spread is not explained by the remaining drift.
    if (field.max_spread < tau_reg && field.median_tail < 0.5 * tau_reg)
        field.flag = FieldFlag::RegularConsistent;
    else if (field.max_spread >= tau_reg && field.median_tail <= 0.5 * field.max_spread)
        field.flag = FieldFlag::Nonconstant;
    else
        field.flag = FieldFlag::Inconclusive;
    return field;
}

struct SplittingSample {
    Vec point;
    std::vector<Vec> stable_bands;    // most contracted first
    std::vector<Vec> unstable_bands;  // weakest expansion first
    std::vector<Mat> stable_flags;
    std::vector<Mat> unstable_flags;
    double invariance_residual = 0.0;
};

namespace detail {

// Direction of the (generically one-dimensional) intersection of two spans
// given by orthonormal columns.
inline Vec span_intersection(const Mat& p, const Mat& q) {
    Eigen::JacobiSVD<Mat> svd(p.transpose() * q, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec a = p * svd.matrixU().col(0);
    Vec b = q * svd.matrixV().col(0);
    if (a.dot(b) < 0) b = -b;
    Vec v = (a + b).normalized();
    int imax = 0;
    for (int i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    if (v[imax] < 0) v = -v;
    return v;
}

// Frames of the forward fast flags V_j and backward fast flags W_j at a
// chosen index of a precomputed orbit.  V_j is spanned by the leading j
// columns of the forward QR frame; likewise W_j for the inverse cocycle.
struct OrbitFrames {
    Mat forward;   // columns ordered by decreasing forward exponent
    Mat backward;  // columns ordered by decreasing backward exponent
};

template <typename MapLike>
OrbitFrames qr_frames_at(const MapLike& f, const std::vector<Vec>& orbit, int center) {
    const int d = f.dim();
    Vec logdiag(d);
    OrbitFrames out;
    out.forward = Mat::Identity(d, d);
    for (int k = 0; k < center; ++k) {
        Mat df = f.jacobian(orbit[static_cast<std::size_t>(k)]).matrix;
        qr_step(df, out.forward, logdiag);
    }
    out.backward = Mat::Identity(d, d);
    for (int k = static_cast<int>(orbit.size()) - 1; k > center; --k) {
        Mat dfinv = f.jacobian(orbit[static_cast<std::size_t>(k) - 1]).matrix.inverse();
        qr_step(dfinv, out.backward, logdiag);
    }
    return out;
}

template <typename MapLike>
SplittingSample splitting_from_frames(const MapLike& f, const Vec& x, const OrbitFrames& fr,
                                      int stable_count, int unstable_count) {
    const int d = f.dim();
    SplittingSample s;
    s.point = x;
    const int k = stable_count, n = unstable_count;
    auto lead = [](const Mat& m, int j) { return Mat(m.leftCols(j)); };
    for (int i = 1; i <= n; ++i)
        s.unstable_bands.push_back(span_intersection(lead(fr.forward, n - i + 1),
                                                     lead(fr.backward, k + i)));
    for (int i = 1; i <= k; ++i)
        s.stable_bands.push_back(span_intersection(lead(fr.forward, n + k - i + 1),
                                                   lead(fr.backward, i)));
    std::vector<Vec> acc;
    for (const Vec& v : s.unstable_bands) {
        acc.push_back(v);
        s.unstable_flags.push_back(orthonormal_span(acc));
    }
    acc.clear();
    for (const Vec& v : s.stable_bands) {
        acc.push_back(v);
        s.stable_flags.push_back(orthonormal_span(acc));
    }
    (void)d;
    return s;
}

} // namespace detail

// Estimated fine splitting at x.  Bands come from intersecting forward and
// backward QR flags pulled along a 2N-step orbit through x; the residual is
// the worst misalignment of Df(x) * band(x) against the band at f(x).
template <typename MapLike>
SplittingSample estimate_splitting(const MapLike& f, const Vec& x, int n_steps) {
    const auto& sp = f.linear_analysis().spectral;
    if (!sp.real_spectrum || !sp.distinct_modulus)
        throw SlowDomination("estimate_splitting: base spectrum lacks distinct real moduli");
    double gap = 1e300;
    for (std::size_t i = 0; i + 1 < sp.exponents.size(); ++i)
        gap = std::min(gap, sp.exponents[i + 1] - sp.exponents[i]);
    if (gap < 1e-3)
        throw SlowDomination("estimate_splitting: adjacent exponent gap " + std::to_string(gap));

    std::vector<Vec> orbit;  // f^{-N}(x) ... x ... f^{N+1}(x)
    orbit.reserve(static_cast<std::size_t>(2 * n_steps) + 2);
    Vec back = x;
    std::vector<Vec> pre(static_cast<std::size_t>(n_steps));
    for (int i = 0; i < n_steps; ++i) {
        back = f.inverse_eval(back);
        pre[static_cast<std::size_t>(n_steps - 1 - i)] = back;
    }
    for (auto& p : pre) orbit.push_back(p);
    Vec fwd = x;
    orbit.push_back(fwd);
    for (int i = 0; i <= n_steps; ++i) {
        fwd = f.eval(fwd);
        orbit.push_back(fwd);
    }

    const int center = n_steps;
    auto fr0 = detail::qr_frames_at(f, orbit, center);
    SplittingSample s0 = detail::splitting_from_frames(f, x, fr0, sp.stable_count, sp.unstable_count);
    auto fr1 = detail::qr_frames_at(f, orbit, center + 1);
    SplittingSample s1 = detail::splitting_from_frames(f, orbit[static_cast<std::size_t>(center) + 1],
                                                       fr1, sp.stable_count, sp.unstable_count);

    Mat df = f.jacobian(x).matrix;
    double resid = 0.0;
    auto band_residual = [&](const Vec& v0, const Vec& v1) {
        Vec img = (df * v0).normalized();
        double r = (img - v1 * v1.dot(img)).norm();
        resid = std::max(resid, r);
    };
    for (std::size_t i = 0; i < s0.unstable_bands.size(); ++i)
        band_residual(s0.unstable_bands[i], s1.unstable_bands[i]);
    for (std::size_t i = 0; i < s0.stable_bands.size(); ++i)
        band_residual(s0.stable_bands[i], s1.stable_bands[i]);
    s0.invariance_residual = resid;
    return s0;
}

struct ConstancyReport {
    bool constant = false;
    double max_dev = 0.0;
    double tolerance = 0.0;
    int index = -1;       // exponent index of the worst deviation
    Vec witness;          // sample point achieving it
};

// The testable shadow of local constancy: sampled exponent functions are
// constant across the grid within the field tolerance.
inline ConstancyReport local_constancy_check(const LyapunovField& field) {
    ConstancyReport r;
    r.tolerance = field.tolerance;
    for (const auto& s : field.samples)
        for (std::size_t i = 0; i < s.exponents.size(); ++i) {
            double dev = std::abs(s.exponents[i] - field.median[i]);
            if (dev > r.max_dev) {
                r.max_dev = dev;
                r.index = static_cast<int>(i);
                r.witness = s.point;
            }
        }
    r.constant = r.max_dev < field.tolerance;
    return r;
}

} // namespace rigidlab
