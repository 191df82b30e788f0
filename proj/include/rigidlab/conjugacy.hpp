// The conjugacy h = id + u with h o f = L o h, built as a geometric series in
// the eigenbasis of L.  Writing N(x) = F(x) - Lx and projecting everything on
// a (real, simple) eigenbasis, the functional equation per band is
//     beta u_b(x) - u_b(f(x)) = N_b(x),
// whose unique bounded solution is
//     u_b(x) =  sum_{k>=0} beta^{-(k+1)} N_b(f^k(x))     for |beta| > 1,
//     u_b(x) = -sum_{k>=1} beta^{k-1}  N_b(f^{-k}(x))    for |beta| < 1.
// Truncating at K leaves an equation residual of exactly |beta|^{-K}||N_b||
// (|beta|^K for stable bands), which is the certified tail bound.
//
// For the skew family f(x,y) = (A^m x, B^n y + psi(x) e_u) the same h has a
// closed scalar form: h(x,y) = (x, y - eta(x) e_u) with
//     eta(A^m x) = lambda^n eta(x) + psi(x),
//     eta(x) = -sum_{k>=0} lambda^{-n(k+1)} psi(A^{mk} x),
// a Weierstrass-type series whose Hoelder exponent is the fiber/base rate
// ratio; the structure-function estimator below measures it.

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rigidlab/parallel.hpp"
#include "rigidlab/periodic.hpp"
#include "rigidlab/perturbation.hpp"

namespace rigidlab {

struct BandSeries {
    double beta = 0.0;   // eigenvalue of L for this band
    int terms = 0;       // truncation order K
    double tail = 0.0;   // certified residual bound of the truncation
};

class ConjugacyField {
public:
    ConjugacyField(const PerturbedMap& f, double tail_tol)
        : f_(f), tail_tol_(tail_tol) {
        const auto& sp = f_.linear_analysis().spectral;
        if (!sp.real_spectrum || !sp.distinct_modulus)
            throw DegenerateSpectrum("ConjugacyField: need real simple spectrum of L");
        const int d = f_.dim();
        basis_ = sp.eigenvectors;
        left_ = basis_.inverse();

        double rate = 0.0;
        for (double b : sp.eigenvalues)
            rate = std::max(rate, std::abs(b) < 1.0 ? std::abs(b) : 1.0 / std::abs(b));
        if (rate > 0.999)
            throw SeriesStalled("ConjugacyField: contraction rate " + std::to_string(rate));

        const double sup_n = f_.displacement().sup_bound();
        bands_.resize(static_cast<std::size_t>(d));
        max_fwd_ = max_bwd_ = 0;
        tail_total_ = 0.0;
        for (int i = 0; i < d; ++i) {
            BandSeries& b = bands_[static_cast<std::size_t>(i)];
            b.beta = sp.eigenvalues[static_cast<std::size_t>(i)];
            double amp = left_.row(i).norm() * sup_n;
            double mod = std::abs(b.beta);
            if (amp == 0.0) {
                b.terms = 0;
                b.tail = 0.0;
                continue;
            }
            if (mod > 1.0) {
                b.terms = static_cast<int>(
                    std::ceil(std::log(amp / tail_tol_) / std::log(mod))) + 1;
                b.terms = std::max(b.terms, 1);
                b.tail = amp * std::pow(mod, -b.terms);
                max_fwd_ = std::max(max_fwd_, b.terms);
            } else {
                b.terms = static_cast<int>(
                    std::ceil(std::log(amp / tail_tol_) / std::log(1.0 / mod))) + 1;
                b.terms = std::max(b.terms, 1);
                b.tail = amp * std::pow(mod, b.terms);
                max_bwd_ = std::max(max_bwd_, b.terms);
            }
            tail_total_ += b.tail * basis_.col(i).lpNorm<Eigen::Infinity>();
        }
    }

    const PerturbedMap& map() const { return f_; }
    const std::vector<BandSeries>& bands() const { return bands_; }
    double tail_bound() const { return tail_total_; }

    // Scalar series values u_b(x), one per band (ascending |beta|).
    Vec band_values(const Vec& x) const {
        const int d = f_.dim();
        Vec out = Vec::Zero(d);
        if (f_.is_linear()) return out;
        if (max_fwd_ > 0) {
            Vec z = x;
            std::vector<double> w(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = 1.0;
            for (int k = 0; k < max_fwd_; ++k) {
                Vec n = f_.displacement().eval(z);
                for (int i = 0; i < d; ++i) {
                    const BandSeries& b = bands_[static_cast<std::size_t>(i)];
                    if (std::abs(b.beta) <= 1.0 || k >= b.terms) continue;
                    w[static_cast<std::size_t>(i)] /= b.beta;
                    out[i] += w[static_cast<std::size_t>(i)] * left_.row(i).dot(n);
                }
                z = f_.eval(z);
            }
        }
        if (max_bwd_ > 0) {
            Vec z = x;
            std::vector<double> w(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = 1.0;
            for (int k = 1; k <= max_bwd_; ++k) {
                z = f_.inverse_eval(z);
                Vec n = f_.displacement().eval(z);
                for (int i = 0; i < d; ++i) {
                    const BandSeries& b = bands_[static_cast<std::size_t>(i)];
                    if (std::abs(b.beta) >= 1.0 || k > b.terms) continue;
                    out[i] -= w[static_cast<std::size_t>(i)] * left_.row(i).dot(n);
                    w[static_cast<std::size_t>(i)] *= b.beta;
                }
            }
        }
        return out;
    }

    Vec displacement(const Vec& x) const { return basis_ * band_values(x); }

    Vec apply(const Vec& x) const { return torus_wrap(x + displacement(x)); }

    // ||h(f(x)) - L h(x)||_inf, evaluated lattice-free through u.
    double equation_residual(const Vec& x) const {
        Vec lhs = f_.displacement().eval(x) + displacement(f_.eval(x)) -
                  f_.linear_d() * displacement(x);
        return lhs.lpNorm<Eigen::Infinity>();
    }

private:
    PerturbedMap f_;
    double tail_tol_;
    Mat basis_, left_;
    std::vector<BandSeries> bands_;
    int max_fwd_ = 0, max_bwd_ = 0;
    double tail_total_ = 0.0;
};

inline ConjugacyField solve_conjugacy(const PerturbedMap& f, double tail_tol = 1e-10) {
    f.require_certificate("solve_conjugacy");
    return ConjugacyField(f, tail_tol);
}

struct GridResidual {
    double sup = 0.0;
    Vec argmax;
};

template <typename ResidualFn>
GridResidual residual_on_grid(int dim, int resolution, int workers, const ResidualFn& fn) {
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(resolution);
    std::vector<double> vals(total);
    parallel_for(total, workers, [&](std::size_t idx) {
        Vec x(dim);
        std::size_t rem = idx;
        for (int i = 0; i < dim; ++i) {
            x[i] = static_cast<double>(rem % static_cast<std::size_t>(resolution)) / resolution;
            rem /= static_cast<std::size_t>(resolution);
        }
        vals[idx] = fn(x);
    });
    GridResidual g;
    std::size_t best = 0;
    for (std::size_t i = 0; i < total; ++i)
        if (vals[i] > g.sup) { g.sup = vals[i]; best = i; }
    Vec x(dim);
    std::size_t rem = best;
    for (int i = 0; i < dim; ++i) {
        x[i] = static_cast<double>(rem % static_cast<std::size_t>(resolution)) / resolution;
        rem /= static_cast<std::size_t>(resolution);
    }
    g.argmax = x;
    return g;
}

// Closed-form conjugacy component for the skew family.
class SkewConjugacySeries {
public:
    SkewConjugacySeries(const PerturbedMap& f, int terms) : terms_(terms) {
        if (!f.skew()) throw Error("SkewConjugacySeries: map is not a skew product");
        const SkewStructure& sk = *f.skew();
        base_pow_ = sk.a.pow(sk.m).to_double();
        psi_ = sk.psi;
        base_dim_ = sk.base_dim;
        e_u_ = sk.e_u;
        fiber_mult_ = std::pow(sk.lambda, sk.n);
        if (std::abs(fiber_mult_) <= 1.0)
            throw Error("SkewConjugacySeries: |lambda^n| must exceed 1");
        tail_ = psi_.sup_bound() * std::pow(std::abs(fiber_mult_), -terms_) /
                (std::abs(fiber_mult_) - 1.0);
    }

    int terms() const { return terms_; }
    double tail_bound() const { return tail_; }
    double fiber_multiplier() const { return fiber_mult_; }

    // eta(x) = -sum_{k<K} lambda^{-n(k+1)} psi(A^{mk} x), x in the base torus.
    double eta(const Vec& x_base) const {
        Vec z = x_base;
        double acc = 0.0, w = 1.0;
        for (int k = 0; k < terms_; ++k) {
            w /= fiber_mult_;
            acc -= w * psi_.eval(z);
            z = torus_wrap(base_pow_ * z);
        }
        return acc;
    }

    // |eta(A^m x) - lambda^n eta(x) - psi(x)|, bounded by the tail.
    double equation_residual(const Vec& x_base) const {
        double lhs = eta(torus_wrap(base_pow_ * x_base));
        double rhs = fiber_mult_ * eta(x_base) + psi_.eval(x_base);
        return std::abs(lhs - rhs);
    }

    // H(x,y) = (x, y + eta(x) e_u) satisfies H o L = f o H.
    Vec conjugate_point(const Vec& xy) const {
        Vec out = xy;
        double e = eta(xy.head(base_dim_));
        out.tail(out.size() - base_dim_) += e * e_u_;
        return torus_wrap(out);
    }

private:
    Mat base_pow_;
    TrigScalar psi_;
    Vec e_u_;
    int base_dim_ = 0;
    int terms_ = 0;
    double fiber_mult_ = 0.0;
    double tail_ = 0.0;
};

inline SkewConjugacySeries skew_series(const PerturbedMap& f, int terms = 40) {
    return SkewConjugacySeries(f, terms);
}

// ---------------------------------------------------------------------------
// Reverse conjugacy hbar with hbar o L = f o hbar, solved by Picard iteration
// on a lattice grid.  Integer matrices map the uniform grid onto itself
// exactly, so every orbit the series needs stays on the grid and no
// interpolation enters.

class ReverseConjugacyField {
public:
    ReverseConjugacyField(const PerturbedMap& f, int resolution, int sweeps = 40)
        : f_(f), res_(resolution) {
        const auto& sp = f_.linear_analysis().spectral;
        if (!sp.real_spectrum || !sp.distinct_modulus)
            throw DegenerateSpectrum("ReverseConjugacyField: need real simple spectrum");
        const int d = f_.dim();
        basis_ = sp.eigenvectors;
        left_ = basis_.inverse();

        total_ = 1;
        for (int i = 0; i < d; ++i) total_ *= static_cast<std::size_t>(res_);
        fwd_idx_.resize(total_);
        bwd_idx_.resize(total_);
        IntMatrix linv = f_.linear().unimodular_inverse();
        for (std::size_t idx = 0; idx < total_; ++idx) {
            fwd_idx_[idx] = apply_index(f_.linear(), idx);
            bwd_idx_[idx] = apply_index(linv, idx);
        }

        values_.assign(total_, Vec::Zero(d));
        const double sup_n = f_.displacement().sup_bound();
        std::vector<int> terms(static_cast<std::size_t>(d), 0);
        for (int i = 0; i < d; ++i) {
            double mod = std::abs(sp.eigenvalues[static_cast<std::size_t>(i)]);
            double amp = left_.row(i).norm() * sup_n;
            if (amp == 0.0) continue;
            double r = mod > 1.0 ? mod : 1.0 / mod;
            terms[static_cast<std::size_t>(i)] =
                static_cast<int>(std::ceil(std::log(amp / 1e-12) / std::log(r))) + 1;
        }
        for (int sweep = 0; sweep < sweeps; ++sweep) {
            double delta = picard_sweep(terms);
            if (delta < 1e-13) break;
        }
        residual_ = 0.0;
        for (std::size_t idx = 0; idx < total_; ++idx) {
            Vec x = point_of(idx);
            Vec lhs = values_[fwd_idx_[idx]];  // ubar(Lx)
            Vec rhs = f_.linear_d() * values_[idx] +
                      f_.displacement().eval(x + values_[idx]);
            residual_ = std::max(residual_, (lhs - rhs).lpNorm<Eigen::Infinity>());
        }
    }

    int resolution() const { return res_; }
    double residual() const { return residual_; }

    Vec point_of(std::size_t idx) const {
        const int d = f_.dim();
        Vec x(d);
        std::size_t rem = idx;
        for (int i = 0; i < d; ++i) {
            x[i] = static_cast<double>(rem % static_cast<std::size_t>(res_)) / res_;
            rem /= static_cast<std::size_t>(res_);
        }
        return x;
    }

    std::size_t size() const { return total_; }
    Vec displacement_at(std::size_t idx) const { return values_[idx]; }
    Vec apply_at(std::size_t idx) const { return torus_wrap(point_of(idx) + values_[idx]); }

private:
    std::size_t apply_index(const IntMatrix& m, std::size_t idx) const {
        const int d = m.dim();
        std::vector<long long> c(static_cast<std::size_t>(d));
        std::size_t rem = idx;
        for (int i = 0; i < d; ++i) {
            c[static_cast<std::size_t>(i)] = static_cast<long long>(rem % static_cast<std::size_t>(res_));
            rem /= static_cast<std::size_t>(res_);
        }
        std::size_t out = 0;
        for (int i = d - 1; i >= 0; --i) {
            long long v = 0;
            for (int j = 0; j < d; ++j)
                v += static_cast<long long>(m(i, j).convert_to<long long>()) * c[static_cast<std::size_t>(j)];
            v %= res_;
            if (v < 0) v += res_;
            out = out * static_cast<std::size_t>(res_) + static_cast<std::size_t>(v);
        }
        return out;
    }

    // One Picard pass: recompute every grid value from the current iterate.
    double picard_sweep(const std::vector<int>& terms) {
        const int d = f_.dim();
        const auto& sp = f_.linear_analysis().spectral;
        std::vector<Vec> next(total_);
        auto shear = [&](std::size_t idx) {
            return f_.displacement().eval(point_of(idx) + values_[idx]);
        };
        std::vector<Vec> ntilde(total_);
        for (std::size_t idx = 0; idx < total_; ++idx) ntilde[idx] = shear(idx);

        for (std::size_t idx = 0; idx < total_; ++idx) {
            Vec coeff = Vec::Zero(d);
            for (int i = 0; i < d; ++i) {
                double beta = sp.eigenvalues[static_cast<std::size_t>(i)];
                int kk = terms[static_cast<std::size_t>(i)];
                if (kk == 0) continue;
                if (std::abs(beta) > 1.0) {
                    std::size_t cur = idx;
                    double w = 1.0;
                    for (int k = 0; k < kk; ++k) {
                        w /= beta;
                        coeff[i] -= w * left_.row(i).dot(ntilde[cur]);
                        cur = fwd_idx_[cur];
                    }
                } else {
                    std::size_t cur = idx;
                    double w = 1.0;
                    for (int k = 1; k <= kk; ++k) {
                        cur = bwd_idx_[cur];
                        coeff[i] += w * left_.row(i).dot(ntilde[cur]);
                        w *= beta;
                    }
                }
            }
            next[idx] = basis_ * coeff;
        }
        double delta = 0.0;
        for (std::size_t idx = 0; idx < total_; ++idx) {
            delta = std::max(delta, (next[idx] - values_[idx]).lpNorm<Eigen::Infinity>());
            values_[idx] = next[idx];
        }
        return delta;
    }

    PerturbedMap f_;
    int res_;
    std::size_t total_ = 0;
    Mat basis_, left_;
    std::vector<std::size_t> fwd_idx_, bwd_idx_;
    std::vector<Vec> values_;
    double residual_ = 0.0;
};

// ---------------------------------------------------------------------------
// Hoelder regularity from the structure function
//   S(delta) = sup_{|t-t'| <= delta} |g(t) - g(t')|
// on dyadic scales delta_j = 2^{-j}.  The estimate is the slope of a
// least-squares fit of log S against log delta.  The Lipschitz verdicts read
// the ratio r_j = S(delta_j)/delta_j on the finest octaves:
//   LIPSCHITZ       r bounded across the two finest octaves,
//   NOT_LIPSCHITZ   r nondecreasing (5% slack) across the four finest
//                   octaves with net growth >= kNetGrowth.
// The net-growth form tolerates the octave-scale wobble that lacunary series
// produce; kNetGrowth = 1.3^4 detects exponents up to ~0.62 while leaving a
// wide margin against Lipschitz data.

enum class LipschitzVerdict { Lipschitz, NotLipschitz, Inconclusive };

inline const char* to_string(LipschitzVerdict v) {
    switch (v) {
        case LipschitzVerdict::Lipschitz: return "LIPSCHITZ";
        case LipschitzVerdict::NotLipschitz: return "NOT_LIPSCHITZ";
        case LipschitzVerdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

struct RegularityEstimate {
    double alpha = 0.0;            // clamped to (0, 1]
    double raw_slope = 0.0;        // unclamped regression slope
    double ci_halfwidth = 0.0;     // 95% half-width of the slope
    double fit_residual = 0.0;     // rms residual of the log-log fit
    LipschitzVerdict verdict = LipschitzVerdict::Inconclusive;
    std::vector<double> deltas;
    std::vector<double> structure;  // S(delta)
};

constexpr double kLipschitzRatioCap = 1.25;  // two-octave boundedness
constexpr double kNetGrowth = 2.856;         // 1.3^4 over four octaves
constexpr double kMonotoneSlack = 0.95;

inline RegularityEstimate estimate_regularity(const std::vector<double>& samples, int j_lo = 3,
                                              int j_hi = 14) {
    if (samples.size() < (1u << 14))
        throw InsufficientScales("estimate_regularity: need at least 2^14 samples");
    if (j_hi - j_lo + 1 < 6)
        throw InsufficientScales("estimate_regularity: need at least 6 dyadic scales");
    const std::size_t m = samples.size();

    RegularityEstimate est;
    for (int j = j_lo; j <= j_hi; ++j) {
        const std::size_t w = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(std::ldexp(static_cast<double>(m), -j))));
        if (w + 1 >= m) continue;
        // sliding max-min over windows of w+1 consecutive samples
        std::deque<std::size_t> qmax, qmin;
        double best = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            while (!qmax.empty() && samples[qmax.back()] <= samples[i]) qmax.pop_back();
            qmax.push_back(i);
            while (!qmin.empty() && samples[qmin.back()] >= samples[i]) qmin.pop_back();
            qmin.push_back(i);
            if (qmax.front() + w < i) qmax.pop_front();
            if (qmin.front() + w < i) qmin.pop_front();
            if (i >= w) best = std::max(best, samples[qmax.front()] - samples[qmin.front()]);
        }
        if (best <= 0.0) continue;
        est.deltas.push_back(std::ldexp(1.0, -j));
        est.structure.push_back(best);
    }
    if (est.deltas.size() < 6)
        throw InsufficientScales("estimate_regularity: structure function degenerate");

    const std::size_t n = est.deltas.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::log(est.deltas[i]), y = std::log(est.structure[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nn = static_cast<double>(n);
    double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    double intercept = (sy - slope * sx) / nn;
    double ss = 0, varx = sxx - sx * sx / nn;
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::log(est.deltas[i]), y = std::log(est.structure[i]);
        double r = y - (slope * x + intercept);
        ss += r * r;
    }
    est.raw_slope = slope;
    est.fit_residual = std::sqrt(ss / nn);
    est.ci_halfwidth = n > 2 ? 1.96 * std::sqrt(ss / (nn - 2.0) / varx) : 0.0;
    est.alpha = std::min(1.0, std::max(1e-6, slope));

    // ratios S/delta, coarse to fine
    std::vector<double> ratio(n);
    for (std::size_t i = 0; i < n; ++i) ratio[i] = est.structure[i] / est.deltas[i];
    bool lipschitz = ratio[n - 1] <= kLipschitzRatioCap * ratio[n - 3];
    bool monotone = n >= 5;
    if (n >= 5)
        for (std::size_t i = n - 5; i + 1 <= n - 1; ++i)
            if (ratio[i + 1] < kMonotoneSlack * ratio[i]) monotone = false;
    bool growing = n >= 5 && ratio[n - 1] >= kNetGrowth * ratio[n - 5];
    if (lipschitz)
        est.verdict = LipschitzVerdict::Lipschitz;
    else if (monotone && growing)
        est.verdict = LipschitzVerdict::NotLipschitz;
    else
        est.verdict = LipschitzVerdict::Inconclusive;
    return est;
}

// Uniform samples of a scalar function along the segment x0 + t * dir, t in
// [0, span).
inline std::vector<double> sample_along_line(const std::function<double(const Vec&)>& g,
                                             const Vec& x0, const Vec& dir, std::size_t count,
                                             double span = 1.0) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        double t = span * static_cast<double>(i) / static_cast<double>(count);
        out[i] = g(x0 + t * dir);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Final classification of a run.

enum class RigidityClass { RigidExpected, CounterexampleRegime, Obstructed };

inline const char* to_string(RigidityClass c) {
    switch (c) {
        case RigidityClass::RigidExpected: return "RIGID_EXPECTED";
        case RigidityClass::CounterexampleRegime: return "COUNTEREXAMPLE_REGIME";
        case RigidityClass::Obstructed: return "OBSTRUCTED";
    }
    return "?";
}

struct RigidityVerdict {
    RigidityClass classification = RigidityClass::Obstructed;
    std::vector<std::string> evidence;
};

inline RigidityVerdict rigidity_verdict(const PeriodicDataReport& report,
                                        const LinearAnalysis& linear,
                                        const std::optional<RegularityEstimate>& h_regularity) {
    RigidityVerdict v;
    auto irr = is_irreducible_over_Q(linear.charpoly);
    if (report.verdict != PeriodicVerdict::Constant) {
        v.classification = RigidityClass::Obstructed;
        v.evidence.push_back("periodic data nonconstant: max deviation " +
                             std::to_string(report.max_deviation) + " >= " +
                             std::to_string(report.tolerance));
        return v;
    }
    auto cmp = compare_with_linear(report, linear.spectral);
    v.evidence.push_back("periodic data constant: max deviation " +
                         std::to_string(report.max_deviation));
    v.evidence.push_back(std::string("exponents ") + (cmp.matches ? "match" : "differ from") +
                         " the linear model (max dev " + std::to_string(cmp.max_deviation) + ")");
    v.evidence.push_back(std::string("characteristic polynomial ") +
                         (irr.irreducible ? "irreducible" : "reducible") + " (" + irr.method + ")");
    if (!cmp.matches) {
        v.classification = RigidityClass::Obstructed;
        v.evidence.push_back("constant data with mismatched exponents: treated as obstructed");
        return v;
    }
    if (irr.irreducible) {
        v.classification = RigidityClass::RigidExpected;
        if (h_regularity)
            v.evidence.push_back("measured conjugacy exponent " + std::to_string(h_regularity->alpha));
        return v;
    }
    v.classification = RigidityClass::CounterexampleRegime;
    if (h_regularity) {
        v.evidence.push_back("measured conjugacy exponent " + std::to_string(h_regularity->alpha) +
                             " (" + to_string(h_regularity->verdict) + ")");
    }
    return v;
}

} // namespace rigidlab
