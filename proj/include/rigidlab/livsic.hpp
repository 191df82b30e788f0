// Cohomological (transfer) equations over a perturbed toral map:
//     phi(f(x)) - phi(x) = g(x) - Lambda,
// solvable only when g - Lambda has zero average over every periodic orbit.
// The solver is a Fourier least-squares fit on a sampling grid with the mean
// gauged to zero; an independent dense-orbit propagation cross-checks it.
// A solved phi turns each one-dimensional leaf into a conformal metric
//     d(a, b) = int_a^b e^{-phi} ds,
// in which f stretches leaves by exactly e^{Lambda}, and drives the leaf ODE
//     z' = e^{phi(z)}
// that rebuilds the conjugacy segment-by-segment.

#pragma once

#include <Eigen/QR>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rigidlab/cocycle.hpp"
#include "rigidlab/leaf.hpp"
#include "rigidlab/periodic.hpp"

namespace rigidlab {

struct CocycleObservable {
    std::string tag;
    std::function<double(const Vec&)> eval;
    double target = 0.0;  // Lambda
};

// log ||Df(x) v(x)|| along a one-dimensional band direction field.
template <typename MapLike>
CocycleObservable log_band_norm(const MapLike& f, DirectionField field, double target,
                                std::string tag) {
    CocycleObservable g;
    g.tag = std::move(tag);
    g.target = target;
    g.eval = [&f, field = std::move(field)](const Vec& x) {
        Vec v = field(x);
        return std::log((f.jacobian(x).matrix * v).norm());
    };
    return g;
}

// log |det of Df(x) restricted to a flag|, with the flag frame supplied per
// point as orthonormal columns.
template <typename MapLike>
CocycleObservable log_flag_jacobian(const MapLike& f, std::function<Mat(const Vec&)> frame,
                                    double target, std::string tag) {
    CocycleObservable g;
    g.tag = std::move(tag);
    g.target = target;
    g.eval = [&f, frame = std::move(frame)](const Vec& x) {
        Mat q = frame(x);
        Vec fx = f.eval(x);
        Mat qf = frame(fx);
        Mat restricted = qf.transpose() * f.jacobian(x).matrix * q;
        return std::log(std::abs(restricted.determinant()));
    };
    return g;
}

struct ObstructionReport {
    bool pass = false;
    double max_abs_average = 0.0;
    double tolerance = 0.0;
    int witness = -1;  // record index of the worst orbit
    std::vector<double> averages;
};

constexpr double kDefaultObstructionTol = 1e-6;  // tau_obs

inline ObstructionReport obstruction_test(const CocycleObservable& g,
                                          const std::vector<PeriodicOrbitRecord>& records,
                                          double tau_obs = kDefaultObstructionTol) {
    ObstructionReport rep;
    rep.tolerance = tau_obs;
    rep.averages.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        double sum = 0.0;
        for (const Vec& p : records[r].points) sum += g.eval(p);
        double avg = sum / static_cast<double>(records[r].points.size()) - g.target;
        rep.averages.push_back(avg);
        if (std::abs(avg) > rep.max_abs_average) {
            rep.max_abs_average = std::abs(avg);
            rep.witness = static_cast<int>(r);
        }
    }
    rep.pass = rep.max_abs_average < tau_obs;
    return rep;
}

struct TransferOptions {
    int fourier_cutoff = 16;      // K, per axis
    int grid_resolution = 64;     // per gridded axis
    std::vector<int> mode_axes;   // axes the wave vectors may use (default: all)
    std::vector<int> grid_axes;   // axes the sampling grid varies over
    int cross_check_orbit = 2000; // dense-orbit propagation length
    double cond_limit = 1e12;
};

struct TransferFunction {
    std::vector<Eigen::VectorXi> waves;   // one representative per +/- pair
    std::vector<double> cos_coef, sin_coef;
    double target = 0.0;          // Lambda
    double residual_sup = 0.0;    // sup over the fit grid
    double cross_check_dev = 0.0; // dense-orbit propagation disagreement
    double sup_norm = 0.0;        // max |phi| over the fit grid
    int fourier_cutoff = 0;
    int grid_resolution = 0;

    double eval(const Vec& x) const {
        double v = 0.0;
        for (std::size_t m = 0; m < waves.size(); ++m) {
            double arg = 0.0;
            for (int i = 0; i < waves[m].size(); ++i) arg += 2.0 * M_PI * waves[m][i] * x[i];
            v += cos_coef[m] * std::cos(arg) + sin_coef[m] * std::sin(arg);
        }
        return v;
    }
};

template <typename MapLike>
TransferFunction solve_transfer(const CocycleObservable& g, const MapLike& f,
                                const ObstructionReport& obstruction,
                                const TransferOptions& opts = {}) {
    if (!obstruction.pass)
        throw ObstructionFailed("solve_transfer: periodic obstruction " +
                                std::to_string(obstruction.max_abs_average) + " exceeds " +
                                std::to_string(obstruction.tolerance));
    const int d = f.dim();
    std::vector<int> mode_axes = opts.mode_axes;
    if (mode_axes.empty())
        for (int i = 0; i < d; ++i) mode_axes.push_back(i);
    std::vector<int> grid_axes = opts.grid_axes;
    if (grid_axes.empty()) grid_axes = mode_axes;

    // wave vectors: one representative per +/- pair (first nonzero entry > 0)
    TransferFunction phi;
    phi.target = g.target;
    phi.fourier_cutoff = opts.fourier_cutoff;
    phi.grid_resolution = opts.grid_resolution;
    const int K = opts.fourier_cutoff;
    std::vector<int> kvec(mode_axes.size(), -K);
    while (true) {
        bool nonzero = false, positive = false;
        for (int v : kvec)
            if (v != 0) {
                nonzero = true;
                positive = v > 0;
                break;
            }
        if (nonzero && positive) {
            Eigen::VectorXi w = Eigen::VectorXi::Zero(d);
            for (std::size_t i = 0; i < mode_axes.size(); ++i)
                w[mode_axes[i]] = kvec[i];
            phi.waves.push_back(w);
        }
        std::size_t pos = 0;
        while (pos < kvec.size()) {
            if (++kvec[pos] <= K) break;
            kvec[pos] = -K;
            ++pos;
        }
        if (pos == kvec.size()) break;
    }
    const std::size_t nm = phi.waves.size();

    // sampling grid
    Vec anchor(d);
    for (int i = 0; i < d; ++i) anchor[i] = wrap01(0.5 + 0.318309886 * (i + 1));
    std::size_t rows = 1;
    for (std::size_t i = 0; i < grid_axes.size(); ++i) rows *= static_cast<std::size_t>(opts.grid_resolution);
    std::vector<Vec> xs(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        Vec x = anchor;
        std::size_t rem = r;
        for (int a : grid_axes) {
            x[a] = static_cast<double>(rem % static_cast<std::size_t>(opts.grid_resolution)) /
                   opts.grid_resolution;
            rem /= static_cast<std::size_t>(opts.grid_resolution);
        }
        xs[r] = x;
    }

    Mat a(rows, 2 * nm);
    Vec rhs(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const Vec& x = xs[r];
        Vec fx = f.eval(x);
        rhs[static_cast<Eigen::Index>(r)] = g.eval(x) - g.target;
        for (std::size_t m = 0; m < nm; ++m) {
            double ax = 0, afx = 0;
            for (int i = 0; i < d; ++i) {
                ax += 2.0 * M_PI * phi.waves[m][i] * x[i];
                afx += 2.0 * M_PI * phi.waves[m][i] * fx[i];
            }
            a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(2 * m)) =
                std::cos(afx) - std::cos(ax);
            a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(2 * m + 1)) =
                std::sin(afx) - std::sin(ax);
        }
    }

    Eigen::ColPivHouseholderQR<Mat> qr(a);
    double cond = std::abs(qr.matrixR()(0, 0)) /
                  std::abs(qr.matrixR()(static_cast<Eigen::Index>(2 * nm - 1),
                                        static_cast<Eigen::Index>(2 * nm - 1)));
    if (!std::isfinite(cond) || cond > opts.cond_limit)
        throw IllConditioned("solve_transfer: normal system condition " + std::to_string(cond));
    Vec sol = qr.solve(rhs);

    phi.cos_coef.resize(nm);
    phi.sin_coef.resize(nm);
    for (std::size_t m = 0; m < nm; ++m) {
        phi.cos_coef[m] = sol[static_cast<Eigen::Index>(2 * m)];
        phi.sin_coef[m] = sol[static_cast<Eigen::Index>(2 * m + 1)];
    }

    Vec fit = a * sol - rhs;
    phi.residual_sup = fit.lpNorm<Eigen::Infinity>();
    for (std::size_t r = 0; r < rows; ++r)
        phi.sup_norm = std::max(phi.sup_norm, std::abs(phi.eval(xs[r])));

    // independent cross-check: telescoped partial sums along one dense orbit
    if (opts.cross_check_orbit > 1) {
        Vec z = anchor;
        double partial = 0.0, dev = 0.0;
        double base = phi.eval(z);
        for (int j = 1; j < opts.cross_check_orbit; ++j) {
            partial += g.eval(z) - g.target;
            z = f.eval(z);
            dev = std::max(dev, std::abs(phi.eval(z) - base - partial));
        }
        phi.cross_check_dev = dev;
    }
    return phi;
}

struct TelescopingReport {
    double max_residual = 0.0;   // n-step cocycle identity defect
    double uniform_gap = 0.0;    // worst |log Jac^n - n Lambda| - 2||phi||_inf excess
    bool uniform_bound_ok = false;
};

// Verifies |Jac^n(x)| = e^{-phi(x)} e^{phi(f^n x)} e^{n Lambda} on sample
// points, where log Jac^n is accumulated through the observable itself, and
// the uniform two-sided bound with C = exp(2 ||phi||_inf).
template <typename MapLike>
TelescopingReport telescoping_check(const TransferFunction& phi, const CocycleObservable& g,
                                    const MapLike& f, int n, int n_points = 1000,
                                    std::uint64_t seed = 2026) {
    TelescopingReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < n_points; ++t) {
        Vec x(f.dim());
        for (int i = 0; i < f.dim(); ++i) x[i] = u(rng);
        double logjac = 0.0;
        Vec z = x;
        for (int k = 0; k < n; ++k) {
            logjac += g.eval(z);
            z = f.eval(z);
        }
        double predicted = -phi.eval(x) + phi.eval(z) + n * g.target;
        rep.max_residual = std::max(rep.max_residual, std::abs(logjac - predicted));
        double gap = std::abs(logjac - n * g.target) - 2.0 * phi.sup_norm;
        rep.uniform_gap = std::max(rep.uniform_gap, gap);
    }
    rep.uniform_bound_ok = rep.uniform_gap <= rep.max_residual + 1e-12;
    return rep;
}

// ---------------------------------------------------------------------------
// Conformal leaf metric d(a,b) = int e^{-phi} ds along a traced leaf.

struct ConformalMetric {
    std::function<double(const Vec&)> phi;  // empty means phi == 0
    double lambda = 0.0;                    // band exponent: e^{lambda} stretch

    static ConformalMetric from_transfer(const TransferFunction& t, double lambda) {
        ConformalMetric m;
        m.phi = [&t](const Vec& x) { return t.eval(x); };
        m.lambda = lambda;
        return m;
    }

    double density(const Vec& torus_point) const {
        return phi ? std::exp(-phi(torus_point)) : 1.0;
    }
};

// Composite Simpson along the segment between arc positions, with one
// Richardson halving step to reach the requested tolerance.
inline double conformal_distance(const ConformalMetric& metric, const LeafSegment& seg,
                                 double arc_a, double arc_b, double tol = 1e-8) {
    if (arc_b < arc_a) std::swap(arc_a, arc_b);
    auto integral = [&](std::size_t n) {
        double h = (arc_b - arc_a) / static_cast<double>(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s0 = arc_a + h * static_cast<double>(i);
            double f0 = metric.density(torus_wrap(seg.point_at_arc(s0)));
            double fm = metric.density(torus_wrap(seg.point_at_arc(s0 + 0.5 * h)));
            double f1 = metric.density(torus_wrap(seg.point_at_arc(s0 + h)));
            acc += h / 6.0 * (f0 + 4.0 * fm + f1);
        }
        return acc;
    };
    std::size_t n = std::max<std::size_t>(8, static_cast<std::size_t>((arc_b - arc_a) / 5e-3));
    double prev = integral(n), cur = integral(2 * n);
    while (std::abs(cur - prev) > tol && n < (1u << 22)) {
        n *= 2;
        prev = cur;
        cur = integral(2 * n);
    }
    return cur;
}

// Solution of z' = e^{phi(z)}, z(0) = segment point at arc s0, reported as
// the arc position after integrating for parameter time t (classical RK4 on
// the arc coordinate).
struct LeafOdeMap {
    const ConformalMetric* metric = nullptr;
    const LeafSegment* target = nullptr;
    double s0 = 0.0;

    double arc_at(double t, double step = 1e-3) const {
        double s = s0;
        double total = std::abs(t);
        double dir = t >= 0 ? 1.0 : -1.0;
        const double arc_hi = target->arcs().back();
        double done = 0.0;
        auto speed = [&](double arc) {
            return 1.0 / metric->density(torus_wrap(target->point_at_arc(arc)));
        };
        while (done < total) {
            double h = std::min(step, total - done);
            double k1 = speed(s);
            double k2 = speed(s + dir * 0.5 * h * k1);
            double k3 = speed(s + dir * 0.5 * h * k2);
            double k4 = speed(s + dir * h * k3);
            s += dir * h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            done += h;
            if (s < -1e-9 || s > arc_hi + 1e-9)
                throw OdeStepFailure("leaf ODE left the traced segment");
        }
        return s;
    }

    Vec point_at(double t, double step = 1e-3) const {
        return torus_wrap(target->point_at_arc(arc_at(t, step)));
    }
};

} // namespace rigidlab
