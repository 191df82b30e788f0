// Periodic orbits of a perturbed map, obtained by Newton continuation from
// the exact periodic points of its linear part.  Structural stability pairs
// the two orbit sets one-to-one for certified perturbations, which is what
// lets the recovered counts be checked against |det(L^tau - I)| exactly.

#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rigidlab/cocycle.hpp"
#include "rigidlab/perturbation.hpp"

namespace rigidlab {

struct PeriodicOrbitRecord {
    int period = 0;
    std::vector<Vec> points;        // p, f(p), ..., f^{period-1}(p), wrapped
    Mat monodromy;                  // Df^period at points[0]
    std::vector<double> moduli;     // |eig(monodromy)|, ascending
    std::vector<double> exponents;  // per-iterate: log(moduli)/period, ascending
    double residual = 0.0;          // ||f^period(p) - p||_torus
    int newton_iterations = 0;
};

struct ContinuationOutcome {
    std::vector<PeriodicOrbitRecord> records;
    int diverged_seeds = 0;
    std::vector<std::string> notes;
};

namespace detail {

// Exact L-orbits of exact period tau, one lexicographically minimal
// representative each, together with the lattice vector (L^tau - I) rep.
struct LatticeSeed {
    RationalPoint rep;
    std::vector<BigInt> lattice;  // integer vector v with L^tau rep = rep + v
};

inline std::vector<LatticeSeed> lattice_orbit_seeds(const IntMatrix& l, int tau,
                                                    std::size_t point_cap) {
    auto pts = enumerate_periodic_points(l, tau, point_cap);

    // keep only points whose exact period is tau
    std::vector<RationalPoint> exact;
    for (const auto& p : pts) {
        bool lower = false;
        for (int d = 1; d < tau && !lower; ++d) {
            if (tau % d != 0) continue;
            IntMatrix ld = l.pow(d);
            bool fixed = true;
            for (int i = 0; i < l.dim() && fixed; ++i) {
                BigInt img = 0;
                for (int j = 0; j < l.dim(); ++j) img += ld(i, j) * p.num[static_cast<std::size_t>(j)];
                if ((img - p.num[static_cast<std::size_t>(i)]) % p.den != 0) fixed = false;
            }
            if (fixed) lower = true;
        }
        if (!lower) exact.push_back(p);
    }

    std::vector<LatticeSeed> seeds;
    std::map<RationalPoint, bool> used;
    for (const auto& p : exact) used[p] = false;
    for (const auto& p : exact) {
        if (used[p]) continue;
        RationalPoint rep = p, cur = p;
        for (int s = 0; s < tau; ++s) {
            used[cur] = true;
            if (cur < rep) rep = cur;
            cur = apply_lattice_map(l, cur);
        }
        LatticeSeed seed;
        seed.rep = rep;
        IntMatrix lt = l.pow(tau);
        seed.lattice.assign(static_cast<std::size_t>(l.dim()), 0);
        for (int i = 0; i < l.dim(); ++i) {
            BigInt img = 0;
            for (int j = 0; j < l.dim(); ++j) img += lt(i, j) * rep.num[static_cast<std::size_t>(j)];
            seed.lattice[static_cast<std::size_t>(i)] = (img - rep.num[static_cast<std::size_t>(i)]) / rep.den;
        }
        seeds.push_back(std::move(seed));
    }
    return seeds;
}

// Newton on the lift equation F^tau(x) = x + v.
inline std::optional<std::pair<Vec, int>> newton_orbit(const PerturbedMap& f, Vec x, const Vec& v,
                                                       int tau) {
    const int d = f.dim();
    double prev = 1e300;
    for (int it = 0; it < 50; ++it) {
        Vec z = x;
        Mat dg = Mat::Identity(d, d);
        for (int s = 0; s < tau; ++s) {
            dg = f.jacobian(z).matrix * dg;
            z = f.lift_eval(z);
        }
        Vec g = z - x - v;
        double rn = g.norm();
        if (rn < 1e-13) return std::make_pair(torus_wrap(x), it);
        double scale = rn > prev ? 0.5 : 1.0;  // damp on residual increase
        Vec step = (dg - Mat::Identity(d, d)).partialPivLu().solve(g);
        x -= scale * step;
        prev = rn;
    }
    return std::nullopt;
}

inline std::vector<double> moduli_of(const Mat& m) {
    Eigen::EigenSolver<Mat> es(m);
    std::vector<double> mods(static_cast<std::size_t>(m.rows()));
    for (int i = 0; i < m.rows(); ++i) mods[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()[i]);
    std::sort(mods.begin(), mods.end());
    return mods;
}

} // namespace detail

// Builds one record per L-orbit seed, Newton-refined to a periodic orbit of
// f.  Seeds whose Newton iteration diverges are counted and skipped (the run
// continues); any collision or unexplained count defect raises CountMismatch.
inline ContinuationOutcome continue_orbits(const PerturbedMap& f, int t_max,
                                           std::size_t orbit_cap = 10000,
                                           std::size_t point_cap = 100000) {
    f.require_certificate("continue_orbits");
    ContinuationOutcome out;
    const int d = f.dim();

    for (int tau = 1; tau <= t_max; ++tau) {
        auto seeds = detail::lattice_orbit_seeds(f.linear(), tau, point_cap);
        if (seeds.size() > orbit_cap)
            throw TooManyPoints("continue_orbits: " + std::to_string(seeds.size()) +
                                " orbits of period " + std::to_string(tau));
        std::vector<PeriodicOrbitRecord> found;
        int diverged = 0;
        for (const auto& seed : seeds) {
            Vec x0 = seed.rep.to_vec();
            Vec v(d);
            for (int i = 0; i < d; ++i) v[i] = seed.lattice[static_cast<std::size_t>(i)].convert_to<double>();
            auto sol = detail::newton_orbit(f, x0, v, tau);
            if (!sol) {
                ++diverged;
                out.notes.push_back("NewtonDiverged: period " + std::to_string(tau) + " seed");
                continue;
            }
            PeriodicOrbitRecord rec;
            rec.period = tau;
            rec.newton_iterations = sol->second;
            Vec p = sol->first;
            rec.points.push_back(p);
            Mat mono = Mat::Identity(d, d);
            Vec z = p;
            for (int s = 0; s < tau; ++s) {
                mono = f.jacobian(z).matrix * mono;
                z = f.eval(z);
                if (s + 1 < tau) rec.points.push_back(z);
            }
            rec.residual = torus_dist(z, p);
            rec.monodromy = mono;
            rec.moduli = detail::moduli_of(mono);
            rec.exponents.resize(rec.moduli.size());
            for (std::size_t i = 0; i < rec.moduli.size(); ++i)
                rec.exponents[i] = std::log(rec.moduli[i]) / tau;
            found.push_back(std::move(rec));
        }

        // distinctness of the recovered orbits
        for (std::size_t i = 0; i < found.size(); ++i)
            for (std::size_t j = i + 1; j < found.size(); ++j)
                for (const Vec& q : found[j].points)
                    if (torus_dist(found[i].points[0], q) < 1e-8)
                        throw CountMismatch("continue_orbits: two seeds of period " +
                                            std::to_string(tau) + " converged to one orbit");
        if (found.size() + static_cast<std::size_t>(diverged) != seeds.size())
            throw CountMismatch("continue_orbits: period " + std::to_string(tau) + " recovered " +
                                std::to_string(found.size()) + " of " + std::to_string(seeds.size()));
        out.diverged_seeds += diverged;

        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
            for (int i = 0; i < a.points[0].size(); ++i)
                if (std::abs(a.points[0][i] - b.points[0][i]) > 1e-12)
                    return a.points[0][i] < b.points[0][i];
            return false;
        });
        for (auto& r : found) out.records.push_back(std::move(r));
    }
    return out;
}

enum class PeriodicVerdict { Constant, Nonconstant };

struct PeriodicDataReport {
    std::vector<PeriodicOrbitRecord> records;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    PeriodicVerdict verdict = PeriodicVerdict::Constant;
    std::size_t witness_a = 0, witness_b = 0;  // indices of the worst pair
};

constexpr double kPeriodicTolSkew = 1e-6;
constexpr double kPeriodicTolGeneric = 1e-4;

inline double default_periodic_tolerance(const PerturbedMap& f) {
    return f.skew().has_value() ? kPeriodicTolSkew : kPeriodicTolGeneric;
}

inline PeriodicDataReport periodic_data(std::vector<PeriodicOrbitRecord> records, double tau_pd) {
    if (records.size() < 2) throw Error("periodic_data: need at least two orbits");
    PeriodicDataReport rep;
    rep.records = std::move(records);
    rep.tolerance = tau_pd;
    for (std::size_t i = 0; i < rep.records.size(); ++i)
        for (std::size_t j = i + 1; j < rep.records.size(); ++j) {
            double dev = 0.0;
            for (std::size_t k = 0; k < rep.records[i].exponents.size(); ++k)
                dev = std::max(dev, std::abs(rep.records[i].exponents[k] - rep.records[j].exponents[k]));
            if (dev > rep.max_deviation) {
                rep.max_deviation = dev;
                rep.witness_a = i;
                rep.witness_b = j;
            }
        }
    rep.verdict = rep.max_deviation < tau_pd ? PeriodicVerdict::Constant : PeriodicVerdict::Nonconstant;
    return rep;
}

struct LinearComparison {
    bool matches = false;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    int first_fail_index = -1;  // into the ascending exponent list
};

// Checks lambda_i(p, f) = lambda_i(L) for all bands and both signs.
inline LinearComparison compare_with_linear(const PeriodicDataReport& report,
                                            const SpectralData& linear) {
    if (report.verdict != PeriodicVerdict::Constant)
        throw Error("compare_with_linear: periodic data is not constant");
    LinearComparison cmp;
    cmp.tolerance = report.tolerance;
    const auto& exps = report.records.front().exponents;
    for (std::size_t i = 0; i < exps.size(); ++i) {
        double dev = std::abs(exps[i] - linear.exponents[i]);
        cmp.max_deviation = std::max(cmp.max_deviation, dev);
        if (dev >= report.tolerance && cmp.first_fail_index < 0)
            cmp.first_fail_index = static_cast<int>(i);
    }
    cmp.matches = cmp.first_fail_index < 0;
    return cmp;
}

} // namespace rigidlab
