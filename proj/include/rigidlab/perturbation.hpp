// Smooth perturbations f = L + u of a hyperbolic toral automorphism, with u a
// trigonometric polynomial (closed-form derivatives, certifiable C^1 size).
//
// Hyperbolicity of f is certified, not assumed: writing vectors in the
// eigenbasis of L with unstable/stable moduli a = |beta^u_1|, b = |beta^s_k|,
// the unit-aperture cone field is preserved and uniformly expanded/contracted
// whenever the perturbation of the derivative, measured in that basis, stays
// below  margin = min((a-b)/4, (a-1)/2, (1-b)/2).  The basis change costs a
// factor kappa(C), so the certificate is  kappa(C) * ||Du||_inf < margin.
//
// The constructor additionally requires ||Du||_inf < sigma_min(L), which makes
// the lift a global diffeomorphism of R^d.

#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "rigidlab/toral_linear.hpp"

namespace rigidlab {

struct TrigMode {
    Eigen::VectorXi wave;  // k in Z^d
    Vec coeff;             // c in R^d
    double phase = 0.0;
};

class TrigDisplacement {
public:
    TrigDisplacement() = default;
    explicit TrigDisplacement(std::vector<TrigMode> modes) : modes_(std::move(modes)) {}

    const std::vector<TrigMode>& modes() const { return modes_; }
    bool empty() const { return modes_.empty(); }

    Vec eval(const Vec& x) const {
        Vec u = Vec::Zero(x.size());
        for (const auto& m : modes_) {
            double arg = m.phase;
            for (int i = 0; i < m.wave.size(); ++i) arg += 2.0 * M_PI * m.wave[i] * x[i];
            u += std::cos(arg) * m.coeff;
        }
        return u;
    }

    Mat jacobian(const Vec& x) const {
        Mat j = Mat::Zero(x.size(), x.size());
        for (const auto& m : modes_) {
            double arg = m.phase;
            for (int i = 0; i < m.wave.size(); ++i) arg += 2.0 * M_PI * m.wave[i] * x[i];
            double s = -2.0 * M_PI * std::sin(arg);
            for (int r = 0; r < j.rows(); ++r) {
                if (m.coeff[r] == 0.0) continue;
                for (int c = 0; c < j.cols(); ++c)
                    if (m.wave[c] != 0) j(r, c) += s * m.coeff[r] * m.wave[c];
            }
        }
        return j;
    }

    // sum_k ||c_k||, a sup bound for ||u||.
    double sup_bound() const {
        double b = 0;
        for (const auto& m : modes_) b += m.coeff.norm();
        return b;
    }

    // sum_k 2*pi*||k|| ||c_k||, a sup bound for ||Du||.
    double c1_bound() const {
        double b = 0;
        for (const auto& m : modes_) b += 2.0 * M_PI * m.wave.cast<double>().norm() * m.coeff.norm();
        return b;
    }

    TrigDisplacement scaled(double factor) const {
        std::vector<TrigMode> ms = modes_;
        for (auto& m : ms) m.coeff *= factor;
        return TrigDisplacement(std::move(ms));
    }

private:
    std::vector<TrigMode> modes_;
};

// Scalar 1-periodic trig polynomial (the fiber shear of the skew family).
struct TrigScalar {
    struct Mode {
        Eigen::VectorXi wave;
        double amp = 0.0;
        double phase = 0.0;
    };
    std::vector<Mode> modes;

    double eval(const Vec& x) const {
        double v = 0;
        for (const auto& m : modes) {
            double arg = m.phase;
            for (int i = 0; i < m.wave.size(); ++i) arg += 2.0 * M_PI * m.wave[i] * x[i];
            v += m.amp * std::cos(arg);
        }
        return v;
    }

    double sup_bound() const {
        double b = 0;
        for (const auto& m : modes) b += std::abs(m.amp);
        return b;
    }

    static TrigScalar cosine(const Eigen::VectorXi& wave, double amp, double phase = 0.0) {
        TrigScalar s;
        s.modes.push_back({wave, amp, phase});
        return s;
    }
};

// Parameters of the skew family f(x, y) = (A^m x, B^n y + psi(x) e_u).
// The base block carries the larger power so that the fiber rate |lambda|^n
// stays below the base rate |mu|^m: that resonance is what makes the
// conjugacy component genuinely non-Lipschitz, with critical exponent
// alpha_star = n log|lambda| / (m log|mu|).
struct SkewStructure {
    IntMatrix a;       // base factor
    IntMatrix b;       // fiber factor
    int n = 0;         // fiber power
    int m = 0;         // base power
    int base_dim = 0;
    int fiber_dim = 0;
    TrigScalar psi;    // shear, a function of the base coordinates only
    Vec e_u;           // unit unstable eigenvector of B
    double lambda = 0.0;  // eigenvalue of B along e_u
    double mu = 0.0;      // top unstable eigenvalue modulus of A
    double alpha_star = 0.0;
};

struct JacobianSample {
    Vec point;
    Mat matrix;
};

class PerturbedMap {
public:
    PerturbedMap(IntMatrix linear, TrigDisplacement disp,
                 std::optional<SkewStructure> skew = std::nullopt)
        : linear_(std::move(linear)),
          linear_inv_(linear_.unimodular_inverse()),
          analysis_(analyze(linear_)),
          disp_(std::move(disp)),
          skew_(std::move(skew)) {
        ld_ = linear_.to_double();
        lid_ = linear_inv_.to_double();
        Eigen::JacobiSVD<Mat> svd(ld_);
        sigma_min_ = svd.singularValues().minCoeff();
        c1_ = disp_.c1_bound();
        if (c1_ >= sigma_min_)
            throw PerturbationTooLarge("PerturbedMap: ||Du|| bound " + std::to_string(c1_) +
                                       " >= sigma_min(L) = " + std::to_string(sigma_min_) +
                                       ", lift may fail to be invertible");
        cone_margin_ = 0.0;
        basis_condition_ = 0.0;
        if (analysis_.spectral.real_spectrum) {
            const auto& sp = analysis_.spectral;
            double a = std::exp(sp.exponents[static_cast<std::size_t>(sp.stable_count)]);
            double b = std::exp(sp.exponents[static_cast<std::size_t>(sp.stable_count) - 1]);
            cone_margin_ = std::min({(a - b) / 4.0, (a - 1.0) / 2.0, (1.0 - b) / 2.0});
            Eigen::JacobiSVD<Mat> csvd(sp.eigenvectors);
            basis_condition_ =
                csvd.singularValues().maxCoeff() / csvd.singularValues().minCoeff();
        }
        anosov_certified_ =
            analysis_.spectral.real_spectrum && basis_condition_ * c1_ < cone_margin_;
    }

    int dim() const { return linear_.dim(); }
    const IntMatrix& linear() const { return linear_; }
    const Mat& linear_d() const { return ld_; }
    const Mat& linear_inverse_d() const { return lid_; }
    const LinearAnalysis& linear_analysis() const { return analysis_; }
    const TrigDisplacement& displacement() const { return disp_; }
    const std::optional<SkewStructure>& skew() const { return skew_; }

    double c1_distance_bound() const { return c1_; }
    double cone_margin() const { return cone_margin_; }
    double basis_condition() const { return basis_condition_; }
    bool anosov_certified() const { return anosov_certified_; }
    bool is_linear() const { return disp_.empty(); }

    void require_certificate(const char* who) const {
        if (!anosov_certified_)
            throw PerturbationTooLarge(std::string(who) +
                                       ": map carries no Anosov certificate (kappa*||Du|| = " +
                                       std::to_string(basis_condition_ * c1_) + " >= margin " +
                                       std::to_string(cone_margin_) + ")");
    }

    Vec lift_eval(const Vec& x) const { return ld_ * x + disp_.eval(x); }

    Vec eval(const Vec& x) const { return torus_wrap(lift_eval(x)); }

    JacobianSample jacobian(const Vec& x) const {
        if (disp_.empty()) return {x, ld_};
        return {x, ld_ + disp_.jacobian(x)};
    }

    // Newton inverse on the torus; seeded with the exact inverse of L.
    Vec inverse_eval(const Vec& y) const {
        Vec x = torus_wrap(lid_ * y);
        Vec r = torus_diff(eval(x), y);
        double rn = r.norm();
        for (int it = 0; it < 60; ++it) {
            if (rn < 1e-13) return x;
            Vec step = jacobian(x).matrix.partialPivLu().solve(r);
            double scale = 1.0;
            for (int half = 0; half < 30; ++half) {
                Vec xn = torus_wrap(x - scale * step);
                Vec rnew = torus_diff(eval(xn), y);
                if (rnew.norm() < rn || scale < 1e-6) {
                    x = xn;
                    r = rnew;
                    rn = rnew.norm();
                    break;
                }
                scale *= 0.5;
            }
        }
        if (rn >= 1e-10)
            throw NewtonDiverged("inverse_eval: residual " + std::to_string(rn));
        return x;
    }

    Vec iterate(Vec x, int steps) const {
        for (int i = 0; i < steps; ++i) x = eval(x);
        return x;
    }

private:
    IntMatrix linear_;
    IntMatrix linear_inv_;
    LinearAnalysis analysis_;
    TrigDisplacement disp_;
    std::optional<SkewStructure> skew_;
    Mat ld_, lid_;
    double sigma_min_ = 0, c1_ = 0, cone_margin_ = 0, basis_condition_ = 0;
    bool anosov_certified_ = false;
};

inline PerturbedMap make_generic(const IntMatrix& l, const std::vector<TrigMode>& modes,
                                 double epsilon) {
    TrigDisplacement d(modes);
    PerturbedMap f(l, d.scaled(epsilon));
    if (!f.anosov_certified())
        throw PerturbationTooLarge(
            "make_generic: kappa*||Du|| = " +
            std::to_string(f.basis_condition() * f.c1_distance_bound()) +
            " violates the cone margin " + std::to_string(f.cone_margin()));
    return f;
}

// Skew-product family over T^{dim A + dim B}:
//   f(x, y) = (A^m x, B^n y + psi(x) e_u),  Be_u = lambda e_u, |lambda| > 1,
// scaled so that psi carries the factor epsilon.  Derivative samples are block
// triangular with exactly vanishing upper-right block:
//   Df(x,y) = [ A^m     0  ]
//             [ e_u dpsi(x)  B^n ].
inline PerturbedMap make_counterexample(const IntMatrix& a, const IntMatrix& b, int n, int m,
                                        const TrigScalar& psi, double epsilon) {
    if (n < 1 || m < 1) throw Error("make_counterexample: powers must be >= 1");
    auto an_a = analyze(a);
    auto an_b = analyze(b);
    if (!an_a.spectral.real_spectrum || !an_a.spectral.distinct_modulus ||
        !an_b.spectral.real_spectrum || !an_b.spectral.distinct_modulus)
        throw DegenerateSpectrum("make_counterexample: blocks need real simple spectrum");

    IntMatrix base = a.pow(m);
    IntMatrix fiber = b.pow(n);
    IntMatrix l = block_diag(base, fiber);
    auto an_l = analyze(l);
    if (!an_l.spectral.distinct_modulus)
        throw SpectrumClash("make_counterexample: diag(A^m, B^n) has repeated moduli");

    SkewStructure sk;
    sk.a = a;
    sk.b = b;
    sk.n = n;
    sk.m = m;
    sk.base_dim = a.dim();
    sk.fiber_dim = b.dim();
    sk.psi = psi;
    for (auto& md : sk.psi.modes) md.amp *= epsilon;

    // unstable eigenvector of B with the largest modulus eigenvalue
    const auto& spb = an_b.spectral;
    int top = b.dim() - 1;
    sk.e_u = spb.eigenvectors.col(top);
    sk.lambda = spb.eigenvalues[static_cast<std::size_t>(top)];
    sk.mu = std::abs(an_a.spectral.eigenvalues.back());
    sk.alpha_star = (n * std::log(std::abs(sk.lambda))) / (m * std::log(sk.mu));

    std::vector<TrigMode> modes;
    const int d = l.dim();
    for (const auto& pm : sk.psi.modes) {
        TrigMode tm;
        tm.wave = Eigen::VectorXi::Zero(d);
        for (int i = 0; i < sk.base_dim; ++i) tm.wave[i] = pm.wave[i];
        tm.coeff = Vec::Zero(d);
        for (int i = 0; i < sk.fiber_dim; ++i) tm.coeff[sk.base_dim + i] = pm.amp * sk.e_u[i];
        tm.phase = pm.phase;
        modes.push_back(std::move(tm));
    }
    return PerturbedMap(l, TrigDisplacement(std::move(modes)), sk);
}

// View of f^{-1} with the same orbit/derivative interface, so cocycle and
// leaf code can run either time direction.
class InverseView {
public:
    explicit InverseView(const PerturbedMap& f) : f_(f) {}
    int dim() const { return f_.dim(); }
    Vec eval(const Vec& x) const { return f_.inverse_eval(x); }
    JacobianSample jacobian(const Vec& x) const {
        Vec pre = f_.inverse_eval(x);
        return {x, f_.jacobian(pre).matrix.inverse()};
    }

private:
    const PerturbedMap& f_;
};

} // namespace rigidlab
