// Polyline approximations of one-dimensional invariant leaves.
//
// A traced segment stores a continuous lift in R^d together with unit
// tangents.  Under iteration the nodes are mapped by the lift and the
// tangents by the derivative; both are self-correcting for an expanding
// leaf, since transversal errors lie in contracted directions.  Gaps opened
// by the stretching are re-filled with cubic Hermite steps built from the
// stored leaf tangents (a local third-order model of the leaf, not a chord),
// and the inserted points are pulled back onto the leaf by the same
// contraction argument on later iterates.

#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "rigidlab/perturbation.hpp"

namespace rigidlab {

using DirectionField = std::function<Vec(const Vec&)>;  // unit vector at a torus point

// Strongest-expansion direction by pulling a frame vector from the past.
template <typename MapLike>
DirectionField power_iteration_field(const MapLike& f, int steps = 40) {
    return [&f, steps](const Vec& x) {
        std::vector<Vec> orbit(static_cast<std::size_t>(steps));
        Vec y = x;
        for (int i = steps - 1; i >= 0; --i) {
            y = f.inverse_eval(y);
            orbit[static_cast<std::size_t>(i)] = y;
        }
        Vec v(x.size());
        for (int i = 0; i < x.size(); ++i) v[i] = 1.0 / std::sqrt(2.0 + i);
        v.normalize();
        for (int i = 0; i < steps; ++i) {
            v = f.jacobian(orbit[static_cast<std::size_t>(i)]).matrix * v;
            v.normalize();
        }
        int imax = 0;
        for (int i = 1; i < v.size(); ++i)
            if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
        if (v[imax] < 0) v = -v;
        return v;
    };
}

// Exact weak-unstable field of a skew product: the fiber shear direction
// (0, e_u) is invariant because the derivative's upper-right block vanishes.
inline DirectionField skew_fiber_field(const PerturbedMap& f) {
    if (!f.skew()) throw Error("skew_fiber_field: map is not a skew product");
    Vec dir = Vec::Zero(f.dim());
    dir.tail(f.dim() - f.skew()->base_dim) = f.skew()->e_u;
    dir.normalize();
    return [dir](const Vec&) { return dir; };
}

inline DirectionField constant_field(Vec dir) {
    dir.normalize();
    return [dir](const Vec&) { return dir; };
}

struct LeafSegment {
    std::vector<Vec> points;    // continuous lift
    std::vector<Vec> tangents;  // unit
    std::vector<double> params; // arc parameter on the original segment

    double length() const {
        double s = 0;
        for (std::size_t i = 0; i + 1 < points.size(); ++i) s += (points[i + 1] - points[i]).norm();
        return s;
    }

    std::vector<double> arcs() const {
        std::vector<double> a(points.size(), 0.0);
        for (std::size_t i = 0; i + 1 < points.size(); ++i)
            a[i + 1] = a[i] + (points[i + 1] - points[i]).norm();
        return a;
    }

    // Hermite-interpolated point at a given cumulative arc value.
    Vec point_at_arc(double s) const {
        auto a = arcs();
        if (s <= 0) return points.front();
        if (s >= a.back()) return points.back();
        std::size_t i = static_cast<std::size_t>(
            std::upper_bound(a.begin(), a.end(), s) - a.begin()) - 1;
        double seg = a[i + 1] - a[i];
        double t = (s - a[i]) / seg;
        double t2 = t * t, t3 = t2 * t;
        Vec m0 = tangents[i] * seg, m1 = tangents[i + 1] * seg;
        return (2 * t3 - 3 * t2 + 1) * points[i] + (t3 - 2 * t2 + t) * m0 +
               (-2 * t3 + 3 * t2) * points[i + 1] + (t3 - t2) * m1;
    }
};

// Trace the leaf through x to d_W-radius delta on both sides.
template <typename MapLike>
LeafSegment trace_segment(const MapLike& f, const Vec& x, double delta,
                          const DirectionField& field, double step = 1e-3) {
    (void)f;
    if (delta <= 0) throw LeafTracingFailed("trace_segment: radius must be positive");
    auto aligned = [&field](const Vec& p, const Vec& ref) {
        Vec v = field(torus_wrap(p));
        if (v.dot(ref) < 0) v = -v;
        return v;
    };
    auto trace_arm = [&](double orientation) {
        std::vector<Vec> pts, tans;
        Vec p = x;
        Vec t0 = field(torus_wrap(x)) * orientation;
        double s = 0;
        while (s < delta) {
            double h = std::min(step, delta - s + 1e-15);
            Vec k1 = aligned(p, t0);
            Vec k2 = aligned(p + 0.5 * h * k1, k1);
            Vec k3 = aligned(p + 0.5 * h * k2, k1);
            Vec k4 = aligned(p + h * k3, k1);
            Vec dir = (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
            p += h * dir;
            t0 = aligned(p, k1);
            pts.push_back(p);
            tans.push_back(t0);
            s += h;
        }
        return std::make_pair(pts, tans);
    };

    auto [fw_p, fw_t] = trace_arm(+1.0);
    auto [bw_p, bw_t] = trace_arm(-1.0);

    LeafSegment seg;
    for (std::size_t i = bw_p.size(); i-- > 0;) {
        seg.points.push_back(bw_p[i]);
        seg.tangents.push_back(-bw_t[i]);  // orient backward arm forward
    }
    seg.points.push_back(x);
    seg.tangents.push_back(field(torus_wrap(x)));
    for (std::size_t i = 0; i < fw_p.size(); ++i) {
        seg.points.push_back(fw_p[i]);
        seg.tangents.push_back(fw_t[i]);
    }
    seg.params = seg.arcs();
    return seg;
}

namespace detail {

inline void hermite_insert(std::vector<Vec>& pts, std::vector<Vec>& tans,
                           std::vector<double>& pars, double h_max, std::size_t node_cap) {
    std::vector<Vec> np, nt;
    std::vector<double> npar;
    np.reserve(pts.size());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        np.push_back(pts[i]);
        nt.push_back(tans[i]);
        npar.push_back(pars[i]);
        double seg = (pts[i + 1] - pts[i]).norm();
        if (seg <= h_max) continue;
        int pieces = static_cast<int>(std::ceil(seg / h_max));
        Vec m0 = tans[i] * seg, m1 = tans[i + 1] * seg;
        for (int k = 1; k < pieces; ++k) {
            double t = static_cast<double>(k) / pieces;
            double t2 = t * t, t3 = t2 * t;
            Vec p = (2 * t3 - 3 * t2 + 1) * pts[i] + (t3 - 2 * t2 + t) * m0 +
                    (-2 * t3 + 3 * t2) * pts[i + 1] + (t3 - t2) * m1;
            Vec d = (6 * t2 - 6 * t) * pts[i] + (3 * t2 - 4 * t + 1) * m0 +
                    (-6 * t2 + 6 * t) * pts[i + 1] + (3 * t2 - 2 * t) * m1;
            np.push_back(p);
            nt.push_back(d.normalized());
            npar.push_back(pars[i] + t * (pars[i + 1] - pars[i]));
        }
        if (np.size() > node_cap)
            throw RefinementExplosion("leaf refinement exceeded node cap");
    }
    np.push_back(pts.back());
    nt.push_back(tans.back());
    npar.push_back(pars.back());
    pts = std::move(np);
    tans = std::move(nt);
    pars = std::move(npar);
}

} // namespace detail

// One application of f to the whole segment, re-refined to spacing h_max.
template <typename MapLike>
LeafSegment iterate_segment(const MapLike& f, const LeafSegment& seg, double h_max,
                            std::size_t node_cap = 10000000) {
    LeafSegment out;
    out.points.resize(seg.points.size());
    out.tangents.resize(seg.tangents.size());
    out.params = seg.params;
    for (std::size_t i = 0; i < seg.points.size(); ++i) {
        out.points[i] = f.lift_eval(seg.points[i]);
        Vec t = f.jacobian(torus_wrap(seg.points[i])).matrix * seg.tangents[i];
        out.tangents[i] = t.normalized();
    }
    // keep the lift anchored near the fundamental domain
    Vec shift = out.points.front() - torus_wrap(out.points.front());
    for (auto& p : out.points) p -= shift;
    detail::hermite_insert(out.points, out.tangents, out.params, h_max, node_cap);
    if (out.points.size() > node_cap)
        throw RefinementExplosion("iterate_segment: node cap exceeded");
    return out;
}

// Diagnostic: worst misalignment between stored tangents and a reference
// direction field, sampled at every stride-th node.
template <typename FieldLike>
double tangent_alignment_residual(const LeafSegment& seg, const FieldLike& field,
                                  std::size_t stride = 16) {
    double worst = 0;
    for (std::size_t i = 0; i < seg.points.size(); i += stride) {
        Vec v = field(torus_wrap(seg.points[i]));
        double misalign = 1.0 - std::abs(v.dot(seg.tangents[i]));
        worst = std::max(worst, misalign);
    }
    return worst;
}

} // namespace rigidlab
