// Points on T^d = R^d / Z^d, stored as coordinates in [0,1).  Distances use
// the quotient metric: minimum over integer shifts, which for the euclidean
// norm reduces to per-coordinate nearest-image differences.

#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace rigidlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Fractional part in [0,1), mapping tiny negative fuzz back to 0.
inline double wrap01(double x) {
    double y = x - std::floor(x);
    if (y >= 1.0) y -= 1.0;   // x == -1e-17 style cases
    return y;
}

inline Vec torus_wrap(const Vec& x) {
    Vec y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = wrap01(x[i]);
    return y;
}

// Shortest representative of a - b in R^d (each coordinate in [-1/2, 1/2]).
inline Vec torus_diff(const Vec& a, const Vec& b) {
    Vec d = a - b;
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] -= std::round(d[i]);
    return d;
}

inline double torus_dist(const Vec& a, const Vec& b) {
    return torus_diff(a, b).norm();
}

inline double torus_dist_inf(const Vec& a, const Vec& b) {
    return torus_diff(a, b).lpNorm<Eigen::Infinity>();
}

} // namespace rigidlab
