// Smith normal form over Z:  U * M * V = S  with U, V unimodular and S
// diagonal, each diagonal entry dividing the next.  Used to enumerate the
// solutions of M x ∈ Z^d exactly.

#pragma once

#include <cstdlib>

#include "rigidlab/int_matrix.hpp"

namespace rigidlab {

struct SmithForm {
    IntMatrix s;  // diagonal
    IntMatrix u;  // row operations
    IntMatrix v;  // column operations
};

inline SmithForm smith_normal_form(const IntMatrix& m0) {
    const int d = m0.dim();
    IntMatrix m = m0;
    IntMatrix u = IntMatrix::identity(d);
    IntMatrix v = IntMatrix::identity(d);

    auto swap_rows = [&](int a, int b) {
        for (int j = 0; j < d; ++j) { std::swap(m(a, j), m(b, j)); std::swap(u(a, j), u(b, j)); }
    };
    auto swap_cols = [&](int a, int b) {
        for (int i = 0; i < d; ++i) { std::swap(m(i, a), m(i, b)); std::swap(v(i, a), v(i, b)); }
    };
    auto add_row = [&](int dst, int src, const BigInt& q) {  // row dst += q * row src
        for (int j = 0; j < d; ++j) { m(dst, j) += q * m(src, j); u(dst, j) += q * u(src, j); }
    };
    auto add_col = [&](int dst, int src, const BigInt& q) {
        for (int i = 0; i < d; ++i) { m(i, dst) += q * m(i, src); v(i, dst) += q * v(i, src); }
    };
    auto negate_row = [&](int r) {
        for (int j = 0; j < d; ++j) { m(r, j) = -m(r, j); u(r, j) = -u(r, j); }
    };

    for (int t = 0; t < d; ++t) {
        // Find a nonzero pivot of minimal absolute value in the trailing block.
        while (true) {
            int pi = -1, pj = -1;
            BigInt best = 0;
            for (int i = t; i < d; ++i)
                for (int j = t; j < d; ++j)
                    if (m(i, j) != 0) {
                        BigInt a = abs(m(i, j));
                        if (pi < 0 || a < best) { best = a; pi = i; pj = j; }
                    }
            if (pi < 0) break;  // trailing block is zero
            if (pi != t) swap_rows(t, pi);
            if (pj != t) swap_cols(t, pj);
            if (m(t, t) < 0) negate_row(t);

            bool reduced = true;
            for (int i = t + 1; i < d; ++i)
                if (m(i, t) != 0) {
                    BigInt q = m(i, t) / m(t, t);
                    add_row(i, t, -q);
                    if (m(i, t) != 0) reduced = false;
                }
            for (int j = t + 1; j < d; ++j)
                if (m(t, j) != 0) {
                    BigInt q = m(t, j) / m(t, t);
                    add_col(j, t, -q);
                    if (m(t, j) != 0) reduced = false;
                }
            if (!reduced) continue;

            // Enforce the divisibility chain: fold any non-multiple into column t.
            bool divides_all = true;
            for (int i = t + 1; i < d && divides_all; ++i)
                for (int j = t + 1; j < d && divides_all; ++j)
                    if (m(i, j) % m(t, t) != 0) {
                        add_col(t, j, 1);
                        divides_all = false;
                    }
            if (divides_all) break;
        }
    }
    return {m, u, v};
}

} // namespace rigidlab
