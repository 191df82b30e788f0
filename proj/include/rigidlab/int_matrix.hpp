// Exact integer matrices for lattice automorphisms.  Entries are
// arbitrary-precision integers so that powers, characteristic polynomials
// and Smith reductions stay exact regardless of how fast the entries grow.

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <Eigen/Dense>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rigidlab/errors.hpp"
#include "rigidlab/torus.hpp"

namespace rigidlab {

using BigInt = boost::multiprecision::cpp_int;

class IntMatrix {
public:
    IntMatrix() : dim_(0) {}
    explicit IntMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim, 0) {}

    static IntMatrix identity(int dim) {
        IntMatrix m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1;
        return m;
    }

    // Row-major initializer, e.g. IntMatrix::from({{2,1},{1,1}}).
    static IntMatrix from(const std::vector<std::vector<long long>>& rows) {
        IntMatrix m(static_cast<int>(rows.size()));
        for (int i = 0; i < m.dim(); ++i) {
            if (static_cast<int>(rows[i].size()) != m.dim())
                throw Error("IntMatrix::from: ragged rows");
            for (int j = 0; j < m.dim(); ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    int dim() const { return dim_; }
    BigInt& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * dim_ + j]; }
    const BigInt& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * dim_ + j]; }

    bool operator==(const IntMatrix& o) const { return dim_ == o.dim_ && a_ == o.a_; }

    IntMatrix operator*(const IntMatrix& o) const {
        IntMatrix r(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int k = 0; k < dim_; ++k) {
                const BigInt& aik = (*this)(i, k);
                if (aik == 0) continue;
                for (int j = 0; j < dim_; ++j) r(i, j) += aik * o(k, j);
            }
        return r;
    }

    IntMatrix operator-(const IntMatrix& o) const {
        IntMatrix r(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) r(i, j) = (*this)(i, j) - o(i, j);
        return r;
    }

    IntMatrix pow(int e) const {
        IntMatrix r = identity(dim_), b = *this;
        while (e > 0) {
            if (e & 1) r = r * b;
            b = b * b;
            e >>= 1;
        }
        return r;
    }

    // Exact determinant, Bareiss fraction-free elimination.
    BigInt det() const {
        if (dim_ == 0) return 1;
        std::vector<BigInt> m = a_;
        auto at = [&](int i, int j) -> BigInt& { return m[static_cast<std::size_t>(i) * dim_ + j]; };
        BigInt prev = 1;
        int sign = 1;
        for (int k = 0; k < dim_ - 1; ++k) {
            if (at(k, k) == 0) {
                int p = -1;
                for (int i = k + 1; i < dim_; ++i)
                    if (at(i, k) != 0) { p = i; break; }
                if (p < 0) return 0;
                for (int j = 0; j < dim_; ++j) std::swap(at(k, j), at(p, j));
                sign = -sign;
            }
            for (int i = k + 1; i < dim_; ++i)
                for (int j = k + 1; j < dim_; ++j)
                    at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
            prev = at(k, k);
        }
        return sign * at(dim_ - 1, dim_ - 1);
    }

    bool is_unimodular() const {
        BigInt d = det();
        return d == 1 || d == -1;
    }

    // Exact integer inverse; only valid when |det| = 1.
    IntMatrix unimodular_inverse() const {
        BigInt d = det();
        if (d != 1 && d != -1) throw NotUnimodular("unimodular_inverse: |det| != 1");
        IntMatrix adj(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) {
                IntMatrix minor(dim_ - 1);
                for (int r = 0, rr = 0; r < dim_; ++r) {
                    if (r == j) continue;
                    for (int c = 0, cc = 0; c < dim_; ++c) {
                        if (c == i) continue;
                        minor(rr, cc) = (*this)(r, c);
                        ++cc;
                    }
                    ++rr;
                }
                BigInt cof = minor.dim() == 0 ? BigInt(1) : minor.det();
                if ((i + j) % 2 != 0) cof = -cof;
                adj(i, j) = cof;
            }
        if (d == -1)
            for (auto& v : adj.a_) v = -v;
        return adj;
    }

    Mat to_double() const {
        Mat m(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) m(i, j) = static_cast<double>((*this)(i, j));
        return m;
    }

    // Plain-text format: first line "d", then d rows of d integers.
    static IntMatrix read(std::istream& in) {
        int d = 0;
        if (!(in >> d) || d < 1) throw Error("IntMatrix::read: bad dimension line");
        IntMatrix m(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                std::string tok;
                if (!(in >> tok)) throw Error("IntMatrix::read: truncated matrix");
                m(i, j) = BigInt(tok);
            }
        return m;
    }

    static IntMatrix parse(const std::string& text) {
        std::istringstream ss(text);
        return read(ss);
    }

    void write(std::ostream& out) const {
        out << dim_ << "\n";
        for (int i = 0; i < dim_; ++i) {
            for (int j = 0; j < dim_; ++j) out << (*this)(i, j) << (j + 1 < dim_ ? " " : "");
            out << "\n";
        }
    }

private:
    int dim_;
    std::vector<BigInt> a_;
};

// Block-diagonal assembly, used by the skew-product family.
inline IntMatrix block_diag(const IntMatrix& a, const IntMatrix& b) {
    IntMatrix m(a.dim() + b.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) m(i, j) = a(i, j);
    for (int i = 0; i < b.dim(); ++i)
        for (int j = 0; j < b.dim(); ++j) m(a.dim() + i, a.dim() + j) = b(i, j);
    return m;
}

} // namespace rigidlab
