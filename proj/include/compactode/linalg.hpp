#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "compactode/error.hpp"

namespace compactode {

class SingularMatrix : public Error {
public:
    explicit SingularMatrix(const std::string& what) : Error(what) {}
};

/// Small dense row-major matrix. Sized for Jacobians of low-dimensional
/// vector fields, not for large-scale linear algebra.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    [[nodiscard]] std::vector<double> operator*(const std::vector<double>& x) const {
        std::vector<double> y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

/// Solve A x = b by LU with partial pivoting. Throws SingularMatrix when a
/// pivot falls below 1e-13 times the matrix scale.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    const double tol = 1e-13 * std::max(1.0, a.max_abs());
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= tol) throw SingularMatrix("singular linear system");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = a(i, k) / a(k, k);
            a(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * b[j];
        b[i] = s / a(i, i);
    }
    return b;
}

namespace detail {

using cplx = std::complex<double>;
using CMat = std::vector<cplx>; // row-major n*n

inline cplx& at(CMat& h, std::size_t n, std::size_t i, std::size_t j) { return h[i * n + j]; }

/// Reduce a real matrix to upper Hessenberg form by Householder similarity.
inline Matrix hessenberg(Matrix a) {
    const std::size_t n = a.rows();
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        double alpha = a(k + 1, k) >= 0 ? -norm : norm;
        std::vector<double> v(n, 0.0);
        v[k + 1] = a(k + 1, k) - alpha;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
        double vv = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vv += v[i] * v[i];
        if (vv == 0.0) continue;
        // A <- (I - 2 v v^T / v'v) A (I - 2 v v^T / v'v)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s = 2.0 * s / vv;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s = 2.0 * s / vv;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
    }
    return a;
}

} // namespace detail

/// Eigenvalues of a real dense matrix: Hessenberg reduction followed by a
/// shifted QR iteration (Wilkinson shifts, Givens rotations) carried out in
/// complex arithmetic so conjugate pairs emerge without 2x2 block handling.
inline std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
    using detail::cplx;
    const std::size_t n = m.rows();
    std::vector<cplx> out;
    if (n == 0) return out;
    if (n == 1) return {cplx(m(0, 0), 0.0)};

    Matrix hr = detail::hessenberg(m);
    detail::CMat h(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) h[i * n + j] = cplx(hr(i, j), 0.0);
    auto H = [&](std::size_t i, std::size_t j) -> cplx& { return h[i * n + j]; };

    const double eps = 1e-15;
    double scale = std::max(1.0, hr.max_abs());
    std::size_t hi = n - 1;
    int stagnation = 0;
    int total_iters = 0;
    const int max_total = 200 * static_cast<int>(n);

    while (true) {
        // deflate negligible subdiagonal entries
        for (std::size_t i = 1; i <= hi; ++i) {
            double bound = eps * (std::abs(H(i - 1, i - 1)) + std::abs(H(i, i)));
            if (bound == 0.0) bound = eps * scale;
            if (std::abs(H(i, i - 1)) <= bound) H(i, i - 1) = 0.0;
        }
        // peel converged trailing eigenvalues
        while (hi > 0 && H(hi, hi - 1) == cplx(0.0)) {
            out.push_back(H(hi, hi));
            --hi;
            stagnation = 0;
        }
        if (hi == 0) {
            out.push_back(H(0, 0));
            break;
        }
        // active block [lo..hi] ends at the nearest zero subdiagonal
        std::size_t lo = hi;
        while (lo > 0 && H(lo, lo - 1) != cplx(0.0)) --lo;

        if (++total_iters > max_total)
            throw Error("eigenvalue iteration failed to converge");

        // Wilkinson shift: eigenvalue of the trailing 2x2 nearest H(hi,hi)
        cplx x = H(hi - 1, hi - 1), y = H(hi - 1, hi);
        cplx z = H(hi, hi - 1), w = H(hi, hi);
        cplx tr2 = (x + w) * 0.5;
        cplx disc = std::sqrt(tr2 * tr2 - (x * w - y * z));
        cplx mu1 = tr2 + disc, mu2 = tr2 - disc;
        cplx mu = std::abs(mu1 - w) < std::abs(mu2 - w) ? mu1 : mu2;
        if (++stagnation % 16 == 0) mu = w + std::abs(H(hi, hi - 1)); // exceptional shift

        // one explicit QR step on the active block: H - mu I = QR, H := RQ + mu I
        for (std::size_t i = lo; i <= hi; ++i) H(i, i) -= mu;
        std::vector<double> cs(hi - lo, 0.0);
        std::vector<cplx> sn(hi - lo, 0.0);
        for (std::size_t k = lo; k < hi; ++k) {
            cplx a = H(k, k), b = H(k + 1, k);
            double r = std::hypot(std::abs(a), std::abs(b));
            double c;
            cplx s;
            if (r == 0.0) {
                c = 1.0;
                s = 0.0;
            } else if (std::abs(a) == 0.0) {
                c = 0.0;
                s = 1.0;
                // rotation maps (0, b) -> (b, 0)
            } else {
                c = std::abs(a) / r;
                s = (a / std::abs(a)) * std::conj(b) / r;
            }
            cs[k - lo] = c;
            sn[k - lo] = s;
            for (std::size_t j = k; j <= hi; ++j) {
                cplx t1 = H(k, j), t2 = H(k + 1, j);
                H(k, j) = c * t1 + s * t2;
                H(k + 1, j) = -std::conj(s) * t1 + c * t2;
            }
        }
        for (std::size_t k = lo; k < hi; ++k) {
            double c = cs[k - lo];
            cplx s = sn[k - lo];
            std::size_t top = lo;
            for (std::size_t i = top; i <= std::min(k + 2, hi); ++i) {
                cplx t1 = H(i, k), t2 = H(i, k + 1);
                H(i, k) = c * t1 + std::conj(s) * t2;
                H(i, k + 1) = -s * t1 + c * t2;
            }
        }
        for (std::size_t i = lo; i <= hi; ++i) H(i, i) += mu;
    }

    // strip rounding-level imaginary parts so real spectra come out real
    for (auto& ev : out) {
        if (std::abs(ev.imag()) <= 1e-10 * std::max(1.0, std::abs(ev)))
            ev = cplx(ev.real(), 0.0);
    }
    std::sort(out.begin(), out.end(), [](const cplx& a, const cplx& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return out;
}

} // namespace compactode
