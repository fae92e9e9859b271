#pragma once

// Minimal dense matrix support for the latent meta-feature covariance:
// quadratic forms and a cyclic Jacobi eigendecomposition for symmetric
// matrices (the covariances here are small, p in the single digits).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rankstab/errors.hpp"

namespace rankstab {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool symmetric(double tol = 1e-12) const {
        if (rows != cols) return false;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = i + 1; j < cols; ++j) {
                const double scale = std::max({1.0, std::fabs((*this)(i, j)), std::fabs((*this)(j, i))});
                if (std::fabs((*this)(i, j) - (*this)(j, i)) > tol * scale) return false;
            }
        return true;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < std::min(rows, cols); ++i) t += (*this)(i, i);
        return t;
    }
};

// v^T M v for square M.
inline double quadratic_form(const Matrix& m, const std::vector<double>& v) {
    if (m.rows != m.cols || m.rows != v.size())
        throw validation_error("quadratic_form: dimension mismatch");
    double q = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) row += m(i, j) * v[j];
        q += v[i] * row;
    }
    return q;
}

struct SymEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column i pairs with values[i]
};

// Cyclic Jacobi rotations; fine for the small symmetric matrices used here.
inline SymEigen sym_eigen(const Matrix& m) {
    if (m.rows != m.cols) throw validation_error("sym_eigen: matrix not square");
    if (!m.symmetric(1e-9)) throw validation_error("sym_eigen: matrix not symmetric");
    const std::size_t n = m.rows;
    Matrix a = m;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-30 * std::max(1.0, a.trace() * a.trace())) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymEigen out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
    out.vectors = Matrix(n, n);
    // sort ascending, carrying columns
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return out.values[x] < out.values[y]; });
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = out.values[order[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.vectors(i, j) = v(i, order[j]);
    out.values = std::move(sorted);
    return out;
}

// Symmetric factor L with L L^T = m, for PSD m up to round-off: negative
// eigenvalues below -1e-10 * max(trace, 1) are rejected, smaller ones
// clamped to zero.
inline Matrix psd_factor(const Matrix& m) {
    const SymEigen eig = sym_eigen(m);
    const double tol = 1e-10 * std::max(m.trace(), 1.0);
    const std::size_t n = m.rows;
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double lam = eig.values[j];
        if (lam < -tol)
            throw numeric_error("psd_factor: covariance has a significantly negative eigenvalue");
        if (lam < 0.0) lam = 0.0;
        const double root = std::sqrt(lam);
        for (std::size_t i = 0; i < n; ++i) l(i, j) = eig.vectors(i, j) * root;
    }
    return l;
}

} // namespace rankstab
