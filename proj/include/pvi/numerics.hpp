#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "pvi/errors.hpp"
#include "pvi/matrix.hpp"

namespace pvi {

inline constexpr std::size_t kSymEigSizeCap = 512;

namespace detail {

// Lower-triangular Cholesky of A + ridge*I, in place. Returns false on a
// non-positive pivot instead of throwing so callers can retry.
inline bool cholesky(Matrix& a, double ridge) {
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) a(i, i) += ridge;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double l = std::sqrt(d);
        a(j, j) = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / l;
        }
    }
    return true;
}

inline Matrix cholesky_solve(const Matrix& l, const Matrix& b) {
    const std::size_t n = l.rows();
    Matrix x = b;
    // forward: L y = b
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
        // backward: L^T x = y
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
            x(ii, c) = s / l(ii, ii);
        }
    }
    return x;
}

}  // namespace detail

/// Solve (A + eta*I) X = B for symmetric positive definite A + eta*I.
/// If the factorization fails the ridge is grown tenfold up to three times
/// before giving up.
inline Matrix solve_ridge(const Matrix& a, const Matrix& b, double eta) {
    if (a.rows() != a.cols()) throw ShapeMismatch("solve_ridge: A must be square");
    if (a.rows() != b.rows()) throw ShapeMismatch("solve_ridge: A and B row counts differ");
    if (eta < 0.0) throw InvalidConfig("solve_ridge: eta must be nonnegative");
    if (!a.all_finite() || !b.all_finite()) throw NonFiniteValue("solve_ridge input");

    double trace = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) trace += a(i, i);
    const double ridge_seed = 1e-12 * (std::abs(trace) / std::max<std::size_t>(a.rows(), 1) + 1.0);

    double ridge = eta;
    for (int attempt = 0; attempt <= 3; ++attempt) {
        Matrix l = a;
        if (detail::cholesky(l, ridge)) return detail::cholesky_solve(l, b);
        ridge = (ridge > 0.0 ? ridge : ridge_seed) * 10.0;
    }
    throw NotPositiveDefinite("solve_ridge: factorization failed after ridge retries");
}

struct EigResult {
    Vector values;   // descending
    Matrix vectors;  // orthonormal, column j pairs with values[j]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Intended for the
/// small dense matrices this library produces (n capped, default 512).
inline EigResult sym_eig(const Matrix& a_in, std::size_t size_cap = kSymEigSizeCap) {
    const std::size_t n = a_in.rows();
    if (n != a_in.cols()) throw ShapeMismatch("sym_eig: matrix must be square");
    if (n > size_cap) throw InvalidConfig("sym_eig: size exceeds cap");
    if (!a_in.all_finite()) throw NonFiniteValue("sym_eig input");

    Matrix a = a_in;
    Matrix v = Matrix::identity(n);
    const double scale = std::max(frobenius_norm(a), 1.0);
    const int max_sweeps = 64;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-15 * scale) {
            EigResult r;
            r.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) r.values[i] = a(i, i);
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t x, std::size_t y) { return r.values[x] > r.values[y]; });
            Vector sorted(n);
            Matrix vec(n, n);
            for (std::size_t j = 0; j < n; ++j) {
                sorted[j] = r.values[order[j]];
                for (std::size_t i = 0; i < n; ++i) vec(i, j) = v(i, order[j]);
            }
            r.values = std::move(sorted);
            r.vectors = std::move(vec);
            return r;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
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
    throw NoConvergence("sym_eig: Jacobi sweep cap exceeded");
}

/// Central finite differences of f around x.
inline Vector finite_diff_grad(const std::function<double(const Vector&)>& f, Vector x,
                               double h = 1e-5) {
    if (!(h > 0.0)) throw InvalidConfig("finite_diff_grad: h must be positive");
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = f(x);
        x[i] = xi - h;
        const double fm = f(x);
        x[i] = xi;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NonFiniteValue("finite_diff_grad: f returned non-finite");
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace pvi
