#pragma once

#include <cmath>
#include <cstddef>

#include "pvi/errors.hpp"
#include "pvi/kernels.hpp"
#include "pvi/matrix.hpp"
#include "pvi/numerics.hpp"

namespace pvi {

enum class ScoreEstimatorKind { kde, sge, ssge };

/// Per-particle estimate of the score of the empirical particle measure,
/// i.e. grad log rho evaluated at each particle.
struct ScoreEstimate {
    Matrix scores;  // one row per particle
    ScoreEstimatorKind kind = ScoreEstimatorKind::kde;
    double bandwidth = 0.0;
    double eta = 0.0;            // sge only
    std::size_t eigencount = 0;  // ssge only: eigenpairs actually used
};

/// How many Gram eigenpairs the spectral estimator keeps: an explicit count
/// when positive, otherwise the smallest J covering `energy` of the
/// eigenvalue mass.
struct SsgeTruncation {
    std::size_t count = 0;
    double energy = 0.99;
};

/// Score of the kernel mixture centered at `centers`, evaluated at arbitrary
/// query rows: sum_j grad_q k(q, c_j) / sum_j k(q, c_j).
inline Matrix kde_score_at(const Matrix& queries, const Matrix& centers, double h) {
    Matrix scores(queries.rows(), queries.cols());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const auto q = queries.row(i);
        double ksum = 0.0;
        auto out = scores.row(i);
        for (std::size_t j = 0; j < centers.rows(); ++j) {
            const auto c = centers.row(j);
            const double k = rbf_eval(h, q, c);
            ksum += k;
            const double w = -2.0 / h * k;
            for (std::size_t d = 0; d < q.size(); ++d) out[d] += w * (q[d] - c[d]);
        }
        for (std::size_t d = 0; d < q.size(); ++d) out[d] /= ksum;
    }
    return scores;
}

inline ScoreEstimate kde_score(const Matrix& x, const RbfKernel& kernel) {
    const double h = resolve_bandwidth(kernel, x);
    return {kde_score_at(x, x, h), ScoreEstimatorKind::kde, h, 0.0, 0};
}

namespace detail {

// Column-summed kernel gradients: row j holds sum_m grad_{x_m} k(x_m, x_j).
inline Matrix kernel_grad_col_sums(const Matrix& x, const Matrix& k, double h) {
    const std::size_t n = x.rows(), d = x.cols();
    Matrix g(n, d);
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = -2.0 / h * k(m, j);
            auto out = g.row(j);
            const auto xm = x.row(m), xj = x.row(j);
            for (std::size_t c = 0; c < d; ++c) out[c] += w * (xm[c] - xj[c]);
        }
    }
    return g;
}

}  // namespace detail

/// Stein estimate: scores = -(K + eta I)^{-1} G with G the column-summed
/// kernel gradients.
inline ScoreEstimate sge_score(const Matrix& x, const RbfKernel& kernel, double eta) {
    if (x.rows() < 2) throw InvalidConfig("sge_score: needs at least two particles");
    if (!(eta > 0.0)) throw InvalidConfig("sge_score: eta must be positive");
    const double h = resolve_bandwidth(kernel, x);
    const Matrix k = gram_fixed(h, x);
    const Matrix g = detail::kernel_grad_col_sums(x, k, h);
    Matrix scores = solve_ridge(k, g, eta);
    for (double& v : scores.storage()) v = -v;
    return {std::move(scores), ScoreEstimatorKind::sge, h, eta, 0};
}

/// Spectral estimate built from Gram eigenpairs (lambda_j, u_j):
///   score(x_i) = -sum_j (1/lambda_j^2) [sum_k u_jk G_k] [sum_l u_jl k(x_i, x_l)]
/// truncated at J eigenpairs; eigenvalues below 1e-10 are never used.
inline ScoreEstimate ssge_score(const Matrix& x, const RbfKernel& kernel,
                                const SsgeTruncation& trunc = {}) {
    const std::size_t n = x.rows();
    if (n < 2) throw InvalidConfig("ssge_score: needs at least two particles");
    if (trunc.count > n) throw InvalidConfig("ssge_score: eigencount exceeds particle count");
    const double h = resolve_bandwidth(kernel, x);
    const Matrix k = gram_fixed(h, x);
    const EigResult eig = sym_eig(k);

    std::size_t j_limit = trunc.count;
    if (j_limit == 0) {
        double mass = 0.0;
        for (double v : eig.values) mass += std::max(v, 0.0);
        double acc = 0.0;
        j_limit = n;
        for (std::size_t j = 0; j < n; ++j) {
            acc += std::max(eig.values[j], 0.0);
            if (acc >= trunc.energy * mass) {
                j_limit = j + 1;
                break;
            }
        }
    }

    const Matrix g = detail::kernel_grad_col_sums(x, k, h);
    Matrix scores(n, x.cols());
    std::size_t used = 0;
    for (std::size_t j = 0; j < j_limit; ++j) {
        const double lam = eig.values[j];
        if (lam < 1e-10) continue;
        ++used;
        Vector b(x.cols(), 0.0);
        for (std::size_t kk = 0; kk < n; ++kk) {
            const double u = eig.vectors(kk, j);
            const auto gr = g.row(kk);
            for (std::size_t c = 0; c < x.cols(); ++c) b[c] += u * gr[c];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double nu = 0.0;
            for (std::size_t l = 0; l < n; ++l) nu += eig.vectors(l, j) * k(i, l);
            const double w = -nu / (lam * lam);
            auto out = scores.row(i);
            for (std::size_t c = 0; c < x.cols(); ++c) out[c] += w * b[c];
        }
    }
    if (used == 0) throw RankDeficient("ssge_score: no eigenvalue above 1e-10 retained");
    return {std::move(scores), ScoreEstimatorKind::ssge, h, 0.0, used};
}

inline ScoreEstimate estimate_score(const Matrix& x, const RbfKernel& kernel,
                                    ScoreEstimatorKind kind, double eta,
                                    const SsgeTruncation& trunc) {
    switch (kind) {
        case ScoreEstimatorKind::kde:
            return kde_score(x, kernel);
        case ScoreEstimatorKind::sge:
            return sge_score(x, kernel, eta);
        case ScoreEstimatorKind::ssge:
            return ssge_score(x, kernel, trunc);
    }
    throw InvalidConfig("unknown score estimator kind");
}

}  // namespace pvi
