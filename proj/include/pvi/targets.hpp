#pragma once

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "pvi/dataset.hpp"
#include "pvi/errors.hpp"
#include "pvi/matrix.hpp"
#include "pvi/nn.hpp"
#include "pvi/numerics.hpp"

namespace pvi {

/// A density known up to its normalizer: log-density and gradient, plus an
/// optional minibatched view for data-backed posteriors. Batch arguments are
/// row indices into the target's dataset; batch-free calls always see the
/// full data.
class TargetDensity {
public:
    virtual ~TargetDensity() = default;
    virtual std::size_t dim() const = 0;
    virtual double log_prob(const Vector& x) const = 0;
    virtual Vector grad_log_prob(const Vector& x) const = 0;

    virtual bool is_minibatched() const { return false; }
    virtual std::size_t data_count() const { return 0; }
    virtual double log_prob_batch(const Vector& x, const std::vector<std::size_t>&) const {
        return log_prob(x);
    }
    virtual Vector grad_log_prob_batch(const Vector& x, const std::vector<std::size_t>&) const {
        return grad_log_prob(x);
    }
};

class GaussianTarget : public TargetDensity {
public:
    GaussianTarget(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
        if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
            throw ShapeMismatch("GaussianTarget: mean/covariance sizes");
        cov_inv_ = solve_ridge(cov_, Matrix::identity(cov_.rows()), 0.0);
    }

    std::size_t dim() const override { return mean_.size(); }

    double log_prob(const Vector& x) const override {
        // up to the normalization constant
        double q = 0.0;
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j)
                q += (x[i] - mean_[i]) * cov_inv_(i, j) * (x[j] - mean_[j]);
        return -0.5 * q;
    }

    Vector grad_log_prob(const Vector& x) const override {
        Vector g(dim(), 0.0);
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j) g[i] -= cov_inv_(i, j) * (x[j] - mean_[j]);
        return g;
    }

    const Vector& mean() const { return mean_; }
    const Matrix& covariance() const { return cov_; }

private:
    Vector mean_;
    Matrix cov_;
    Matrix cov_inv_;
};

/// Hierarchical funnel: v ~ N(0, scale_v^2), x_i | v ~ N(0, e^v).
class FunnelTarget : public TargetDensity {
public:
    explicit FunnelTarget(double scale_v = 3.0, std::size_t x_dim = 1)
        : scale_v_(scale_v), x_dim_(x_dim) {
        if (!(scale_v > 0.0) || x_dim == 0) throw InvalidConfig("FunnelTarget parameters");
    }

    std::size_t dim() const override { return 1 + x_dim_; }

    double log_prob(const Vector& p) const override {
        const double v = p[0];
        double ssq = 0.0;
        for (std::size_t i = 1; i < p.size(); ++i) ssq += p[i] * p[i];
        return -v * v / (2.0 * scale_v_ * scale_v_) - 0.5 * static_cast<double>(x_dim_) * v -
               0.5 * std::exp(-v) * ssq;
    }

    Vector grad_log_prob(const Vector& p) const override {
        const double v = p[0];
        const double ev = std::exp(-v);
        double ssq = 0.0;
        for (std::size_t i = 1; i < p.size(); ++i) ssq += p[i] * p[i];
        Vector g(p.size());
        g[0] = -v / (scale_v_ * scale_v_) - 0.5 * static_cast<double>(x_dim_) + 0.5 * ev * ssq;
        for (std::size_t i = 1; i < p.size(); ++i) g[i] = -p[i] * ev;
        return g;
    }

    double scale_v() const { return scale_v_; }

private:
    double scale_v_;
    std::size_t x_dim_;
};

inline Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.set_row(i, m.row(idx[i]));
    return out;
}

/// Bayesian network posterior over flat weights: isotropic Gaussian prior
/// plus a Gaussian or categorical likelihood over a dataset. Minibatch
/// gradients rescale the likelihood term by N/|B| so they are unbiased for
/// the full-data gradient.
class BnnPosteriorTarget : public TargetDensity {
public:
    BnnPosteriorTarget(MlpArchitecture arch, Dataset data, Likelihood lik, double sigma_p,
                       std::size_t minibatch = 0)
        : arch_(std::move(arch)),
          data_(std::move(data)),
          lik_(lik),
          sigma_p_(sigma_p),
          minibatch_(minibatch) {
        arch_.validate();
        if (!(sigma_p > 0.0)) throw InvalidConfig("BnnPosteriorTarget: sigma_p must be positive");
        if (data_.x_train.cols() != arch_.input_dim())
            throw ShapeMismatch("BnnPosteriorTarget: dataset input width vs architecture");
    }

    std::size_t dim() const override { return arch_.param_count(); }
    std::size_t data_count() const override { return data_.x_train.rows(); }
    bool is_minibatched() const override { return minibatch_ > 0 && minibatch_ < data_count(); }
    std::size_t minibatch_size() const { return minibatch_; }

    double log_prob(const Vector& w) const override { return log_prob_batch(w, {}); }
    Vector grad_log_prob(const Vector& w) const override { return grad_log_prob_batch(w, {}); }

    double log_prob_batch(const Vector& w, const std::vector<std::size_t>& batch) const override {
        check_params(w);
        Matrix xg, yg;
        const bool full = batch.empty();
        if (!full) {
            xg = gather_rows(data_.x_train, batch);
            yg = gather_rows(data_.y_train, batch);
        }
        const Matrix& x = full ? data_.x_train : xg;
        const Matrix& y = full ? data_.y_train : yg;
        const double scale = full ? 1.0 : batch_scale(batch.size());
        const double ll = likelihood_log_prob(lik_, forward(arch_, w, x), y);
        double prior = 0.0;
        for (double v : w) prior += v * v;
        return scale * ll - prior / (2.0 * sigma_p_ * sigma_p_);
    }

    Vector grad_log_prob_batch(const Vector& w, const std::vector<std::size_t>& batch) const override {
        check_params(w);
        Matrix xg, yg;
        const bool full = batch.empty();
        if (!full) {
            xg = gather_rows(data_.x_train, batch);
            yg = gather_rows(data_.y_train, batch);
        }
        const Matrix& x = full ? data_.x_train : xg;
        const Matrix& y = full ? data_.y_train : yg;
        const double scale = full ? 1.0 : batch_scale(batch.size());
        Vector g = backprop_loss_grad(arch_, w, x, y, lik_);
        const double inv_p = 1.0 / (sigma_p_ * sigma_p_);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * g[i] - w[i] * inv_p;
        return g;
    }

    /// Gradient of the (rescaled) log-likelihood with respect to each row of
    /// projected function values F (one row per particle, over `batch`).
    Matrix functional_likelihood_grad(const Matrix& f, const std::vector<std::size_t>& batch) const {
        const bool full = batch.empty();
        Matrix yg;
        if (!full) yg = gather_rows(data_.y_train, batch);
        const Matrix& y = full ? data_.y_train : yg;
        const std::size_t b = full ? data_count() : batch.size();
        const double scale = full ? 1.0 : batch_scale(b);
        const std::size_t o = arch_.output_dim();
        if (f.cols() != b * o) throw ShapeMismatch("functional_likelihood_grad: row length");
        Matrix out(f.rows(), f.cols());
        for (std::size_t i = 0; i < f.rows(); ++i) {
            Matrix fi(b, o);
            for (std::size_t k = 0; k < b * o; ++k) fi.storage()[k] = f(i, k);
            Matrix g = likelihood_grad_outputs(lik_, fi, y);
            for (std::size_t k = 0; k < b * o; ++k) out(i, k) = scale * g.storage()[k];
        }
        return out;
    }

    const MlpArchitecture& architecture() const { return arch_; }
    const Likelihood& likelihood() const { return lik_; }
    double prior_sigma() const { return sigma_p_; }
    const Dataset& data() const { return data_; }

    Matrix batch_inputs(const std::vector<std::size_t>& batch) const {
        return batch.empty() ? data_.x_train : gather_rows(data_.x_train, batch);
    }

private:
    void check_params(const Vector& w) const {
        if (w.size() != arch_.param_count())
            throw ShapeMismatch("BnnPosteriorTarget: parameter vector length");
    }
    double batch_scale(std::size_t b) const {
        return static_cast<double>(data_count()) / static_cast<double>(b);
    }

    MlpArchitecture arch_;
    Dataset data_;
    Likelihood lik_;
    double sigma_p_;
    std::size_t minibatch_;
};

}  // namespace pvi
