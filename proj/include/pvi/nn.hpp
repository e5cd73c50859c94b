#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/estimators.hpp"
#include "pvi/kernels.hpp"
#include "pvi/matrix.hpp"
#include "pvi/rng.hpp"

namespace pvi {

enum class Activation { tanh_fn, relu };
enum class OutputHead { identity, logits };
enum class LikelihoodKind { gaussian, categorical };

struct Likelihood {
    LikelihoodKind kind = LikelihoodKind::gaussian;
    double sigma_n = 0.1;  // observation noise, gaussian only
};

/// Fully connected network described by its layer widths (input, hidden...,
/// output). Parameters are a flat vector laid out per layer as the weight
/// matrix (row-major, out x in) followed by the bias. A widths list with no
/// hidden entries yields a plain linear map, which the closed-form
/// regression targets rely on.
struct MlpArchitecture {
    std::vector<std::size_t> widths;
    Activation activation = Activation::tanh_fn;
    OutputHead head = OutputHead::identity;
    bool with_bias = true;

    std::size_t layers() const { return widths.size() - 1; }
    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }

    std::size_t param_count() const {
        std::size_t d = 0;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l)
            d += widths[l] * widths[l + 1] + (with_bias ? widths[l + 1] : 0);
        return d;
    }

    void validate() const {
        if (widths.size() < 2) throw InvalidConfig("architecture needs input and output widths");
        for (std::size_t w : widths)
            if (w == 0) throw InvalidConfig("architecture widths must be positive");
    }
};

namespace detail {

inline double activate(Activation a, double z) {
    return a == Activation::tanh_fn ? std::tanh(z) : std::max(z, 0.0);
}

// derivative expressed through the activation value where possible
inline double activate_grad(Activation a, double value, double pre) {
    return a == Activation::tanh_fn ? 1.0 - value * value : (pre > 0.0 ? 1.0 : 0.0);
}

struct ForwardCache {
    std::vector<Matrix> activations;  // [0] = input, last = output
    std::vector<Matrix> preacts;      // per layer
};

inline ForwardCache forward_impl(const MlpArchitecture& arch, std::span<const double> w,
                                 const Matrix& x) {
    if (w.size() != arch.param_count()) throw ShapeMismatch("parameter vector length");
    if (x.cols() != arch.input_dim()) throw ShapeMismatch("input width");
    ForwardCache cache;
    cache.activations.push_back(x);
    std::size_t off = 0;
    const std::size_t batch = x.rows();
    for (std::size_t l = 0; l + 1 < arch.widths.size(); ++l) {
        const std::size_t in = arch.widths[l], out = arch.widths[l + 1];
        const double* wm = w.data() + off;
        const double* bias = arch.with_bias ? w.data() + off + out * in : nullptr;
        off += out * in + (arch.with_bias ? out : 0);
        const Matrix& prev = cache.activations.back();
        Matrix z(batch, out);
        for (std::size_t b = 0; b < batch; ++b) {
            const auto row = prev.row(b);
            for (std::size_t o = 0; o < out; ++o) {
                double s = bias ? bias[o] : 0.0;
                const double* wrow = wm + o * in;
                for (std::size_t i = 0; i < in; ++i) s += wrow[i] * row[i];
                z(b, o) = s;
            }
        }
        const bool last = (l + 2 == arch.widths.size());
        Matrix act = z;
        if (!last)
            for (double& v : act.storage()) v = activate(arch.activation, v);
        cache.preacts.push_back(std::move(z));
        cache.activations.push_back(std::move(act));
    }
    return cache;
}

// Vector-Jacobian product: gradient of <cotangent, f(x; w)> with respect to w.
inline Vector backward_impl(const MlpArchitecture& arch, std::span<const double> w,
                            const ForwardCache& cache, Matrix delta) {
    Vector grad(arch.param_count(), 0.0);
    std::vector<std::size_t> offsets(arch.layers());
    std::size_t off = 0;
    for (std::size_t l = 0; l < arch.layers(); ++l) {
        offsets[l] = off;
        off += arch.widths[l] * arch.widths[l + 1] + (arch.with_bias ? arch.widths[l + 1] : 0);
    }
    const std::size_t batch = delta.rows();
    for (std::size_t l = arch.layers(); l-- > 0;) {
        const std::size_t in = arch.widths[l], out = arch.widths[l + 1];
        const bool last = (l + 1 == arch.layers());
        if (!last) {
            const Matrix& act = cache.activations[l + 1];
            const Matrix& pre = cache.preacts[l];
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out; ++o)
                    delta(b, o) *= activate_grad(arch.activation, act(b, o), pre(b, o));
        }
        double* gw = grad.data() + offsets[l];
        double* gb = arch.with_bias ? grad.data() + offsets[l] + out * in : nullptr;
        const Matrix& prev = cache.activations[l];
        for (std::size_t b = 0; b < batch; ++b) {
            const auto row = prev.row(b);
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta(b, o);
                if (d == 0.0) continue;
                double* grow = gw + o * in;
                for (std::size_t i = 0; i < in; ++i) grow[i] += d * row[i];
                if (gb) gb[o] += d;
            }
        }
        if (l > 0) {
            const double* wm = w.data() + offsets[l];
            Matrix next(batch, in);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out; ++o) {
                    const double d = delta(b, o);
                    if (d == 0.0) continue;
                    const double* wrow = wm + o * in;
                    for (std::size_t i = 0; i < in; ++i) next(b, i) += d * wrow[i];
                }
            delta = std::move(next);
        }
    }
    return grad;
}

}  // namespace detail

inline Matrix forward(const MlpArchitecture& arch, std::span<const double> w, const Matrix& x) {
    return detail::forward_impl(arch, w, x).activations.back();
}

inline Vector softmax_row(std::span<const double> z) {
    Vector p(z.size());
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - zmax);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

/// Gradient of the summed log-likelihood with respect to the network outputs.
inline Matrix likelihood_grad_outputs(const Likelihood& lik, const Matrix& outputs,
                                      const Matrix& labels) {
    if (outputs.rows() != labels.rows()) throw ShapeMismatch("likelihood: batch sizes differ");
    Matrix g(outputs.rows(), outputs.cols());
    if (lik.kind == LikelihoodKind::gaussian) {
        if (labels.cols() != outputs.cols()) throw ShapeMismatch("gaussian likelihood label width");
        const double inv = 1.0 / (lik.sigma_n * lik.sigma_n);
        for (std::size_t i = 0; i < outputs.size(); ++i)
            g.storage()[i] = (labels.storage()[i] - outputs.storage()[i]) * inv;
    } else {
        for (std::size_t b = 0; b < outputs.rows(); ++b) {
            const Vector p = softmax_row(outputs.row(b));
            const auto cls = static_cast<std::size_t>(labels(b, 0));
            if (cls >= outputs.cols()) throw ShapeMismatch("class label out of range");
            for (std::size_t c = 0; c < outputs.cols(); ++c) g(b, c) = (c == cls ? 1.0 : 0.0) - p[c];
        }
    }
    return g;
}

/// Summed log-likelihood of a batch, additive constants dropped.
inline double likelihood_log_prob(const Likelihood& lik, const Matrix& outputs,
                                  const Matrix& labels) {
    double lp = 0.0;
    if (lik.kind == LikelihoodKind::gaussian) {
        const double inv = 1.0 / (2.0 * lik.sigma_n * lik.sigma_n);
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            const double r = labels.storage()[i] - outputs.storage()[i];
            lp -= r * r * inv;
        }
    } else {
        for (std::size_t b = 0; b < outputs.rows(); ++b) {
            const Vector p = softmax_row(outputs.row(b));
            const auto cls = static_cast<std::size_t>(labels(b, 0));
            lp += std::log(std::max(p[cls], 1e-300));
        }
    }
    return lp;
}

/// Exact gradient of the summed log-likelihood with respect to the flat
/// parameter vector.
inline Vector backprop_loss_grad(const MlpArchitecture& arch, std::span<const double> w,
                                 const Matrix& x, const Matrix& y, const Likelihood& lik) {
    const auto cache = detail::forward_impl(arch, w, x);
    Matrix cot = likelihood_grad_outputs(lik, cache.activations.back(), y);
    return detail::backward_impl(arch, w, cache, std::move(cot));
}

/// (d f / d w)^T v for the batch-projected network outputs, computed with a
/// single backward pass using v as the output cotangent. v is laid out
/// row-major over (batch point, output unit).
inline Vector jacobian_transpose_vec(const MlpArchitecture& arch, std::span<const double> w,
                                     const Matrix& batch, std::span<const double> v) {
    const std::size_t o = arch.output_dim();
    if (v.size() != batch.rows() * o) throw ShapeMismatch("jacobian_transpose_vec: cotangent length");
    const auto cache = detail::forward_impl(arch, w, batch);
    Matrix cot(batch.rows(), o);
    for (std::size_t i = 0; i < v.size(); ++i) cot.storage()[i] = v[i];
    return detail::backward_impl(arch, w, cache, std::move(cot));
}

/// Projected function values of one particle: forward(w, batch) flattened
/// row-major to length batch * output_dim.
inline Vector project_function(const MlpArchitecture& arch, std::span<const double> w,
                               const Matrix& batch) {
    Matrix out = forward(arch, w, batch);
    return out.storage();
}

/// Draw `count` weight vectors from the isotropic Gaussian prior and project
/// each through the network on `batch`; rows are projected prior functions.
inline Matrix sample_prior_functions(const MlpArchitecture& arch, double sigma_p,
                                     const Matrix& batch, std::size_t count, RngState& rng) {
    Matrix out(count, batch.rows() * arch.output_dim());
    const std::size_t d = arch.param_count();
    for (std::size_t s = 0; s < count; ++s) {
        Vector w(d);
        for (double& v : w) v = sigma_p * rng_standard_normal(rng);
        const Vector f = project_function(arch, w, batch);
        out.set_row(s, f);
    }
    return out;
}

/// Kernel-mixture score of the projected prior evaluated at each particle's
/// function row. The mixture centers are the projected prior samples; the
/// bandwidth is resolved on them.
inline Matrix prior_score_at(const Matrix& function_particles, const Matrix& prior_functions,
                             const RbfKernel& kernel) {
    const double h = resolve_bandwidth(kernel, prior_functions);
    return kde_score_at(function_particles, prior_functions, h);
}

inline Matrix functional_prior_score(const MlpArchitecture& arch, double sigma_p,
                                     const Matrix& batch, const Matrix& function_particles,
                                     std::size_t prior_samples, RngState& rng,
                                     const RbfKernel& kernel = {}) {
    if (prior_samples < 2) throw InvalidConfig("functional_prior_score: needs at least two prior samples");
    const Matrix prior_f = sample_prior_functions(arch, sigma_p, batch, prior_samples, rng);
    return prior_score_at(function_particles, prior_f, kernel);
}

}  // namespace pvi
