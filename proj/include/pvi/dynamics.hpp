#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/estimators.hpp"
#include "pvi/kernels.hpp"
#include "pvi/matrix.hpp"
#include "pvi/nn.hpp"
#include "pvi/rng.hpp"
#include "pvi/targets.hpp"

namespace pvi {

enum class Method {
    deep_ensemble,
    svgd_w,
    svgd_f,
    wgd_kde,
    wgd_sge,
    wgd_ssge,
    fwgd_kde,
    fwgd_sge,
    fwgd_ssge,
};

inline bool is_function_space(Method m) {
    return m == Method::svgd_f || m == Method::fwgd_kde || m == Method::fwgd_sge ||
           m == Method::fwgd_ssge;
}

inline ScoreEstimatorKind method_estimator(Method m) {
    switch (m) {
        case Method::wgd_kde:
        case Method::fwgd_kde:
            return ScoreEstimatorKind::kde;
        case Method::wgd_sge:
        case Method::fwgd_sge:
            return ScoreEstimatorKind::sge;
        case Method::wgd_ssge:
        case Method::fwgd_ssge:
            return ScoreEstimatorKind::ssge;
        default:
            throw InvalidConfig("method has no score estimator");
    }
}

enum class OptimizerKind { plain, rms };

/// Everything a run needs besides the target itself. The repulsion
/// multiplier scales the particle interaction; at exactly 0 every method
/// degenerates to the independent ensemble update.
struct DynamicsConfig {
    Method method = Method::deep_ensemble;
    std::size_t particles = 0;
    std::size_t steps = 0;
    double step_size = 0.05;
    double step_decay = 0.0;  // eps_t = step_size / (1 + step_decay * t)
    OptimizerKind optimizer = OptimizerKind::plain;
    double rms_beta = 0.9;
    double rms_damping = 1e-8;
    RbfKernel kernel;
    double sge_eta = 1e-3;
    SsgeTruncation ssge;
    double repulsion_multiplier = 1.0;
    std::size_t repulsion_warmup = 0;  // ramp the multiplier over the first k steps
    bool svgd_unnormalized = false;    // drop the 1/n factor and weight the i-th gradient
    bool functional_prior = true;
    std::size_t prior_samples = 100;
    std::size_t projection_batch = 0;  // function-space projection set size; 0 = full data
    std::size_t projection_extra = 0;  // extra off-data projection inputs, default off
    std::size_t snapshot_stride = 0;   // 0 = record only initial and final states
};

struct ParticleSet {
    Matrix weights;  // n x d
    std::size_t count() const { return weights.rows(); }
    std::size_t dim() const { return weights.cols(); }
};

struct StepDiagnostics {
    double drift_norm = 0.0;
    double repulsion_norm = 0.0;
    double bandwidth = 0.0;
};

struct TrajectoryRecord {
    std::size_t stride = 1;
    std::vector<std::pair<std::size_t, Matrix>> snapshots;
    std::vector<StepDiagnostics> diagnostics;
};

struct RunResult {
    ParticleSet particles;
    TrajectoryRecord trajectory;
};

namespace detail {

inline void check_finite_update(const Matrix& phi, std::size_t step) {
    if (!phi.all_finite())
        throw NonFiniteUpdate("particle update at step " + std::to_string(step));
}

inline Matrix ensemble_phi(const ParticleSet& p, const TargetDensity& target,
                           const std::vector<std::size_t>& batch, StepDiagnostics* diag) {
    Matrix phi(p.count(), p.dim());
    double dn = 0.0;
    for (std::size_t i = 0; i < p.count(); ++i) {
        const Vector g = target.grad_log_prob_batch(p.weights.row_vector(i), batch);
        phi.set_row(i, g);
        dn += dot(g, g);
    }
    if (diag) *diag = {std::sqrt(dn), 0.0, 0.0};
    return phi;
}

inline Matrix wgd_phi(const ParticleSet& p, const TargetDensity& target,
                      const std::vector<std::size_t>& batch, ScoreEstimatorKind kind,
                      const DynamicsConfig& cfg, StepDiagnostics* diag) {
    const double gamma = cfg.repulsion_multiplier;
    if (gamma == 0.0) return ensemble_phi(p, target, batch, diag);
    Matrix phi = ensemble_phi(p, target, batch, diag);
    const ScoreEstimate est = estimate_score(p.weights, cfg.kernel, kind, cfg.sge_eta, cfg.ssge);
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi.storage()[i] -= gamma * est.scores.storage()[i];
    if (diag) {
        diag->repulsion_norm = gamma * frobenius_norm(est.scores);
        diag->bandwidth = est.bandwidth;
    }
    return phi;
}

inline Matrix svgd_w_phi(const ParticleSet& p, const TargetDensity& target,
                         const std::vector<std::size_t>& batch, const DynamicsConfig& cfg,
                         StepDiagnostics* diag) {
    const double gamma = cfg.repulsion_multiplier;
    if (gamma == 0.0) return ensemble_phi(p, target, batch, diag);
    const std::size_t n = p.count(), d = p.dim();
    const double h = resolve_bandwidth(cfg.kernel, p.weights);
    const Matrix k = gram_fixed(h, p.weights);
    Matrix grads(n, d);
    for (std::size_t i = 0; i < n; ++i)
        grads.set_row(i, target.grad_log_prob_batch(p.weights.row_vector(i), batch));

    Matrix phi(n, d);
    double dn = 0.0, rn = 0.0;
    const double scale = cfg.svgd_unnormalized ? 1.0 : 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vector drift(d, 0.0), rep(d, 0.0);
        if (cfg.svgd_unnormalized) {
            double ksum = 0.0;
            for (std::size_t j = 0; j < n; ++j) ksum += k(i, j);
            for (std::size_t c = 0; c < d; ++c) drift[c] = ksum * grads(i, c);
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                const double kij = k(i, j);
                for (std::size_t c = 0; c < d; ++c) drift[c] += kij * grads(j, c);
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            // grad_{w_j} k(w_j, w_i) pushes w_i away from w_j
            const double w = -2.0 / h * k(i, j);
            for (std::size_t c = 0; c < d; ++c)
                rep[c] += w * (p.weights(j, c) - p.weights(i, c));
        }
        for (std::size_t c = 0; c < d; ++c) phi(i, c) = scale * (drift[c] + gamma * rep[c]);
        dn += dot(drift, drift);
        rn += dot(rep, rep);
    }
    if (diag) *diag = {scale * std::sqrt(dn), scale * gamma * std::sqrt(rn), h};
    return phi;
}

// Projected-function update for svgd_f and the fwgd family: project every
// particle onto the batch, form the functional drift there, then pull it
// back through each particle's Jacobian.
inline Matrix function_space_phi(const ParticleSet& p, const BnnPosteriorTarget& target,
                                 const std::vector<std::size_t>& batch, Method method,
                                 const DynamicsConfig& cfg, const Matrix* prior_functions,
                                 const Matrix* extra_inputs, StepDiagnostics* diag) {
    const double gamma = cfg.repulsion_multiplier;
    if (gamma == 0.0) return ensemble_phi(p, target, batch, diag);

    const MlpArchitecture& arch = target.architecture();
    Matrix proj_inputs = target.batch_inputs(batch);
    const std::size_t b_data = proj_inputs.rows();
    if (extra_inputs && extra_inputs->rows() > 0) {
        Matrix joined(b_data + extra_inputs->rows(), proj_inputs.cols());
        for (std::size_t i = 0; i < b_data; ++i) joined.set_row(i, proj_inputs.row(i));
        for (std::size_t i = 0; i < extra_inputs->rows(); ++i)
            joined.set_row(b_data + i, extra_inputs->row(i));
        proj_inputs = std::move(joined);
    }
    const std::size_t o = arch.output_dim();
    const std::size_t n = p.count();
    const std::size_t fdim = proj_inputs.rows() * o;

    Matrix f(n, fdim);
    for (std::size_t i = 0; i < n; ++i)
        f.set_row(i, project_function(arch, p.weights.row(i), proj_inputs));

    // likelihood gradient lives on the labeled prefix of the projection set
    Matrix f_data(n, b_data * o);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < b_data * o; ++c) f_data(i, c) = f(i, c);
    const Matrix lik = target.functional_likelihood_grad(f_data, batch);

    Matrix post(n, fdim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < b_data * o; ++c) post(i, c) = lik(i, c);
    if (prior_functions) {
        const Matrix ps = prior_score_at(f, *prior_functions, cfg.kernel);
        for (std::size_t i = 0; i < post.size(); ++i) post.storage()[i] += ps.storage()[i];
    }

    Matrix drift(n, fdim);
    double bandwidth = 0.0;
    double rn = 0.0;
    if (method == Method::svgd_f) {
        const double h = resolve_bandwidth(cfg.kernel, f);
        bandwidth = h;
        const Matrix k = gram_fixed(h, f);
        for (std::size_t i = 0; i < n; ++i) {
            auto out = drift.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double kij = k(i, j);
                const auto pj = post.row(j);
                const double w = gamma * 2.0 / h * kij;  // grad wrt the j-th argument
                const auto fi = f.row(i), fj = f.row(j);
                for (std::size_t c = 0; c < fdim; ++c)
                    out[c] += kij * pj[c] + w * (fi[c] - fj[c]);
            }
            for (std::size_t c = 0; c < fdim; ++c) out[c] /= static_cast<double>(n);
        }
        rn = 0.0;  // repulsion folded into the kernel average
    } else {
        const ScoreEstimate est =
            estimate_score(f, cfg.kernel, method_estimator(method), cfg.sge_eta, cfg.ssge);
        bandwidth = est.bandwidth;
        drift = post;
        for (std::size_t i = 0; i < drift.size(); ++i)
            drift.storage()[i] -= gamma * est.scores.storage()[i];
        rn = gamma * frobenius_norm(est.scores);
    }

    Matrix phi(n, p.dim());
    for (std::size_t i = 0; i < n; ++i)
        phi.set_row(i, jacobian_transpose_vec(arch, p.weights.row(i), proj_inputs, drift.row(i)));
    if (diag) *diag = {frobenius_norm(post), rn, bandwidth};
    return phi;
}

inline ParticleSet apply_plain(const ParticleSet& p, const Matrix& phi, double eps,
                               std::size_t step) {
    check_finite_update(phi, step);
    ParticleSet next = p;
    for (std::size_t i = 0; i < phi.size(); ++i)
        next.weights.storage()[i] += eps * phi.storage()[i];
    return next;
}

}  // namespace detail

/// Independent gradient-ascent update: w_i <- w_i + eps * grad log p(w_i | D).
inline ParticleSet step_deep_ensemble(const ParticleSet& p, const TargetDensity& target,
                                      const std::vector<std::size_t>& batch, double eps,
                                      StepDiagnostics* diag = nullptr) {
    return detail::apply_plain(p, detail::ensemble_phi(p, target, batch, diag), eps, 0);
}

/// Kernelized gradient-flow update: w_i <- w_i + eps * (grad log pi(w_i) - score_i)
/// with the empirical-measure score from the chosen estimator.
inline ParticleSet step_wgd(const ParticleSet& p, const TargetDensity& target,
                            const std::vector<std::size_t>& batch, double eps,
                            ScoreEstimatorKind kind, const DynamicsConfig& cfg,
                            StepDiagnostics* diag = nullptr) {
    return detail::apply_plain(p, detail::wgd_phi(p, target, batch, kind, cfg, diag), eps, 0);
}

/// Kernel-averaged update with kernel-gradient repulsion.
inline ParticleSet step_svgd_w(const ParticleSet& p, const TargetDensity& target,
                               const std::vector<std::size_t>& batch, double eps,
                               const DynamicsConfig& cfg, StepDiagnostics* diag = nullptr) {
    return detail::apply_plain(p, detail::svgd_w_phi(p, target, batch, cfg, diag), eps, 0);
}

/// Function-space update pulled back through each particle's Jacobian.
/// `prior_functions`, when given, are projected prior draws on the same
/// batch; the functional prior term is included iff they are present.
inline ParticleSet step_function_space(const ParticleSet& p, const BnnPosteriorTarget& target,
                                       const std::vector<std::size_t>& batch, double eps,
                                       Method method, const DynamicsConfig& cfg,
                                       const Matrix* prior_functions = nullptr,
                                       StepDiagnostics* diag = nullptr) {
    if (!is_function_space(method)) throw InvalidConfig("not a function-space method");
    return detail::apply_plain(
        p, detail::function_space_phi(p, target, batch, method, cfg, prior_functions, nullptr, diag),
        eps, 0);
}

/// Run the configured dynamics for cfg.steps steps. Particles are drawn from
/// the target's initial scale (the weight prior for network posteriors,
/// standard normal otherwise) unless `init` is given. Deterministic given the
/// rng state.
inline RunResult run(const DynamicsConfig& cfg, const TargetDensity& target, RngState rng,
                     const ParticleSet* init = nullptr) {
    if (!init && cfg.particles == 0) throw InvalidConfig("run: particle count not set");

    const auto* bnn = dynamic_cast<const BnnPosteriorTarget*>(&target);
    const double init_sigma = bnn ? bnn->prior_sigma() : 1.0;

    ParticleSet p;
    if (init) {
        p = *init;
    } else {
        p.weights = rng_standard_normal(rng, cfg.particles, target.dim());
        if (init_sigma != 1.0)
            for (double& v : p.weights.storage()) v *= init_sigma;
    }
    if (p.weights.rows() == 0) throw InvalidConfig("run: empty particle set");

    const bool fspace = is_function_space(cfg.method);
    if (fspace && !bnn) throw InvalidConfig("function-space methods need a network posterior target");

    // Off-data projection inputs, drawn once over the training bounding box.
    Matrix extra_inputs;
    if (fspace && cfg.projection_extra > 0) {
        const Matrix& xtr = bnn->data().x_train;
        Vector lo(xtr.cols()), hi(xtr.cols());
        for (std::size_t c = 0; c < xtr.cols(); ++c) {
            lo[c] = hi[c] = xtr(0, c);
            for (std::size_t r = 1; r < xtr.rows(); ++r) {
                lo[c] = std::min(lo[c], xtr(r, c));
                hi[c] = std::max(hi[c], xtr(r, c));
            }
            const double pad = 0.25 * (hi[c] - lo[c]);
            lo[c] -= pad;
            hi[c] += pad;
        }
        extra_inputs = Matrix(cfg.projection_extra, xtr.cols());
        for (std::size_t r = 0; r < cfg.projection_extra; ++r)
            for (std::size_t c = 0; c < xtr.cols(); ++c)
                extra_inputs(r, c) = lo[c] + (hi[c] - lo[c]) * rng_uniform(rng);
    }

    // Prior draws in weight space are fixed for the whole run; projections
    // are cached when the projection set never changes.
    Matrix prior_weights;
    Matrix prior_functions_cache;
    const bool subsampled = bnn && (bnn->is_minibatched() ||
                                    (cfg.projection_batch > 0 && cfg.projection_batch < bnn->data_count()));
    const bool want_prior = fspace && cfg.functional_prior && cfg.repulsion_multiplier != 0.0;
    if (want_prior) {
        if (cfg.prior_samples < 2) throw InvalidConfig("prior_samples must be at least 2");
        prior_weights = rng_standard_normal(rng, cfg.prior_samples, target.dim());
        for (double& v : prior_weights.storage()) v *= bnn->prior_sigma();
    }
    auto project_prior = [&](const std::vector<std::size_t>& batch) -> Matrix {
        Matrix inputs = bnn->batch_inputs(batch);
        if (extra_inputs.rows() > 0) {
            Matrix joined(inputs.rows() + extra_inputs.rows(), inputs.cols());
            for (std::size_t i = 0; i < inputs.rows(); ++i) joined.set_row(i, inputs.row(i));
            for (std::size_t i = 0; i < extra_inputs.rows(); ++i)
                joined.set_row(inputs.rows() + i, extra_inputs.row(i));
            inputs = std::move(joined);
        }
        Matrix out(prior_weights.rows(), inputs.rows() * bnn->architecture().output_dim());
        for (std::size_t s = 0; s < prior_weights.rows(); ++s)
            out.set_row(s, project_function(bnn->architecture(), prior_weights.row(s), inputs));
        return out;
    };
    if (want_prior && !subsampled) prior_functions_cache = project_prior({});

    TrajectoryRecord traj;
    const std::size_t stride =
        cfg.snapshot_stride > 0 ? cfg.snapshot_stride : std::max<std::size_t>(cfg.steps, 1);
    traj.stride = stride;
    traj.snapshots.emplace_back(0, p.weights);
    traj.diagnostics.reserve(cfg.steps);

    Matrix rms_state(p.count(), p.dim());

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const double eps = cfg.step_size / (1.0 + cfg.step_decay * static_cast<double>(t));

        DynamicsConfig step_cfg = cfg;
        if (cfg.repulsion_warmup > 0) {
            const double ramp = std::min(
                1.0, static_cast<double>(t + 1) / static_cast<double>(cfg.repulsion_warmup));
            step_cfg.repulsion_multiplier = cfg.repulsion_multiplier * ramp;
        }

        std::vector<std::size_t> batch;
        if (bnn && bnn->is_minibatched()) {
            batch.resize(bnn->minibatch_size());
            for (auto& ix : batch) ix = rng_below(rng, bnn->data_count());
        } else if (fspace && cfg.projection_batch > 0 && cfg.projection_batch < (bnn ? bnn->data_count() : 0)) {
            batch.resize(cfg.projection_batch);
            for (auto& ix : batch) ix = rng_below(rng, bnn->data_count());
        }

        StepDiagnostics diag;
        Matrix phi;
        switch (cfg.method) {
            case Method::deep_ensemble:
                phi = detail::ensemble_phi(p, target, batch, &diag);
                break;
            case Method::svgd_w:
                phi = detail::svgd_w_phi(p, target, batch, step_cfg, &diag);
                break;
            case Method::wgd_kde:
            case Method::wgd_sge:
            case Method::wgd_ssge:
                phi = detail::wgd_phi(p, target, batch, method_estimator(cfg.method), step_cfg, &diag);
                break;
            default: {
                const Matrix* prior_f = nullptr;
                Matrix prior_step;
                if (want_prior && step_cfg.repulsion_multiplier != 0.0) {
                    if (subsampled) {
                        prior_step = project_prior(batch);
                        prior_f = &prior_step;
                    } else {
                        prior_f = &prior_functions_cache;
                    }
                }
                phi = detail::function_space_phi(p, *bnn, batch, cfg.method, step_cfg, prior_f,
                                                 extra_inputs.rows() > 0 ? &extra_inputs : nullptr,
                                                 &diag);
                break;
            }
        }

        detail::check_finite_update(phi, t);
        if (cfg.optimizer == OptimizerKind::rms) {
            auto& s = rms_state.storage();
            const auto& f = phi.storage();
            auto& w = p.weights.storage();
            for (std::size_t i = 0; i < f.size(); ++i) {
                s[i] = cfg.rms_beta * s[i] + (1.0 - cfg.rms_beta) * f[i] * f[i];
                w[i] += eps * f[i] / (std::sqrt(s[i]) + cfg.rms_damping);
            }
        } else {
            auto& w = p.weights.storage();
            const auto& f = phi.storage();
            for (std::size_t i = 0; i < f.size(); ++i) w[i] += eps * f[i];
        }
        if (!p.weights.all_finite())
            throw NonFiniteUpdate("particle state at step " + std::to_string(t));

        traj.diagnostics.push_back(diag);
        if ((t + 1) % stride == 0 && t + 1 != cfg.steps)
            traj.snapshots.emplace_back(t + 1, p.weights);
    }
    if (cfg.steps > 0) traj.snapshots.emplace_back(cfg.steps, p.weights);

    return {std::move(p), std::move(traj)};
}

}  // namespace pvi
