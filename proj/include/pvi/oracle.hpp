#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "pvi/errors.hpp"
#include "pvi/matrix.hpp"
#include "pvi/rng.hpp"
#include "pvi/targets.hpp"

namespace pvi {

struct MetropolisConfig {
    double proposal_scale = 0.5;
    std::size_t iterations = 10000;
    double burn_in_fraction = 0.2;
};

struct HmcConfig {
    double step_size = 0.05;
    std::size_t leapfrog_steps = 20;
    std::size_t iterations = 10000;
    double burn_in_fraction = 0.2;
};

struct McmcResult {
    Matrix samples;  // one row per kept iteration
    double acceptance_rate = 0.0;
    std::size_t divergences = 0;
};

/// Gaussian random-walk Metropolis-Hastings; only log-density differences
/// are used, so dropped normalizers never matter.
inline McmcResult metropolis_sample(const TargetDensity& target, const MetropolisConfig& cfg,
                                    RngState& rng, Vector start = {}) {
    if (cfg.iterations == 0) throw InvalidConfig("metropolis_sample: zero iterations");
    const std::size_t d = target.dim();
    Vector x = start.empty() ? Vector(d, 0.0) : std::move(start);
    double lp = target.log_prob(x);
    const auto burn = static_cast<std::size_t>(cfg.burn_in_fraction * static_cast<double>(cfg.iterations));

    McmcResult res;
    res.samples = Matrix(cfg.iterations - burn, d);
    std::size_t accepted = 0;
    Vector prop(d);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        for (std::size_t j = 0; j < d; ++j)
            prop[j] = x[j] + cfg.proposal_scale * rng_standard_normal(rng);
        const double lp_prop = target.log_prob(prop);
        if (std::log(rng_uniform(rng)) < lp_prop - lp) {
            x = prop;
            lp = lp_prop;
            ++accepted;
        }
        if (it >= burn) res.samples.set_row(it - burn, x);
    }
    res.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.iterations);
    return res;
}

/// One leapfrog trajectory with unit mass; returns the end state. Gradients
/// are of log pi, so the momentum kicks ascend the target.
inline std::pair<Vector, Vector> leapfrog(const TargetDensity& target, Vector q, Vector p,
                                          double step, std::size_t n_steps) {
    Vector g = target.grad_log_prob(q);
    for (std::size_t l = 0; l < n_steps; ++l) {
        for (std::size_t j = 0; j < q.size(); ++j) p[j] += 0.5 * step * g[j];
        for (std::size_t j = 0; j < q.size(); ++j) q[j] += step * p[j];
        g = target.grad_log_prob(q);
        for (std::size_t j = 0; j < q.size(); ++j) p[j] += 0.5 * step * g[j];
    }
    return {std::move(q), std::move(p)};
}

inline double hamiltonian(const TargetDensity& target, const Vector& q, const Vector& p) {
    double kin = 0.0;
    for (double v : p) kin += v * v;
    return -target.log_prob(q) + 0.5 * kin;
}

/// Leapfrog HMC with identity mass matrix. Non-finite trajectories count as
/// divergences and are discarded (the chain stays put).
inline McmcResult hmc_sample(const TargetDensity& target, const HmcConfig& cfg, RngState& rng,
                             Vector start = {}) {
    if (cfg.iterations == 0 || cfg.leapfrog_steps == 0 || !(cfg.step_size > 0.0))
        throw InvalidConfig("hmc_sample: bad configuration");
    const std::size_t d = target.dim();
    Vector q = start.empty() ? Vector(d, 0.0) : std::move(start);
    const auto burn = static_cast<std::size_t>(cfg.burn_in_fraction * static_cast<double>(cfg.iterations));

    McmcResult res;
    res.samples = Matrix(cfg.iterations - burn, d);
    std::size_t accepted = 0;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Vector p(d);
        for (double& v : p) v = rng_standard_normal(rng);
        const double h0 = hamiltonian(target, q, p);
        auto [q1, p1] = leapfrog(target, q, p, cfg.step_size, cfg.leapfrog_steps);
        const double h1 = hamiltonian(target, q1, p1);
        // one uniform per iteration regardless of outcome keeps draws aligned
        const double u = rng_uniform(rng);
        if (!std::isfinite(h1)) {
            ++res.divergences;
        } else if (std::log(u) < h0 - h1) {
            q = std::move(q1);
            ++accepted;
        }
        if (it >= burn) res.samples.set_row(it - burn, q);
    }
    res.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.iterations);
    return res;
}

}  // namespace pvi
