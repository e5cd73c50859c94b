#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvi/dynamics.hpp"
#include "pvi/errors.hpp"
#include "pvi/nn.hpp"
#include "pvi/oracle.hpp"

namespace pvi {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& j, const std::string& ctx,
                       const std::set<std::string>& required,
                       const std::set<std::string>& optional) {
    if (!j.is_object()) throw InvalidConfig(ctx + " must be an object");
    for (const auto& item : j.items()) {
        if (!required.contains(item.key()) && !optional.contains(item.key()))
            throw InvalidConfig("unknown key '" + item.key() + "' in " + ctx);
    }
    for (const auto& k : required)
        if (!j.contains(k)) throw InvalidConfig("missing required key '" + k + "' in " + ctx);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidConfig("key '" + key + "' has the wrong type");
    }
}

template <typename T>
T get_req(const json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidConfig("key '" + key + "' is missing or has the wrong type");
    }
}

}  // namespace detail

enum class ExperimentKind { gaussian2d, funnel, reg1d, class2d };

/// "hmc" on top of the particle methods selects the oracle sampler companion.
struct MethodChoice {
    bool oracle_hmc = false;
    Method method = Method::deep_ensemble;
};

inline MethodChoice parse_method(const std::string& name) {
    if (name == "hmc") return {true, Method::deep_ensemble};
    static const std::vector<std::pair<std::string, Method>> table = {
        {"deep_ensemble", Method::deep_ensemble}, {"svgd_w", Method::svgd_w},
        {"svgd_f", Method::svgd_f},               {"wgd_kde", Method::wgd_kde},
        {"wgd_sge", Method::wgd_sge},             {"wgd_ssge", Method::wgd_ssge},
        {"fwgd_kde", Method::fwgd_kde},           {"fwgd_sge", Method::fwgd_sge},
        {"fwgd_ssge", Method::fwgd_ssge},
    };
    for (const auto& [n, m] : table)
        if (n == name) return {false, m};
    throw InvalidConfig("unknown method '" + name + "'");
}

inline std::string method_name(const MethodChoice& mc) {
    if (mc.oracle_hmc) return "hmc";
    switch (mc.method) {
        case Method::deep_ensemble: return "deep_ensemble";
        case Method::svgd_w: return "svgd_w";
        case Method::svgd_f: return "svgd_f";
        case Method::wgd_kde: return "wgd_kde";
        case Method::wgd_sge: return "wgd_sge";
        case Method::wgd_ssge: return "wgd_ssge";
        case Method::fwgd_kde: return "fwgd_kde";
        case Method::fwgd_sge: return "fwgd_sge";
        case Method::fwgd_ssge: return "fwgd_ssge";
    }
    return "?";
}

struct ExperimentConfig {
    std::string name;  // recipe name or config path stem
    ExperimentKind experiment = ExperimentKind::gaussian2d;
    MethodChoice method;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    std::vector<std::string> metrics;  // empty = all applicable

    DynamicsConfig dynamics;

    // gaussian2d
    Vector target_mean;
    Vector target_cov_diag;
    // funnel
    double funnel_scale_v = 3.0;
    std::size_t funnel_x_dim = 1;

    // reg1d / class2d
    std::uint64_t data_seed = 0;
    std::size_t reg_n_per_cluster = 32;
    double reg_gap_lo = -0.3, reg_gap_hi = 0.3;
    double reg_noise = 0.1;
    std::size_t cls_n_per_class = 64;
    std::string cls_layout = "two_blobs";
    std::vector<std::size_t> hidden_widths = {32, 32};
    Activation activation = Activation::tanh_fn;
    double sigma_p = 1.0;
    double sigma_n = 0.1;
    std::size_t minibatch = 0;
    std::size_t ece_bins = 15;

    HmcConfig hmc;
};

inline ExperimentConfig parse_experiment_config(const json& j, const std::string& name) {
    using detail::check_keys;
    using detail::get_or;
    using detail::get_req;

    check_keys(j, "config",
               {"experiment", "method", "seed", "steps", "particles"},
               {"output_dir", "step_size", "step_decay", "optimizer", "snapshot_stride",
                "repulsion_multiplier", "repulsion_warmup", "svgd_unnormalized", "kernel",
                "estimator", "target", "dataset", "network", "likelihood", "prior", "projection",
                "minibatch", "hmc", "metrics", "ece_bins"});

    ExperimentConfig c;
    c.name = name;
    const std::string exp = get_req<std::string>(j, "experiment");
    if (exp == "gaussian2d") c.experiment = ExperimentKind::gaussian2d;
    else if (exp == "funnel") c.experiment = ExperimentKind::funnel;
    else if (exp == "reg1d") c.experiment = ExperimentKind::reg1d;
    else if (exp == "class2d") c.experiment = ExperimentKind::class2d;
    else throw InvalidConfig("unknown experiment '" + exp + "'");

    c.method = parse_method(get_req<std::string>(j, "method"));
    c.seed = get_req<std::uint64_t>(j, "seed");
    c.output_dir = get_or<std::string>(j, "output_dir", ".");
    c.metrics = get_or<std::vector<std::string>>(j, "metrics", {});

    auto& dyn = c.dynamics;
    dyn.method = c.method.method;
    dyn.steps = get_req<std::uint64_t>(j, "steps");
    dyn.particles = get_req<std::uint64_t>(j, "particles");
    if (dyn.particles == 0) throw InvalidConfig("'particles' must be positive");
    dyn.step_size = get_or<double>(j, "step_size", 0.05);
    if (!(dyn.step_size > 0.0)) throw InvalidConfig("'step_size' must be positive");
    dyn.step_decay = get_or<double>(j, "step_decay", 0.0);
    dyn.snapshot_stride = get_or<std::uint64_t>(j, "snapshot_stride", 0);
    dyn.repulsion_multiplier = get_or<double>(j, "repulsion_multiplier", 1.0);
    dyn.repulsion_warmup = get_or<std::uint64_t>(j, "repulsion_warmup", 0);
    dyn.svgd_unnormalized = get_or<bool>(j, "svgd_unnormalized", false);
    const std::string opt = get_or<std::string>(j, "optimizer", "plain");
    if (opt == "plain") dyn.optimizer = OptimizerKind::plain;
    else if (opt == "rms") dyn.optimizer = OptimizerKind::rms;
    else throw InvalidConfig("unknown optimizer '" + opt + "'");

    if (j.contains("kernel")) {
        const json& k = j.at("kernel");
        check_keys(k, "kernel", {}, {"bandwidth_mode", "lengthscale", "degenerate_floor"});
        const std::string mode = get_or<std::string>(k, "bandwidth_mode", "median");
        if (mode == "fixed") dyn.kernel.mode = BandwidthMode::fixed;
        else if (mode == "median") dyn.kernel.mode = BandwidthMode::median;
        else if (mode == "median_over_log_n") dyn.kernel.mode = BandwidthMode::median_over_log_n;
        else throw InvalidConfig("unknown bandwidth_mode '" + mode + "'");
        dyn.kernel.lengthscale = get_or<double>(k, "lengthscale", 1.0);
        dyn.kernel.degenerate_floor = get_or<double>(k, "degenerate_floor", 1e-6);
    }
    if (j.contains("estimator")) {
        const json& e = j.at("estimator");
        check_keys(e, "estimator", {}, {"sge_eta", "ssge_energy", "ssge_eigencount"});
        dyn.sge_eta = get_or<double>(e, "sge_eta", 1e-3);
        dyn.ssge.energy = get_or<double>(e, "ssge_energy", 0.99);
        dyn.ssge.count = get_or<std::uint64_t>(e, "ssge_eigencount", 0);
        if (!(dyn.sge_eta > 0.0)) throw InvalidConfig("'sge_eta' must be positive");
        if (!(dyn.ssge.energy > 0.0) || dyn.ssge.energy > 1.0)
            throw InvalidConfig("'ssge_energy' must lie in (0, 1]");
    }
    if (j.contains("projection")) {
        const json& p = j.at("projection");
        check_keys(p, "projection", {}, {"batch", "extra"});
        dyn.projection_batch = get_or<std::uint64_t>(p, "batch", 0);
        dyn.projection_extra = get_or<std::uint64_t>(p, "extra", 0);
    }
    if (j.contains("prior")) {
        const json& p = j.at("prior");
        check_keys(p, "prior", {}, {"sigma_p", "functional_prior", "prior_samples"});
        c.sigma_p = get_or<double>(p, "sigma_p", 1.0);
        dyn.functional_prior = get_or<bool>(p, "functional_prior", true);
        dyn.prior_samples = get_or<std::uint64_t>(p, "prior_samples", 100);
        if (!(c.sigma_p > 0.0)) throw InvalidConfig("'sigma_p' must be positive");
    }
    c.minibatch = get_or<std::uint64_t>(j, "minibatch", 0);
    c.ece_bins = get_or<std::uint64_t>(j, "ece_bins", 15);

    if (j.contains("target")) {
        const json& t = j.at("target");
        if (c.experiment == ExperimentKind::gaussian2d) {
            check_keys(t, "target", {"mean", "cov_diag"}, {});
            c.target_mean = get_req<Vector>(t, "mean");
            c.target_cov_diag = get_req<Vector>(t, "cov_diag");
            if (c.target_mean.size() != c.target_cov_diag.size() || c.target_mean.empty())
                throw InvalidConfig("'mean' and 'cov_diag' must be same nonzero length");
            for (double v : c.target_cov_diag)
                if (!(v > 0.0)) throw InvalidConfig("'cov_diag' entries must be positive");
        } else if (c.experiment == ExperimentKind::funnel) {
            check_keys(t, "target", {}, {"scale_v", "x_dim"});
            c.funnel_scale_v = get_or<double>(t, "scale_v", 3.0);
            c.funnel_x_dim = get_or<std::uint64_t>(t, "x_dim", 1);
        } else {
            throw InvalidConfig("'target' block only applies to sampling experiments");
        }
    } else if (c.experiment == ExperimentKind::gaussian2d) {
        throw InvalidConfig("gaussian2d requires a 'target' block");
    }

    c.data_seed = c.seed;
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        if (c.experiment == ExperimentKind::reg1d) {
            check_keys(d, "dataset", {}, {"n_per_cluster", "gap", "noise", "data_seed"});
            c.reg_n_per_cluster = get_or<std::uint64_t>(d, "n_per_cluster", 32);
            if (d.contains("gap")) {
                const auto gap = get_req<Vector>(d, "gap");
                if (gap.size() != 2) throw InvalidConfig("'gap' must have two entries");
                c.reg_gap_lo = gap[0];
                c.reg_gap_hi = gap[1];
            }
            c.reg_noise = get_or<double>(d, "noise", 0.1);
            c.data_seed = get_or<std::uint64_t>(d, "data_seed", c.seed);
        } else if (c.experiment == ExperimentKind::class2d) {
            check_keys(d, "dataset", {}, {"n_per_class", "layout", "data_seed"});
            c.cls_n_per_class = get_or<std::uint64_t>(d, "n_per_class", 64);
            c.cls_layout = get_or<std::string>(d, "layout", "two_blobs");
            c.data_seed = get_or<std::uint64_t>(d, "data_seed", c.seed);
        } else {
            throw InvalidConfig("'dataset' block only applies to supervised experiments");
        }
    }

    if (j.contains("network")) {
        const json& n = j.at("network");
        check_keys(n, "network", {}, {"hidden", "activation"});
        c.hidden_widths = get_or<std::vector<std::size_t>>(n, "hidden", {32, 32});
        if (c.hidden_widths.empty()) throw InvalidConfig("'hidden' needs at least one layer");
        const std::string act = get_or<std::string>(n, "activation", "tanh");
        if (act == "tanh") c.activation = Activation::tanh_fn;
        else if (act == "relu") c.activation = Activation::relu;
        else throw InvalidConfig("unknown activation '" + act + "'");
    }
    if (j.contains("likelihood")) {
        const json& l = j.at("likelihood");
        check_keys(l, "likelihood", {}, {"sigma_n"});
        c.sigma_n = get_or<double>(l, "sigma_n", 0.1);
        if (!(c.sigma_n > 0.0)) throw InvalidConfig("'sigma_n' must be positive");
    }
    if (j.contains("hmc")) {
        const json& h = j.at("hmc");
        check_keys(h, "hmc", {}, {"step_size", "leapfrog_steps", "burn_in"});
        c.hmc.step_size = get_or<double>(h, "step_size", 0.05);
        c.hmc.leapfrog_steps = get_or<std::uint64_t>(h, "leapfrog_steps", 20);
        c.hmc.burn_in_fraction = get_or<double>(h, "burn_in", 0.2);
    }
    c.hmc.iterations = dyn.steps;

    const bool supervised =
        c.experiment == ExperimentKind::reg1d || c.experiment == ExperimentKind::class2d;
    if (is_function_space(c.method.method) && !c.method.oracle_hmc && !supervised)
        throw InvalidConfig("function-space methods need a supervised experiment");
    return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
    }
    std::string stem = path;
    if (const auto pos = stem.find_last_of('/'); pos != std::string::npos) stem = stem.substr(pos + 1);
    if (const auto pos = stem.find_last_of('.'); pos != std::string::npos) stem = stem.substr(0, pos);
    return parse_experiment_config(j, stem);
}

}  // namespace pvi
