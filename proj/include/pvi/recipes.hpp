#pragma once

#include <string>
#include <vector>

#include "pvi/config.hpp"

namespace pvi {

inline std::vector<std::string> recipe_names() {
    return {
        "gaussian2d-svgd", "gaussian2d-kde", "gaussian2d-sge", "gaussian2d-ssge", "gaussian2d-hmc",
        "funnel-svgd",     "funnel-sge",     "funnel-hmc",
        "reg1d-de",        "reg1d-svgd_w",   "reg1d-svgd_f",   "reg1d-wgd_sge",  "reg1d-fwgd_sge",
        "reg1d-hmc",
        "class2d-de",      "class2d-svgd_f", "class2d-fwgd_kde", "class2d-hmc",
    };
}

/// Raw JSON for a builtin recipe; it flows through the same strict parser as
/// user configs.
inline json recipe_json(const std::string& name) {
    json j;
    auto starts_with = [&](const char* p) { return name.rfind(p, 0) == 0; };

    if (starts_with("gaussian2d-")) {
        j["experiment"] = "gaussian2d";
        j["seed"] = 0;
        j["particles"] = 50;
        j["steps"] = 2000;
        j["step_size"] = 0.05;
        j["target"] = {{"mean", {2.0, -1.0}}, {"cov_diag", {1.0, 0.5}}};
        j["estimator"] = {{"sge_eta", 0.05}, {"ssge_energy", 0.99}};
        if (name == "gaussian2d-svgd") j["method"] = "svgd_w";
        else if (name == "gaussian2d-kde") j["method"] = "wgd_kde";
        else if (name == "gaussian2d-sge") j["method"] = "wgd_sge";
        else if (name == "gaussian2d-ssge") j["method"] = "wgd_ssge";
        else if (name == "gaussian2d-hmc") {
            j["method"] = "hmc";
            j["steps"] = 20000;
            j["hmc"] = {{"step_size", 0.2}, {"leapfrog_steps", 10}};
        } else {
            throw InvalidConfig("unknown recipe '" + name + "'");
        }
        return j;
    }

    if (starts_with("funnel-")) {
        j["experiment"] = "funnel";
        j["seed"] = 0;
        j["particles"] = 100;
        j["steps"] = 5000;
        j["step_size"] = 0.05;
        j["optimizer"] = "rms";
        j["target"] = {{"scale_v", 3.0}, {"x_dim", 1}};
        j["estimator"] = {{"sge_eta", 0.1}};
        if (name == "funnel-svgd") j["method"] = "svgd_w";
        else if (name == "funnel-sge") j["method"] = "wgd_sge";
        else if (name == "funnel-hmc") {
            j["method"] = "hmc";
            j["steps"] = 20000;
            j["optimizer"] = "plain";
            j["hmc"] = {{"step_size", 0.05}, {"leapfrog_steps", 30}};
        } else {
            throw InvalidConfig("unknown recipe '" + name + "'");
        }
        return j;
    }

    if (starts_with("reg1d-")) {
        j["experiment"] = "reg1d";
        j["seed"] = 0;
        j["particles"] = 16;
        j["steps"] = 2000;
        j["step_size"] = 1e-3;
        j["optimizer"] = "rms";
        j["dataset"] = {{"n_per_cluster", 32}, {"gap", {-0.3, 0.3}}, {"noise", 0.1}};
        j["network"] = {{"hidden", {32, 32}}, {"activation", "tanh"}};
        j["likelihood"] = {{"sigma_n", 0.1}};
        j["prior"] = {{"sigma_p", 1.0}, {"functional_prior", true}, {"prior_samples", 100}};
        j["estimator"] = {{"sge_eta", 0.016}};
        if (name == "reg1d-de") j["method"] = "deep_ensemble";
        else if (name == "reg1d-svgd_w") j["method"] = "svgd_w";
        else if (name == "reg1d-svgd_f") j["method"] = "svgd_f";
        else if (name == "reg1d-wgd_sge") j["method"] = "wgd_sge";
        else if (name == "reg1d-fwgd_sge") j["method"] = "fwgd_sge";
        else if (name == "reg1d-hmc") {
            j["method"] = "hmc";
            j["particles"] = 20;
            j["steps"] = 6000;
            j["optimizer"] = "plain";
            j["hmc"] = {{"step_size", 0.005}, {"leapfrog_steps", 40}};
        } else {
            throw InvalidConfig("unknown recipe '" + name + "'");
        }
        return j;
    }

    if (starts_with("class2d-")) {
        j["experiment"] = "class2d";
        j["seed"] = 0;
        j["particles"] = 16;
        j["steps"] = 1500;
        j["step_size"] = 1e-3;
        j["optimizer"] = "rms";
        j["dataset"] = {{"n_per_class", 64}, {"layout", "two_blobs"}};
        j["network"] = {{"hidden", {32, 32}}, {"activation", "tanh"}};
        j["prior"] = {{"sigma_p", 1.0}, {"functional_prior", true}, {"prior_samples", 100}};
        if (name == "class2d-de") j["method"] = "deep_ensemble";
        else if (name == "class2d-svgd_f") j["method"] = "svgd_f";
        else if (name == "class2d-fwgd_kde") j["method"] = "fwgd_kde";
        else if (name == "class2d-hmc") {
            j["method"] = "hmc";
            j["particles"] = 20;
            j["steps"] = 6000;
            j["optimizer"] = "plain";
            j["hmc"] = {{"step_size", 0.005}, {"leapfrog_steps", 40}};
        } else {
            throw InvalidConfig("unknown recipe '" + name + "'");
        }
        return j;
    }

    throw InvalidConfig("unknown recipe '" + name + "'");
}

inline ExperimentConfig make_recipe(const std::string& name) {
    return parse_experiment_config(recipe_json(name), name);
}

}  // namespace pvi
