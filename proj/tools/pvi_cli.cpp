#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pvi/pvi.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::uint64_t> steps;
    std::optional<std::uint64_t> particles;
    std::optional<std::string> method;
};

void apply_overrides(pvi::ExperimentConfig& cfg, const Overrides& o) {
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.data_seed = *o.seed;
    }
    if (o.out) cfg.output_dir = *o.out;
    if (o.steps) {
        cfg.dynamics.steps = *o.steps;
        cfg.hmc.iterations = *o.steps;
    }
    if (o.particles) cfg.dynamics.particles = *o.particles;
    if (o.method) {
        cfg.method = pvi::parse_method(*o.method);
        cfg.dynamics.method = cfg.method.method;
    }
}

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Override the config seed");
    cmd->add_option("--out", o.out, "Override the output directory");
    cmd->add_option("--steps", o.steps, "Override the step count");
    cmd->add_option("--particles", o.particles, "Override the particle count");
    cmd->add_option("--method", o.method, "Override the method");
}

int execute(pvi::ExperimentConfig cfg, const Overrides& o) {
    apply_overrides(cfg, o);
    const pvi::ExperimentResult res = pvi::run_experiment(cfg, cfg.output_dir);
    std::cout << res.header.dump() << '\n';
    pvi::json rec;
    rec["record"] = "summary";
    rec["metrics"] = res.metrics;
    std::cout << rec.dump() << '\n';
    return 0;
}

pvi::json error_record(const std::exception& e) {
    pvi::json j;
    j["error"] = {{"message", e.what()}};
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"particle-based approximate inference experiments"};
    app.require_subcommand(1);

    std::string config_path, recipe_name;
    Overrides run_over, recipe_over;

    auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file");
    run_cmd->add_option("config", config_path, "JSON config file")->required();
    add_override_flags(run_cmd, run_over);

    auto* recipe_cmd = app.add_subcommand("recipe", "Run a builtin recipe");
    recipe_cmd->add_option("name", recipe_name, "Recipe name (see list-recipes)")->required();
    add_override_flags(recipe_cmd, recipe_over);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Validate a config file and exit");
    validate_cmd->add_option("config", validate_path, "JSON config file")->required();

    auto* list_cmd = app.add_subcommand("list-recipes", "List builtin recipe names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            return execute(pvi::load_experiment_config(config_path), run_over);
        }
        if (recipe_cmd->parsed()) {
            return execute(pvi::make_recipe(recipe_name), recipe_over);
        }
        if (validate_cmd->parsed()) {
            pvi::load_experiment_config(validate_path);
            std::cout << "ok\n";
            return 0;
        }
        if (list_cmd->parsed()) {
            for (const auto& name : pvi::recipe_names()) std::cout << name << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << error_record(e).dump() << '\n';
        return 1;
    }
    return 0;
}
