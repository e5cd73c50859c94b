#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "pvi/config.hpp"
#include "pvi/dataset.hpp"
#include "pvi/dynamics.hpp"
#include "pvi/metrics.hpp"
#include "pvi/oracle.hpp"
#include "pvi/recipes.hpp"
#include "pvi/targets.hpp"

namespace pvi {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct CsvTable {
    std::vector<std::string> columns;
    Matrix values;
};

inline void write_csv(const std::string& path, const std::vector<std::string>& columns,
                      const Matrix& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidConfig("cannot write '" + path + "'");
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out << ',';
        out << columns[c];
    }
    out << '\n';
    for (std::size_t r = 0; r < values.rows(); ++r) {
        for (std::size_t c = 0; c < values.cols(); ++c) {
            if (c) out << ',';
            out << format_double(values(r, c));
        }
        out << '\n';
    }
}

inline CsvTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot read '" + path + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw InvalidConfig("empty csv '" + path + "'");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
    std::vector<Vector> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Vector row;
        std::stringstream ls(line);
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != t.columns.size()) throw InvalidConfig("ragged csv '" + path + "'");
        rows.push_back(std::move(row));
    }
    t.values = Matrix::from_rows(rows);
    return t;
}

struct ExperimentResult {
    json header;
    json metrics;
    Matrix members;          // final ensemble in weight/sample space
    Matrix chain;            // full kept MCMC sample, empty for particle methods
    TrajectoryRecord trajectory;
    Dataset dataset;         // supervised experiments only
    double runtime_seconds = 0.0;
};

namespace detail {

inline MlpArchitecture build_architecture(const ExperimentConfig& cfg) {
    MlpArchitecture arch;
    const bool classification = cfg.experiment == ExperimentKind::class2d;
    arch.widths.push_back(classification ? 2 : 1);
    for (std::size_t w : cfg.hidden_widths) arch.widths.push_back(w);
    arch.widths.push_back(classification ? 2 : 1);
    arch.activation = cfg.activation;
    arch.head = classification ? OutputHead::logits : OutputHead::identity;
    arch.validate();
    return arch;
}

inline Matrix subsample_rows(const Matrix& m, std::size_t count) {
    if (m.rows() <= count) return m;
    Matrix out(count, m.cols());
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t r = i * m.rows() / count;
        out.set_row(i, m.row(r));
    }
    return out;
}

inline std::vector<Matrix> member_predictions(const MlpArchitecture& arch, const Matrix& weights,
                                              const Matrix& inputs, bool probabilities) {
    std::vector<Matrix> preds;
    preds.reserve(weights.rows());
    for (std::size_t i = 0; i < weights.rows(); ++i) {
        Matrix out = forward(arch, weights.row(i), inputs);
        if (probabilities) {
            for (std::size_t r = 0; r < out.rows(); ++r) {
                const Vector p = softmax_row(out.row(r));
                out.set_row(r, p);
            }
        }
        preds.push_back(std::move(out));
    }
    return preds;
}

inline json filter_metrics(const json& metrics, const std::vector<std::string>& selection) {
    if (selection.empty()) return metrics;
    json out = json::object();
    for (const auto& name : selection) {
        if (!metrics.contains(name))
            throw InvalidConfig("unknown metric '" + name + "' for this experiment");
        out[name] = metrics.at(name);
    }
    return out;
}

inline std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Execute one configured experiment: build the target, run the selected
/// dynamics (or the HMC oracle), compute the experiment's metrics, and — when
/// `out_dir` is nonempty — write summary.jsonl, particles.csv and, for the
/// supervised tasks, predictive.csv.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::string out_dir = "") {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;

    std::unique_ptr<TargetDensity> target;
    MlpArchitecture arch;
    const bool supervised =
        cfg.experiment == ExperimentKind::reg1d || cfg.experiment == ExperimentKind::class2d;

    if (cfg.experiment == ExperimentKind::gaussian2d) {
        Matrix cov(cfg.target_cov_diag.size(), cfg.target_cov_diag.size());
        for (std::size_t i = 0; i < cfg.target_cov_diag.size(); ++i) cov(i, i) = cfg.target_cov_diag[i];
        target = std::make_unique<GaussianTarget>(cfg.target_mean, cov);
    } else if (cfg.experiment == ExperimentKind::funnel) {
        target = std::make_unique<FunnelTarget>(cfg.funnel_scale_v, cfg.funnel_x_dim);
    } else {
        res.dataset = cfg.experiment == ExperimentKind::reg1d
                          ? gen_regression_1d(cfg.data_seed, cfg.reg_n_per_cluster, cfg.reg_gap_lo,
                                              cfg.reg_gap_hi, cfg.reg_noise)
                          : gen_classification_2d(cfg.data_seed, cfg.cls_n_per_class, cfg.cls_layout);
        arch = detail::build_architecture(cfg);
        Likelihood lik;
        lik.kind = cfg.experiment == ExperimentKind::reg1d ? LikelihoodKind::gaussian
                                                           : LikelihoodKind::categorical;
        lik.sigma_n = cfg.sigma_n;
        target = std::make_unique<BnnPosteriorTarget>(arch, res.dataset, lik, cfg.sigma_p, cfg.minibatch);
    }

    RngState rng = rng_split(RngState{cfg.seed, 0}, 1);
    if (cfg.method.oracle_hmc) {
        Vector start(target->dim());
        const double scale = supervised ? cfg.sigma_p : 1.0;
        for (double& v : start) v = scale * rng_standard_normal(rng);
        McmcResult mc = hmc_sample(*target, cfg.hmc, rng, std::move(start));
        res.chain = std::move(mc.samples);
        res.members = detail::subsample_rows(res.chain, cfg.dynamics.particles);
        res.header["acceptance_rate"] = mc.acceptance_rate;
        res.header["divergences"] = mc.divergences;
    } else {
        RunResult rr = run(cfg.dynamics, *target, rng);
        res.members = rr.particles.weights;
        res.trajectory = std::move(rr.trajectory);
    }

    // ---- metrics ----
    json metrics = json::object();
    if (cfg.experiment == ExperimentKind::gaussian2d) {
        const auto* g = dynamic_cast<const GaussianTarget*>(target.get());
        const Matrix& cloud = res.chain.rows() > 0 ? res.chain : res.members;
        const SampleQuality q = sample_quality(cloud, g->mean(), g->covariance());
        metrics["mean_error"] = q.mean_error;
        metrics["cov_error"] = q.cov_error;
    } else if (cfg.experiment == ExperimentKind::funnel) {
        const Matrix& cloud = res.chain.rows() > 0 ? res.chain : res.members;
        const Vector m = sample_mean(cloud);
        const Matrix c = sample_covariance(cloud);
        metrics["v_std"] = std::sqrt(c(0, 0));
        metrics["v_mean"] = m[0];
        if (cloud.cols() > 1) metrics["x_std"] = std::sqrt(c(1, 1));
    } else if (cfg.experiment == ExperimentKind::reg1d) {
        const auto preds_grid =
            detail::member_predictions(arch, res.members, res.dataset.x_grid, false);
        const PredictiveSummary grid =
            bma_predict(preds_grid, LikelihoodKind::gaussian, cfg.sigma_n);
        const auto preds_test =
            detail::member_predictions(arch, res.members, res.dataset.x_test, false);
        const PredictiveSummary test =
            bma_predict(preds_test, LikelihoodKind::gaussian, cfg.sigma_n);

        double nll = 0.0, rmse = 0.0;
        for (std::size_t i = 0; i < res.dataset.x_test.rows(); ++i) {
            const double var = test.epistemic_std[i] * test.epistemic_std[i] +
                               cfg.sigma_n * cfg.sigma_n;
            const double r = res.dataset.y_test(i, 0) - test.bma(i, 0);
            nll += 0.5 * std::log(2.0 * std::numbers::pi * var) + r * r / (2.0 * var);
            rmse += r * r;
        }
        const double nt = static_cast<double>(res.dataset.x_test.rows());
        metrics["nll"] = nll / nt;
        metrics["rmse"] = std::sqrt(rmse / nt);

        double gap_sum = 0.0, data_sum = 0.0;
        std::size_t gap_n = 0, data_n = 0;
        const double cluster_width = 0.7;
        for (std::size_t i = 0; i < res.dataset.x_grid.rows(); ++i) {
            const double x = res.dataset.x_grid(i, 0);
            if (x > cfg.reg_gap_lo && x < cfg.reg_gap_hi) {
                gap_sum += grid.epistemic_std[i];
                ++gap_n;
            } else if ((x >= cfg.reg_gap_lo - cluster_width && x <= cfg.reg_gap_lo) ||
                       (x >= cfg.reg_gap_hi && x <= cfg.reg_gap_hi + cluster_width)) {
                data_sum += grid.epistemic_std[i];
                ++data_n;
            }
        }
        const double gap_std = gap_sum / static_cast<double>(gap_n);
        const double data_std = data_sum / static_cast<double>(data_n);
        metrics["gap_epistemic_std"] = gap_std;
        metrics["data_epistemic_std"] = data_std;
        metrics["gap_epistemic_ratio"] = gap_std / data_std;
    } else {
        const auto preds_test =
            detail::member_predictions(arch, res.members, res.dataset.x_test, true);
        const auto preds_ood =
            detail::member_predictions(arch, res.members, res.dataset.x_ood, true);
        const PredictiveSummary test = bma_predict(preds_test, LikelihoodKind::categorical);
        const PredictiveSummary ood = bma_predict(preds_ood, LikelihoodKind::categorical);

        std::size_t correct_count = 0;
        double nll = 0.0;
        Vector confidences(test.bma.rows());
        std::vector<bool> correct(test.bma.rows());
        for (std::size_t i = 0; i < test.bma.rows(); ++i) {
            const auto label = static_cast<std::size_t>(res.dataset.y_test(i, 0));
            std::size_t argmax = 0;
            for (std::size_t c = 1; c < test.bma.cols(); ++c)
                if (test.bma(i, c) > test.bma(i, argmax)) argmax = c;
            correct[i] = argmax == label;
            correct_count += correct[i] ? 1 : 0;
            confidences[i] = test.bma(i, argmax);
            nll -= std::log(std::max(test.bma(i, label), 1e-300));
        }
        const double nt = static_cast<double>(test.bma.rows());
        metrics["accuracy"] = static_cast<double>(correct_count) / nt;
        metrics["nll"] = nll / nt;
        metrics["ece"] = ece(confidences, correct, cfg.ece_bins);
        double h_test = 0.0, h_ood = 0.0, md_test = 0.0, md_ood = 0.0;
        for (double v : test.entropy) h_test += v;
        for (double v : ood.entropy) h_ood += v;
        for (double v : test.disagreement) md_test += v;
        for (double v : ood.disagreement) md_ood += v;
        h_test /= nt;
        md_test /= nt;
        h_ood /= static_cast<double>(ood.entropy.size());
        md_ood /= static_cast<double>(ood.disagreement.size());
        metrics["auroc_entropy"] = auroc(ood.entropy, test.entropy);
        metrics["auroc_disagreement"] = auroc(ood.disagreement, test.disagreement);
        metrics["entropy_ratio"] = h_ood / h_test;
        metrics["disagreement_ratio"] = md_ood / md_test;
    }
    res.metrics = detail::filter_metrics(metrics, cfg.metrics);

    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.header["record"] = "header";
    res.header["name"] = cfg.name;
    res.header["method"] = method_name(cfg.method);
    res.header["seed"] = cfg.seed;
    res.header["timestamp"] = detail::timestamp_now();
    res.header["runtime_seconds"] = res.runtime_seconds;

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);

        {
            std::ofstream out(out_dir + "/summary.jsonl", std::ios::binary);
            out << res.header.dump() << '\n';
            json rec;
            rec["record"] = "summary";
            rec["metrics"] = res.metrics;
            out << rec.dump() << '\n';
        }

        {
            std::vector<std::string> cols = {"step", "particle_index"};
            const std::size_t d = res.members.cols();
            for (std::size_t c = 0; c < d; ++c) cols.push_back("w" + std::to_string(c));
            Matrix rows;
            if (res.chain.rows() > 0) {
                rows = Matrix(res.members.rows(), d + 2);
                for (std::size_t i = 0; i < res.members.rows(); ++i) {
                    rows(i, 0) = static_cast<double>(cfg.dynamics.steps);
                    rows(i, 1) = static_cast<double>(i);
                    for (std::size_t c = 0; c < d; ++c) rows(i, 2 + c) = res.members(i, c);
                }
            } else {
                std::size_t total = 0;
                for (const auto& [step, snap] : res.trajectory.snapshots) total += snap.rows();
                rows = Matrix(total, d + 2);
                std::size_t r = 0;
                for (const auto& [step, snap] : res.trajectory.snapshots) {
                    for (std::size_t i = 0; i < snap.rows(); ++i, ++r) {
                        rows(r, 0) = static_cast<double>(step);
                        rows(r, 1) = static_cast<double>(i);
                        for (std::size_t c = 0; c < d; ++c) rows(r, 2 + c) = snap(i, c);
                    }
                }
            }
            write_csv(out_dir + "/particles.csv", cols, rows);
        }

        if (supervised) {
            const bool classification = cfg.experiment == ExperimentKind::class2d;
            const auto preds =
                detail::member_predictions(arch, res.members, res.dataset.x_grid, classification);
            const PredictiveSummary grid = bma_predict(
                preds, classification ? LikelihoodKind::categorical : LikelihoodKind::gaussian,
                cfg.sigma_n);
            const std::size_t in_dim = res.dataset.x_grid.cols();
            std::vector<std::string> cols;
            if (in_dim == 1) cols = {"x"};
            else cols = {"x1", "x2"};
            for (const char* c : {"bma_mean", "epistemic_std", "aleatoric_std", "entropy", "md"})
                cols.push_back(c);
            Matrix rows(res.dataset.x_grid.rows(), in_dim + 5);
            for (std::size_t i = 0; i < rows.rows(); ++i) {
                for (std::size_t c = 0; c < in_dim; ++c) rows(i, c) = res.dataset.x_grid(i, c);
                const double mean = classification && grid.bma.cols() > 1 ? grid.bma(i, 1) : grid.bma(i, 0);
                rows(i, in_dim + 0) = mean;
                rows(i, in_dim + 1) = grid.epistemic_std[i];
                rows(i, in_dim + 2) = grid.aleatoric_std[i];
                rows(i, in_dim + 3) = grid.entropy[i];
                rows(i, in_dim + 4) = grid.disagreement[i];
            }
            write_csv(out_dir + "/predictive.csv", cols, rows);
        }
    }
    return res;
}

}  // namespace pvi
