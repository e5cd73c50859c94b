#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/kernels.hpp"
#include "pvi/matrix.hpp"
#include "pvi/nn.hpp"

namespace pvi {

/// Entropy of one predictive distribution, natural log, 0 log 0 := 0.
inline double predictive_entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

/// Root of the class-averaged member variance around the ensemble mean:
/// MD^2 = mean_y (1/n) sum_i (p_i(y) - pbar(y))^2.
inline double model_disagreement(const Matrix& member_probs, std::span<const double> bma) {
    const std::size_t n = member_probs.rows(), c = member_probs.cols();
    double acc = 0.0;
    for (std::size_t y = 0; y < c; ++y) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = member_probs(i, y) - bma[y];
            v += d * d;
        }
        acc += v / static_cast<double>(n);
    }
    return std::sqrt(acc / static_cast<double>(c));
}

/// Ensemble predictive summary over a set of inputs. For classification the
/// members hold per-class probabilities; for regression they hold means and
/// the spread splits into epistemic (across members) and aleatoric
/// (observation noise) parts.
struct PredictiveSummary {
    LikelihoodKind kind = LikelihoodKind::categorical;
    std::vector<Matrix> members;  // per input: n x C probabilities (or n x 1 means)
    Matrix bma;                   // b x C (or b x 1)
    Vector entropy;               // b
    Vector disagreement;          // b
    Vector epistemic_std;         // b
    Vector aleatoric_std;         // b
};

/// members: one matrix per ensemble member, b x C class probabilities or
/// b x 1 regression means.
inline PredictiveSummary bma_predict(const std::vector<Matrix>& members, LikelihoodKind kind,
                                     double sigma_n = 0.0) {
    if (members.empty()) throw ShapeMismatch("bma_predict: no members");
    const std::size_t n = members.size();
    const std::size_t b = members.front().rows(), c = members.front().cols();
    for (const auto& m : members)
        if (m.rows() != b || m.cols() != c) throw ShapeMismatch("bma_predict: member shapes differ");

    PredictiveSummary s;
    s.kind = kind;
    s.bma = Matrix(b, c);
    s.entropy.resize(b);
    s.disagreement.resize(b);
    s.epistemic_std.resize(b);
    s.aleatoric_std.resize(b);
    s.members.reserve(b);

    for (std::size_t x = 0; x < b; ++x) {
        Matrix per_input(n, c);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t y = 0; y < c; ++y) per_input(i, y) = members[i](x, y);
        for (std::size_t y = 0; y < c; ++y) {
            double m = 0.0;
            for (std::size_t i = 0; i < n; ++i) m += per_input(i, y);
            s.bma(x, y) = m / static_cast<double>(n);
        }
        if (kind == LikelihoodKind::categorical) {
            s.entropy[x] = predictive_entropy(s.bma.row(x));
            s.disagreement[x] = model_disagreement(per_input, s.bma.row(x));
            // binary-style spread diagnostics on the first class column
            double v = 0.0, alea = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double p1 = per_input(i, c > 1 ? 1 : 0);
                const double d = p1 - s.bma(x, c > 1 ? 1 : 0);
                v += d * d;
                alea += p1 * (1.0 - p1);
            }
            s.epistemic_std[x] = std::sqrt(v / std::max<std::size_t>(n - 1, 1));
            s.aleatoric_std[x] = std::sqrt(alea / static_cast<double>(n));
        } else {
            // equal-weight Gaussian mixture: mean of means, variance split
            double v = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = per_input(i, 0) - s.bma(x, 0);
                v += d * d;
            }
            const double epi2 = v / std::max<std::size_t>(n - 1, 1);
            s.epistemic_std[x] = std::sqrt(epi2);
            s.aleatoric_std[x] = sigma_n;
            const double total = epi2 + sigma_n * sigma_n;
            s.entropy[x] = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * total);
            s.disagreement[x] = s.epistemic_std[x];
        }
        s.members.push_back(std::move(per_input));
    }
    return s;
}

/// Binned expected calibration error with uniform bin edges on [0, 1].
inline double ece(const Vector& confidences, const std::vector<bool>& correct, std::size_t bins) {
    if (bins == 0) throw InvalidConfig("ece: bins must be positive");
    if (confidences.size() != correct.size()) throw ShapeMismatch("ece: input lengths differ");
    if (confidences.empty()) return 0.0;
    std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double cf = confidences[i];
        if (cf < 0.0 || cf > 1.0) throw InvalidConfig("ece: confidence outside [0, 1]");
        std::size_t b = static_cast<std::size_t>(cf * static_cast<double>(bins));
        if (b == bins) b = bins - 1;
        conf_sum[b] += cf;
        acc_sum[b] += correct[i] ? 1.0 : 0.0;
        ++count[b];
    }
    double e = 0.0;
    const double total = static_cast<double>(confidences.size());
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double nb = static_cast<double>(count[b]);
        e += nb / total * std::abs(acc_sum[b] / nb - conf_sum[b] / nb);
    }
    return e;
}

/// Rank-based Mann-Whitney statistic: probability that a random OOD score
/// exceeds a random test score, ties counted one half.
inline double auroc(const Vector& scores_ood, const Vector& scores_test) {
    if (scores_ood.empty() || scores_test.empty()) throw InvalidConfig("auroc: empty score list");
    struct Tagged {
        double s;
        bool ood;
    };
    std::vector<Tagged> all;
    all.reserve(scores_ood.size() + scores_test.size());
    for (double s : scores_ood) all.push_back({s, true});
    for (double s : scores_test) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.s < b.s; });

    double rank_sum_ood = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].s == all[i].s) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (all[k].ood) rank_sum_ood += midrank;
        i = j;
    }
    const double n_o = static_cast<double>(scores_ood.size());
    const double n_t = static_cast<double>(scores_test.size());
    const double u = rank_sum_ood - n_o * (n_o + 1.0) / 2.0;
    return u / (n_o * n_t);
}

inline Vector sample_mean(const Matrix& x) {
    Vector m(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) m[j] += x(i, j);
    for (double& v : m) v /= static_cast<double>(x.rows());
    return m;
}

inline Matrix sample_covariance(const Matrix& x) {
    const Vector m = sample_mean(x);
    Matrix c(x.cols(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t a = 0; a < x.cols(); ++a)
            for (std::size_t b = 0; b < x.cols(); ++b)
                c(a, b) += (x(i, a) - m[a]) * (x(i, b) - m[b]);
    const double denom = static_cast<double>(std::max<std::size_t>(x.rows() - 1, 1));
    for (double& v : c.storage()) v /= denom;
    return c;
}

struct SampleQuality {
    double mean_error = 0.0;
    double cov_error = 0.0;
    std::optional<double> mmd2;  // unbiased estimate; slightly negative is noise
};

/// Moment errors of a particle set against target moments, plus an unbiased
/// squared MMD against an oracle sample when one is provided.
inline SampleQuality sample_quality(const Matrix& particles, const Vector& target_mean,
                                    const Matrix& target_cov, const Matrix* oracle = nullptr) {
    if (particles.rows() < 2) throw InvalidConfig("sample_quality: needs at least two particles");
    SampleQuality q;
    const Vector m = sample_mean(particles);
    double me = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = m[i] - target_mean[i];
        me += d * d;
    }
    q.mean_error = std::sqrt(me);
    const Matrix c = sample_covariance(particles);
    double ce = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double d = c.storage()[i] - target_cov.storage()[i];
        ce += d * d;
    }
    q.cov_error = std::sqrt(ce);

    if (oracle) {
        const Matrix& a = particles;
        const Matrix& b = *oracle;
        Matrix joint(a.rows() + b.rows(), a.cols());
        for (std::size_t i = 0; i < a.rows(); ++i) joint.set_row(i, a.row(i));
        for (std::size_t i = 0; i < b.rows(); ++i) joint.set_row(a.rows() + i, b.row(i));
        RbfKernel k;
        const double h = resolve_bandwidth(k, joint);
        auto kern_mean_offdiag = [&](const Matrix& x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.rows(); ++i)
                for (std::size_t j = 0; j < x.rows(); ++j)
                    if (i != j) s += rbf_eval(h, x.row(i), x.row(j));
            return s / (static_cast<double>(x.rows()) * static_cast<double>(x.rows() - 1));
        };
        double cross = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < b.rows(); ++j) cross += rbf_eval(h, a.row(i), b.row(j));
        cross /= static_cast<double>(a.rows()) * static_cast<double>(b.rows());
        q.mmd2 = kern_mean_offdiag(a) + kern_mean_offdiag(b) - 2.0 * cross;
    }
    return q;
}

/// Everything the experiment harness reports for supervised tasks.
struct EvalReport {
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double nll = std::numeric_limits<double>::quiet_NaN();
    double ece_value = std::numeric_limits<double>::quiet_NaN();
    double auroc_entropy = std::numeric_limits<double>::quiet_NaN();
    double auroc_disagreement = std::numeric_limits<double>::quiet_NaN();
    double entropy_ratio = std::numeric_limits<double>::quiet_NaN();
    double disagreement_ratio = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace pvi
