#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/matrix.hpp"

namespace pvi {

enum class BandwidthMode { fixed, median, median_over_log_n };

/// Squared-exponential kernel k(x, y) = exp(-||x - y||^2 / h), with h in
/// squared-distance units. The lengthscale is either fixed or resolved from
/// the current point set by a median heuristic.
struct RbfKernel {
    double lengthscale = 1.0;
    BandwidthMode mode = BandwidthMode::median;
    double degenerate_floor = 1e-6;  // 0 disables the floor
};

inline double rbf_eval(double h, std::span<const double> x, std::span<const double> y) {
    return std::exp(-squared_distance(x, y) / h);
}

/// Gradient of k(x, y) with respect to x: -(2/h) (x - y) k(x, y).
inline Vector rbf_grad_first_arg(double h, std::span<const double> x, std::span<const double> y) {
    const double k = rbf_eval(h, x, y);
    Vector g(x.size());
    const double c = -2.0 / h * k;
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = c * (x[i] - y[i]);
    return g;
}

inline double resolve_bandwidth(const RbfKernel& kernel, const Matrix& x) {
    if (x.rows() == 0) throw InvalidConfig("resolve_bandwidth: empty particle set");
    if (kernel.mode == BandwidthMode::fixed) {
        if (!(kernel.lengthscale > 0.0)) throw InvalidConfig("fixed bandwidth must be positive");
        return kernel.lengthscale;
    }
    const std::size_t n = x.rows();
    std::vector<double> d2;
    d2.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d2.push_back(squared_distance(x.row(i), x.row(j)));

    double med = 0.0;
    if (!d2.empty()) {
        const std::size_t mid = d2.size() / 2;
        std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
        med = d2[mid];
    }
    double h = med;
    if (kernel.mode == BandwidthMode::median_over_log_n) h = med / std::log(static_cast<double>(n) + 1.0);
    if (h > 0.0) return h;
    if (kernel.degenerate_floor > 0.0) return kernel.degenerate_floor;
    throw DegenerateBandwidth("median heuristic found identical particles and no floor is configured");
}

inline Matrix gram_fixed(double h, const Matrix& x) {
    const std::size_t n = x.rows();
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = rbf_eval(h, x.row(i), x.row(j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

inline Matrix gram(const RbfKernel& kernel, const Matrix& x) {
    return gram_fixed(resolve_bandwidth(kernel, x), x);
}

}  // namespace pvi
