#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "pvi/errors.hpp"
#include "pvi/matrix.hpp"
#include "pvi/rng.hpp"

namespace pvi {

enum class TaskKind { regression, classification };

/// Synthetic supervised task with disjoint train/test splits, an optional
/// out-of-distribution split, and a dense evaluation grid for predictive
/// curves and entropy maps.
struct Dataset {
    TaskKind kind = TaskKind::regression;
    Matrix x_train, y_train;  // labels: one real column, or class index column
    Matrix x_test, y_test;
    Matrix x_ood;  // empty when the task has no OOD split
    Matrix x_grid;
};

/// Smooth ground-truth curve for the 1D regression task.
inline double regression_truth(double x) { return std::sin(3.0 * x); }

/// Two input clusters flanking the interval (gap_lo, gap_hi), each of width
/// `cluster_width`, with Gaussian label noise. The test split is drawn from
/// the same clusters; the grid extends past both clusters.
inline Dataset gen_regression_1d(std::uint64_t seed, std::size_t n_per_cluster, double gap_lo,
                                 double gap_hi, double noise, double cluster_width = 0.7,
                                 std::size_t grid_points = 121) {
    if (!(gap_lo < gap_hi)) throw InvalidConfig("gen_regression_1d: empty gap interval");
    if (n_per_cluster == 0) throw InvalidConfig("gen_regression_1d: n_per_cluster must be positive");
    if (!(cluster_width > 0.0)) throw InvalidConfig("gen_regression_1d: cluster_width must be positive");
    if (noise < 0.0) throw InvalidConfig("gen_regression_1d: negative noise");

    RngState rng{seed, 0};
    Dataset ds;
    ds.kind = TaskKind::regression;

    const double lows[2] = {gap_lo - cluster_width, gap_hi};
    auto fill_split = [&](Matrix& x, Matrix& y, std::size_t per_cluster) {
        x = Matrix(2 * per_cluster, 1);
        y = Matrix(2 * per_cluster, 1);
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t i = 0; i < per_cluster; ++i) {
                const std::size_t r = c * per_cluster + i;
                const double xi = lows[c] + cluster_width * rng_uniform(rng);
                x(r, 0) = xi;
                y(r, 0) = regression_truth(xi) + noise * rng_standard_normal(rng);
            }
    };
    fill_split(ds.x_train, ds.y_train, n_per_cluster);
    fill_split(ds.x_test, ds.y_test, std::max<std::size_t>(n_per_cluster / 2, 1));

    const double grid_lo = gap_lo - cluster_width - 0.5;
    const double grid_hi = gap_hi + cluster_width + 0.5;
    ds.x_grid = Matrix(grid_points, 1);
    for (std::size_t i = 0; i < grid_points; ++i)
        ds.x_grid(i, 0) = grid_lo + (grid_hi - grid_lo) * static_cast<double>(i) /
                                        static_cast<double>(grid_points - 1);
    return ds;
}

/// Two-class 2D blobs with a far-field OOD ring at three times the maximum
/// training radius and a square grid covering the ring.
inline Dataset gen_classification_2d(std::uint64_t seed, std::size_t n_per_class,
                                     const std::string& layout = "two_blobs",
                                     std::size_t grid_side = 41) {
    if (n_per_class < 2) throw InvalidConfig("gen_classification_2d: need n >= 2 per class");
    if (layout != "two_blobs") throw InvalidConfig("gen_classification_2d: unknown layout '" + layout + "'");

    RngState rng{seed, 0};
    Dataset ds;
    ds.kind = TaskKind::classification;
    const double cx[2] = {-1.0, 1.0};
    const double sigma = 0.35;

    ds.x_train = Matrix(2 * n_per_class, 2);
    ds.y_train = Matrix(2 * n_per_class, 1);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t r = c * n_per_class + i;
            ds.x_train(r, 0) = cx[c] + sigma * rng_standard_normal(rng);
            ds.x_train(r, 1) = sigma * rng_standard_normal(rng);
            ds.y_train(r, 0) = static_cast<double>(c);
        }

    const std::size_t n_test = std::max<std::size_t>(n_per_class / 2, 1);
    ds.x_test = Matrix(2 * n_test, 2);
    ds.y_test = Matrix(2 * n_test, 1);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < n_test; ++i) {
            const std::size_t r = c * n_test + i;
            ds.x_test(r, 0) = cx[c] + sigma * rng_standard_normal(rng);
            ds.x_test(r, 1) = sigma * rng_standard_normal(rng);
            ds.y_test(r, 0) = static_cast<double>(c);
        }

    double data_radius = 0.0;
    for (std::size_t i = 0; i < ds.x_train.rows(); ++i)
        data_radius = std::max(data_radius, norm(ds.x_train.row(i)));
    const double ring_radius = 3.0 * data_radius;

    const std::size_t n_ood = 2 * n_per_class;
    ds.x_ood = Matrix(n_ood, 2);
    for (std::size_t i = 0; i < n_ood; ++i) {
        const double ang = 2.0 * std::numbers::pi * rng_uniform(rng);
        ds.x_ood(i, 0) = ring_radius * std::cos(ang);
        ds.x_ood(i, 1) = ring_radius * std::sin(ang);
    }

    const double half = 1.2 * ring_radius;
    ds.x_grid = Matrix(grid_side * grid_side, 2);
    for (std::size_t i = 0; i < grid_side; ++i)
        for (std::size_t j = 0; j < grid_side; ++j) {
            const std::size_t r = i * grid_side + j;
            ds.x_grid(r, 0) = -half + 2.0 * half * static_cast<double>(j) / static_cast<double>(grid_side - 1);
            ds.x_grid(r, 1) = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(grid_side - 1);
        }
    return ds;
}

}  // namespace pvi
