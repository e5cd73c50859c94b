#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "pvi/matrix.hpp"

namespace pvi {

/// Counter-based PRNG state. The i-th raw draw is a pure function of
/// (seed, pos + i), so independently split streams can be consumed in any
/// order without changing their values.
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t pos = 0;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

inline std::uint64_t rng_next_u64(RngState& s) {
    const std::uint64_t c = s.pos++;
    return detail::mix64(s.seed + (c + 1) * 0x9E3779B97F4A7C15ull);
}

/// Derive an independent stream; the parent state is not consumed.
inline RngState rng_split(const RngState& s, std::uint64_t key) {
    return RngState{detail::mix64(s.seed ^ detail::mix64(key + 0xD6E8FEB86659FD93ull)), 0};
}

/// Uniform draw in (0, 1].
inline double rng_uniform(RngState& s) {
    return static_cast<double>((rng_next_u64(s) >> 11) + 1) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::size_t rng_below(RngState& s, std::size_t n) {
    return static_cast<std::size_t>(rng_next_u64(s) % n);
}

/// One standard-normal draw via Box-Muller; always consumes two uniforms so
/// the k-th draw depends only on the stream position.
inline double rng_standard_normal(RngState& s) {
    const double u1 = rng_uniform(s);
    const double u2 = rng_uniform(s);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline Matrix rng_standard_normal(RngState& s, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.storage()) v = rng_standard_normal(s);
    return m;
}

inline Vector rng_standard_normal_vector(RngState& s, std::size_t n) {
    Vector v(n);
    for (double& x : v) x = rng_standard_normal(s);
    return v;
}

}  // namespace pvi
