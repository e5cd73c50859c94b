#pragma once

#include <stdexcept>
#include <string>

namespace pvi {

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error("shape mismatch: " + what) {}
};

struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error("not positive definite: " + what) {}
};

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error("no convergence: " + what) {}
};

struct NonFiniteValue : std::runtime_error {
    explicit NonFiniteValue(const std::string& what) : std::runtime_error("non-finite value: " + what) {}
};

struct DegenerateBandwidth : std::runtime_error {
    explicit DegenerateBandwidth(const std::string& what) : std::runtime_error("degenerate bandwidth: " + what) {}
};

struct RankDeficient : std::runtime_error {
    explicit RankDeficient(const std::string& what) : std::runtime_error("rank deficient: " + what) {}
};

struct NonFiniteUpdate : std::runtime_error {
    explicit NonFiniteUpdate(const std::string& what) : std::runtime_error("non-finite update: " + what) {}
};

struct InvalidConfig : std::runtime_error {
    explicit InvalidConfig(const std::string& what) : std::runtime_error("invalid config: " + what) {}
};

}  // namespace pvi
