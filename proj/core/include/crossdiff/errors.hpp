#pragma once

#include <stdexcept>
#include <string>

namespace crossdiff {

/// Invalid or inconsistent run configuration (bad schema, infeasible masses, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally broken mesh (indices out of range, degenerate elements, ...).
struct MeshError : std::runtime_error {
    explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

/// Linear solver failed to reach the requested residual.
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

/// A runtime invariant (feasibility, bound, finiteness) was violated.
struct FeasibilityError : std::runtime_error {
    explicit FeasibilityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace crossdiff
