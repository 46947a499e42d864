#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "crossdiff/energy.hpp"

namespace crossdiff {

enum class BoxProjection {
    exact,  ///< nodewise Euclidean projection onto {r >= delta, b >= delta, r + b <= 1 - delta}
    paper,  ///< clamp-and-rebalance map that lands on the face r + b = 1 - delta
};

struct AdmmOptions {
    double mu = 1.0;            ///< augmented Lagrangian penalty
    double delta = 1e-6;        ///< box floor
    double tol = 1e-8;          ///< stop when both primal residuals fall below
    int max_outer = 2000;
    int inner_iterations = 200; ///< projected-gradient budget per block per outer step
    double inner_tol = 1e-10;   ///< projected-gradient stationarity target
    double step1 = 0.01;        ///< gradient step, box block
    double step2 = 0.01;        ///< gradient step, interaction block
    bool armijo = false;        ///< halving backtracking with slope factor 1e-4
    BoxProjection box = BoxProjection::exact;
    bool assert_feasible = true;  ///< throw FeasibilityError on in-loop violations
};

/// Splitting state: (r1, b1) lives in the box set, (r2, b2) carries the mass
/// constraints, (lam_r, lam_b) are the consensus multipliers.
struct AdmmState {
    Field r1, b1, r2, b2, lam_r, lam_b;
};

struct AdmmTraceRow {
    int iter = 0;
    double F_E = 0, F_0 = 0, F_C = 0, total = 0;
    double primal_res_r = 0, primal_res_b = 0;
};

struct AdmmResult {
    AdmmState state;
    std::vector<AdmmTraceRow> trace;
    bool converged = false;
    int iterations = 0;
};

/// Shift both fields by constants so the masses are met exactly. The metric
/// projection onto the mass constraint set.
void project_mass(const P1Space& space, Field& r, Field& b, double mass_r, double mass_b);

/// Nodewise projection of (r, b) onto the delta box, in the selected variant.
void project_box(Field& r, Field& b, double delta, BoxProjection variant);

/// Augmented Lagrangian value for the current state.
double lagrangian(const P1Space& space, const Convolution& conv, const ModelParams& params,
                  const Field& V, const AdmmState& s, double mu);

/// Gradient of the Lagrangian in the box block:
/// g_r = eps (log r1 - log(1 - r1 - b1)) + lam_r + mu (r1 - r2), plus V in
/// the paper variant, which carries the confining potential here.
std::pair<Field, Field> grad_block1(const ModelParams& params, const Field& V, const AdmmState& s,
                                    double mu);

/// Gradient of the Lagrangian in the interaction block:
/// g_r = g (c11 K*r2 - K*b2) - lam_r + mu (r2 - r1) with the configured
/// interaction factor g, plus V in the exact variant.
std::pair<Field, Field> grad_block2(const Convolution& conv, const ModelParams& params,
                                    const Field& V, const AdmmState& s, double mu);

enum class AdmmBlock { box, interaction };

/// Projected gradient descent on one block, holding the other fixed.
/// Never increases the Lagrangian when armijo is enabled. Returns the
/// iterations actually used (early exit on stationarity within inner_tol).
int pg_solve(AdmmBlock block, const P1Space& space, const Convolution& conv,
             const ModelParams& params, const Field& V, AdmmState& s, const AdmmOptions& opts);

/// One outer iteration: box block, interaction block, multiplier update
/// lam += mu (x1 - x2).
void admm_step(const P1Space& space, const Convolution& conv, const ModelParams& params,
               const Field& V, AdmmState& s, const AdmmOptions& opts);

/// Full constrained minimization from the given initial state. Trace rows
/// report energies of the box-block fields and the primal residuals.
AdmmResult admm_run(const P1Space& space, const Convolution& conv, const ModelParams& params,
                    const Field& V, AdmmState initial, const AdmmOptions& opts);

/// Nodal uniform draws in [0, 0.49] from a seeded generator, reproducible
/// across platforms.
Field random_uniform_field(int n, std::uint64_t seed, double lo = 0.0, double hi = 0.49);

/// Feasible starting state: random fields (optionally modulated by a linear
/// tilt a x + b on one species), mass-projected into both blocks.
AdmmState initial_admm_state(const P1Space& space, const ModelParams& params, const AdmmOptions& opts,
                             std::uint64_t seed, const Field& tilt_r, const Field& tilt_b);
AdmmState initial_admm_state(const P1Space& space, const ModelParams& params, const AdmmOptions& opts,
                             std::uint64_t seed);

}  // namespace crossdiff
