#pragma once

#include <functional>
#include <vector>

#include "crossdiff/energy.hpp"

namespace crossdiff {

struct EvolveOptions {
    double tau = 5e-4;
    double t_end = 1.0;
    double stop_tol = 1e-12;      ///< stationarity: |r change| + |b change| in L2 per step
    double violation_tol = 1e-8;  ///< box violation before abort; with clamping only r+b<=1 applies
    bool clamp_negatives = false; ///< clamp undershoots to zero, mass restored by rescaling, reported
    int trace_every = 1;
    std::vector<double> snapshot_times;
};

struct EvolveState {
    double t = 0.0;
    Field r, b;
};

struct EvolveTraceRow {
    double t = 0;
    double F_E = 0, F_0 = 0, F_C = 0, total = 0;
    double mass_r = 0, mass_b = 0;
    double max_violation = 0;
};

struct StepReport {
    double mass_drift_r = 0;   ///< |new mass - old mass|
    double mass_drift_b = 0;
    double max_violation = 0;  ///< max(-r, -b, r + b - 1) after the step
    double change = 0;         ///< L2 step difference |dr| + |db|
    int clamped_nodes = 0;
};

struct EvolveResult {
    EvolveState state;
    std::vector<EvolveTraceRow> trace;
    std::vector<EvolveState> snapshots;
    bool stationary = false;
    int steps = 0;
    long clamped_total = 0;
};

/// Smoothed step profile H_gamma(s) = (pi/2 + atan(s / gamma)) / pi.
double smoothed_heaviside(double s, double gamma);

/// Nodal bump amplitude * H_gamma(halfwidth - |x - center|); radial in 2D.
Field heaviside_bump(const Mesh& mesh, double amplitude, double halfwidth, double gamma,
                     double center = 0.0);

struct ImexSystem {
    SparseSystem matrix;  ///< coupled 2N system, r unknowns first
    Field rhs;
};

/// One implicit-explicit step operator: implicit degenerate diffusion with
/// lagged coefficients, explicit transport along the interaction and
/// potential gradients, natural no-flux boundary.
ImexSystem assemble_imex(const P1Space& space, const Convolution& conv, const ModelParams& params,
                         const Field& V, const EvolveState& state, double tau);

/// Advance the state by one step of size tau.
StepReport evolve_step(const P1Space& space, const Convolution& conv, const ModelParams& params,
                       const Field& V, EvolveState& state, const EvolveOptions& opts);

/// March until t_end or stationarity. Box violations beyond violation_tol
/// abort with FeasibilityError unless clamping is enabled.
EvolveResult evolve_run(const P1Space& space, const Convolution& conv, const ModelParams& params,
                        const Field& V, EvolveState initial, const EvolveOptions& opts);

}  // namespace crossdiff
