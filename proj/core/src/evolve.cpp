#include "crossdiff/evolve.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "crossdiff/csv.hpp"
#include "crossdiff/errors.hpp"

namespace crossdiff {

double smoothed_heaviside(double s, double gamma) {
    return (0.5 * M_PI + std::atan(s / gamma)) / M_PI;
}

Field heaviside_bump(const Mesh& mesh, double amplitude, double halfwidth, double gamma,
                     double center) {
    Field f(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const double dist = mesh.dim == 1 ? std::abs(mesh.x(i) - center)
                                          : std::hypot(mesh.x(i) - center, mesh.y(i));
        f[i] = amplitude * smoothed_heaviside(halfwidth - dist, gamma);
    }
    return f;
}

ImexSystem assemble_imex(const P1Space& space, const Convolution& conv, const ModelParams& params,
                         const Field& V, const EvolveState& state, double tau) {
    const int n = space.size();
    const Mesh& mesh = space.mesh();
    const Field& r = state.r;
    const Field& b = state.b;
    const Field ones = Field::Ones(n);

    ImexSystem sys;
    sys.rhs.resize(2 * n);
    sys.rhs.head(n) = space.mass().matrix * r;
    sys.rhs.tail(n) = space.mass().matrix * b;

    if (params.use_interaction || params.use_potential) {
        Field phi_r = V, phi_b = V;
        if (params.use_interaction) {
            const double g = params.interaction_gradient_factor();
            const Field ur = conv.apply(r);
            const Field ub = conv.apply(b);
            phi_r += g * (params.c11 * ur - ub);
            phi_b += g * (params.c22 * ub - ur);
        }
        const Field gap = (ones - r - b).cwiseMax(0.0);
        const SparseSystem Tr = assemble_weighted_stiffness(mesh, r.cwiseProduct(gap));
        const SparseSystem Tb = assemble_weighted_stiffness(mesh, b.cwiseProduct(gap));
        sys.rhs.head(n) -= tau * (Tr.matrix * phi_r);
        sys.rhs.tail(n) -= tau * params.D * (Tb.matrix * phi_b);
    }

    std::vector<Eigen::Triplet<double>> trip;
    auto add_block = [&trip](const SpMat& block, int row0, int col0, double scale) {
        for (int k = 0; k < block.outerSize(); ++k) {
            for (SpMat::InnerIterator it(block, k); it; ++it) {
                trip.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                                  scale * it.value());
            }
        }
    };

    add_block(space.mass().matrix, 0, 0, 1.0);
    add_block(space.mass().matrix, n, n, 1.0);
    if (params.eps > 0) {
        const SparseSystem Arr = assemble_weighted_stiffness(mesh, ones - b);
        const SparseSystem Arb = assemble_weighted_stiffness(mesh, r);
        const SparseSystem Abr = assemble_weighted_stiffness(mesh, b);
        const SparseSystem Abb = assemble_weighted_stiffness(mesh, ones - r);
        add_block(Arr.matrix, 0, 0, tau * params.eps);
        add_block(Arb.matrix, 0, n, tau * params.eps);
        add_block(Abr.matrix, n, 0, tau * params.eps * params.D);
        add_block(Abb.matrix, n, n, tau * params.eps * params.D);
    }

    sys.matrix.matrix.resize(2 * n, 2 * n);
    sys.matrix.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.matrix.symmetric = false;
    return sys;
}

namespace {

struct ImexStepper {
    Eigen::SparseLU<SpMat> lu;
    bool analyzed = false;

    StepReport advance(const P1Space& space, const Convolution& conv, const ModelParams& params,
                       const Field& V, EvolveState& state, const EvolveOptions& opts) {
        ImexSystem sys = assemble_imex(space, conv, params, V, state, opts.tau);
        if (!analyzed) {
            lu.analyzePattern(sys.matrix.matrix);
            analyzed = true;
        }
        lu.factorize(sys.matrix.matrix);
        if (lu.info() != Eigen::Success) {
            throw SolveError("time step factorization failed at t=" + format_double(state.t));
        }
        const Field sol = lu.solve(sys.rhs);

        const int n = space.size();
        Field new_r = sol.head(n);
        Field new_b = sol.tail(n);

        StepReport report;
        report.change = space.norm(new_r - state.r) + space.norm(new_b - state.b);
        report.mass_drift_r = std::abs(space.integrate(new_r) - space.integrate(state.r));
        report.mass_drift_b = std::abs(space.integrate(new_b) - space.integrate(state.b));
        double negative = 0.0, cap = 0.0;
        for (int i = 0; i < n; ++i) {
            negative = std::max({negative, -new_r[i], -new_b[i]});
            cap = std::max(cap, new_r[i] + new_b[i] - 1.0);
        }
        report.max_violation = std::max(negative, cap);
        const double abort_at = opts.clamp_negatives ? cap : report.max_violation;
        if (abort_at > opts.violation_tol) {
            throw FeasibilityError("evolution left the admissible box at t=" +
                                   format_double(state.t + opts.tau) +
                                   " by " + format_double(abort_at));
        }
        if (opts.clamp_negatives && negative > 0.0) {
            // clamping undershoots to zero adds mass, so scale each species
            // back to the mass the linear step produced
            for (Field* f : {&new_r, &new_b}) {
                const double target = space.integrate(*f);
                int clamped = 0;
                for (int i = 0; i < n; ++i) {
                    if ((*f)[i] < 0.0) {
                        (*f)[i] = 0.0;
                        ++clamped;
                    }
                }
                if (clamped > 0) {
                    const double mass = space.integrate(*f);
                    if (mass > 0.0) *f *= target / mass;
                    report.clamped_nodes += clamped;
                }
            }
        }

        state.r = std::move(new_r);
        state.b = std::move(new_b);
        state.t += opts.tau;
        return report;
    }
};

EvolveTraceRow trace_row(const P1Space& space, const Convolution& conv, const ModelParams& params,
                         const Field& V, const EvolveState& state, double violation) {
    EvolveTraceRow row;
    row.t = state.t;
    const EnergyBreakdown parts = total_energy(space, conv, params, V, state.r, state.b);
    row.F_E = parts.entropic;
    row.F_0 = parts.interaction;
    row.F_C = parts.confinement;
    row.total = parts.total;
    row.mass_r = space.integrate(state.r);
    row.mass_b = space.integrate(state.b);
    row.max_violation = violation;
    return row;
}

}  // namespace

StepReport evolve_step(const P1Space& space, const Convolution& conv, const ModelParams& params,
                       const Field& V, EvolveState& state, const EvolveOptions& opts) {
    ImexStepper stepper;
    return stepper.advance(space, conv, params, V, state, opts);
}

EvolveResult evolve_run(const P1Space& space, const Convolution& conv, const ModelParams& params,
                        const Field& V, EvolveState initial, const EvolveOptions& opts) {
    if (!(opts.tau > 0)) throw ConfigError("time step tau must be positive");
    if (initial.r.size() != space.size() || initial.b.size() != space.size()) {
        throw ConfigError("initial state size does not match the mesh");
    }

    EvolveResult result;
    result.state = std::move(initial);
    EvolveState& state = result.state;

    std::vector<double> snaps = opts.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;

    ImexStepper stepper;
    result.trace.push_back(trace_row(space, conv, params, V, state, 0.0));

    const long max_steps = static_cast<long>(std::ceil((opts.t_end - state.t) / opts.tau - 1e-9));
    for (long step = 1; step <= max_steps; ++step) {
        const StepReport report = stepper.advance(space, conv, params, V, state, opts);
        result.steps = static_cast<int>(step);
        result.clamped_total += report.clamped_nodes;

        while (next_snap < snaps.size() && state.t >= snaps[next_snap] - 0.5 * opts.tau) {
            result.snapshots.push_back(state);
            ++next_snap;
        }
        const bool stationary = report.change < opts.stop_tol;
        if (step % opts.trace_every == 0 || stationary || step == max_steps) {
            result.trace.push_back(trace_row(space, conv, params, V, state, report.max_violation));
        }
        if (stationary) {
            result.stationary = true;
            break;
        }
    }
    return result;
}

}  // namespace crossdiff
