#include "crossdiff/minimize.hpp"

#include <algorithm>
#include <cmath>

#include "crossdiff/csv.hpp"
#include "crossdiff/errors.hpp"

namespace crossdiff {

void project_mass(const P1Space& space, Field& r, Field& b, double mass_r, double mass_b) {
    const double measure = space.measure();
    r.array() -= (space.integrate(r) - mass_r) / measure;
    b.array() -= (space.integrate(b) - mass_b) / measure;
}

namespace {

inline void project_triangle_exact(double& r, double& b, double delta) {
    const double lo = delta, cap = 1.0 - delta;
    if (r >= lo && b >= lo && r + b <= cap) return;
    const double hi = cap - delta;  // largest coordinate on the simplex face

    // candidate on r = lo
    double c1r = lo, c1b = std::clamp(b, lo, hi);
    // candidate on b = lo
    double c2r = std::clamp(r, lo, hi), c2b = lo;
    // candidate on r + b = cap
    double c3r = std::clamp(0.5 * (cap + r - b), lo, hi), c3b = cap - c3r;

    const double d1 = (r - c1r) * (r - c1r) + (b - c1b) * (b - c1b);
    const double d2 = (r - c2r) * (r - c2r) + (b - c2b) * (b - c2b);
    const double d3 = (r - c3r) * (r - c3r) + (b - c3b) * (b - c3b);

    if (d1 <= d2 && d1 <= d3) {
        r = c1r;
        b = c1b;
    } else if (d2 <= d3) {
        r = c2r;
        b = c2b;
    } else {
        r = c3r;
        b = c3b;
    }
}

inline void project_triangle_paper(double& r, double& b, double delta) {
    const double rt = std::clamp(r, delta, 1.0 - delta);
    const double bt = std::clamp(b, delta, 1.0 - delta);
    r = 0.5 * ((1.0 - delta) - (bt - rt));
    b = 0.5 * ((1.0 - delta) + (bt - rt));
}

inline bool potential_in_box_block(const ModelParams& params) {
    return params.gradient == InteractionGradient::paper;
}

struct BlockObjective {
    const P1Space& space;
    const Convolution& conv;
    const ModelParams& params;
    const Field& V;
    const AdmmState& s;
    double mu;

    double box_block(const Field& r1, const Field& b1) const {
        double value = params.eps > 0 ? params.eps * entropy_energy(space, r1, b1) : 0.0;
        if (potential_in_box_block(params)) value += confinement_energy(space, V, r1, b1);
        value += space.inner(s.lam_r, r1) + space.inner(s.lam_b, b1);
        value += 0.5 * mu * (space.inner(r1 - s.r2, r1 - s.r2) + space.inner(b1 - s.b2, b1 - s.b2));
        return value;
    }

    double interaction_block(const Field& r2, const Field& b2) const {
        double value = 0.5 * params.interaction_gradient_factor() *
                       interaction_energy(space, conv, params, r2, b2);
        if (!potential_in_box_block(params)) value += confinement_energy(space, V, r2, b2);
        value -= space.inner(s.lam_r, r2) + space.inner(s.lam_b, b2);
        value += 0.5 * mu * (space.inner(s.r1 - r2, s.r1 - r2) + space.inner(s.b1 - b2, s.b1 - b2));
        return value;
    }
};

void assert_box_feasible(const AdmmState& s, const AdmmOptions& opts) {
    const double tol = 1e-12;
    const double floor = opts.box == BoxProjection::exact ? opts.delta : 0.5 * opts.delta;
    const double cap = 1.0 - opts.delta;
    for (Eigen::Index i = 0; i < s.r1.size(); ++i) {
        const bool ok = s.r1[i] >= floor - tol && s.b1[i] >= floor - tol && s.r1[i] + s.b1[i] <= cap + tol;
        if (!ok) {
            throw FeasibilityError("box block left the admissible set at node " + std::to_string(i) +
                                   ": r=" + format_double(s.r1[i]) + " b=" + format_double(s.b1[i]));
        }
    }
}

void assert_mass_feasible(const P1Space& space, const AdmmState& s, const ModelParams& params) {
    const double err_r = std::abs(space.integrate(s.r2) - params.mass_r);
    const double err_b = std::abs(space.integrate(s.b2) - params.mass_b);
    if (err_r > 1e-8 || err_b > 1e-8) {
        throw FeasibilityError("interaction block drifted off the mass constraints: " + format_double(err_r) +
                               ", " + format_double(err_b));
    }
}

}  // namespace

void project_box(Field& r, Field& b, double delta, BoxProjection variant) {
    if (!(delta >= 0.0) || delta > 1.0 / 3.0) {
        throw ConfigError("box floor delta must lie in [0, 1/3]");
    }
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (variant == BoxProjection::exact) {
            project_triangle_exact(r[i], b[i], delta);
        } else {
            project_triangle_paper(r[i], b[i], delta);
        }
    }
}

double lagrangian(const P1Space& space, const Convolution& conv, const ModelParams& params,
                  const Field& V, const AdmmState& s, double mu) {
    double value = params.eps * entropy_energy(space, s.r1, s.b1);
    value += 0.5 * params.interaction_gradient_factor() *
             interaction_energy(space, conv, params, s.r2, s.b2);
    if (potential_in_box_block(params)) {
        value += confinement_energy(space, V, s.r1, s.b1);
    } else {
        value += confinement_energy(space, V, s.r2, s.b2);
    }
    value += space.inner(s.lam_r, s.r1 - s.r2) + space.inner(s.lam_b, s.b1 - s.b2);
    value += 0.5 * mu * (space.inner(s.r1 - s.r2, s.r1 - s.r2) + space.inner(s.b1 - s.b2, s.b1 - s.b2));
    return value;
}

std::pair<Field, Field> grad_block1(const ModelParams& params, const Field& V, const AdmmState& s,
                                    double mu) {
    Field gr = s.lam_r + mu * (s.r1 - s.r2);
    Field gb = s.lam_b + mu * (s.b1 - s.b2);
    if (potential_in_box_block(params)) {
        gr += V;
        gb += V;
    }
    if (params.eps > 0) {
        for (Eigen::Index i = 0; i < s.r1.size(); ++i) {
            if (!(s.r1[i] > 0.0) || !(s.b1[i] > 0.0) || !(s.r1[i] + s.b1[i] < 1.0)) {
                throw FeasibilityError("box block gradient needs strictly interior fields (node " +
                                       std::to_string(i) + ")");
            }
            const double log_gap = std::log(1.0 - s.r1[i] - s.b1[i]);
            gr[i] += params.eps * (std::log(s.r1[i]) - log_gap);
            gb[i] += params.eps * (std::log(s.b1[i]) - log_gap);
        }
    }
    return {std::move(gr), std::move(gb)};
}

std::pair<Field, Field> grad_block2(const Convolution& conv, const ModelParams& params,
                                    const Field& V, const AdmmState& s, double mu) {
    Field gr = mu * (s.r2 - s.r1) - s.lam_r;
    Field gb = mu * (s.b2 - s.b1) - s.lam_b;
    if (!potential_in_box_block(params)) {
        gr += V;
        gb += V;
    }
    if (params.use_interaction) {
        const double g = params.interaction_gradient_factor();
        const Field ur = conv.apply(s.r2);
        const Field ub = conv.apply(s.b2);
        gr += g * (params.c11 * ur - ub);
        gb += g * (params.c22 * ub - ur);
    }
    return {std::move(gr), std::move(gb)};
}

int pg_solve(AdmmBlock block, const P1Space& space, const Convolution& conv,
             const ModelParams& params, const Field& V, AdmmState& s, const AdmmOptions& opts) {
    const bool box = block == AdmmBlock::box;
    Field& r = box ? s.r1 : s.r2;
    Field& b = box ? s.b1 : s.b2;
    const double base_step = box ? opts.step1 : opts.step2;
    const BlockObjective objective{space, conv, params, V, s, opts.mu};

    auto project = [&](Field& pr, Field& pb) {
        if (box) {
            project_box(pr, pb, opts.delta, opts.box);
        } else {
            project_mass(space, pr, pb, params.mass_r, params.mass_b);
        }
    };

    auto value = [&](const Field& vr, const Field& vb) {
        return box ? objective.box_block(vr, vb) : objective.interaction_block(vr, vb);
    };

    int it = 0;
    double f_cur = opts.armijo ? value(r, b) : 0.0;
    for (; it < opts.inner_iterations; ++it) {
        const auto [gr, gb] =
            box ? grad_block1(params, V, s, opts.mu) : grad_block2(conv, params, V, s, opts.mu);

        double step = base_step;
        Field trial_r = r - step * gr;
        Field trial_b = b - step * gb;
        project(trial_r, trial_b);

        double move2 = space.inner(trial_r - r, trial_r - r) + space.inner(trial_b - b, trial_b - b);
        if (std::sqrt(move2) / step <= opts.inner_tol) break;

        if (opts.armijo) {
            double f1 = value(trial_r, trial_b);
            for (int half = 0; half < 40; ++half) {
                if (f1 <= f_cur - 1e-4 / step * move2 || step < 1e-14) break;
                step *= 0.5;
                trial_r = r - step * gr;
                trial_b = b - step * gb;
                project(trial_r, trial_b);
                move2 = space.inner(trial_r - r, trial_r - r) + space.inner(trial_b - b, trial_b - b);
                f1 = value(trial_r, trial_b);
            }
            f_cur = f1;
        }
        r = std::move(trial_r);
        b = std::move(trial_b);
    }
    return it;
}

void admm_step(const P1Space& space, const Convolution& conv, const ModelParams& params,
               const Field& V, AdmmState& s, const AdmmOptions& opts) {
    pg_solve(AdmmBlock::box, space, conv, params, V, s, opts);
    if (opts.assert_feasible) assert_box_feasible(s, opts);
    pg_solve(AdmmBlock::interaction, space, conv, params, V, s, opts);
    if (opts.assert_feasible) assert_mass_feasible(space, s, params);
    s.lam_r += opts.mu * (s.r1 - s.r2);
    s.lam_b += opts.mu * (s.b1 - s.b2);
}

AdmmResult admm_run(const P1Space& space, const Convolution& conv, const ModelParams& params,
                    const Field& V, AdmmState initial, const AdmmOptions& opts) {
    if (params.eps > 0 && !(opts.delta > 0)) {
        throw ConfigError("entropic runs (eps > 0) need a positive box floor delta");
    }
    AdmmResult result;
    result.state = std::move(initial);
    AdmmState& s = result.state;

    auto record = [&](int iter) {
        AdmmTraceRow row;
        row.iter = iter;
        const EnergyBreakdown parts = total_energy(space, conv, params, V, s.r1, s.b1);
        row.F_E = parts.entropic;
        row.F_0 = parts.interaction;
        row.F_C = parts.confinement;
        row.total = parts.total;
        row.primal_res_r = space.norm(s.r1 - s.r2);
        row.primal_res_b = space.norm(s.b1 - s.b2);
        result.trace.push_back(row);
        return std::max(row.primal_res_r, row.primal_res_b);
    };

    record(0);
    for (int outer = 1; outer <= opts.max_outer; ++outer) {
        admm_step(space, conv, params, V, s, opts);
        result.iterations = outer;
        if (record(outer) <= opts.tol) {
            result.converged = true;
            break;
        }
    }
    project_mass(space, s.r1, s.b1, params.mass_r, params.mass_b);
    return result;
}

Field random_uniform_field(int n, std::uint64_t seed, double lo, double hi) {
    Field f(n);
    std::uint64_t state = seed;
    for (int i = 0; i < n; ++i) {
        // splitmix64, stable across platforms
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        z ^= z >> 31;
        const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
        f[i] = lo + (hi - lo) * u;
    }
    return f;
}

AdmmState initial_admm_state(const P1Space& space, const ModelParams& params, const AdmmOptions& opts,
                             std::uint64_t seed, const Field& tilt_r, const Field& tilt_b) {
    const int n = space.size();
    AdmmState s;
    const Field raw = random_uniform_field(2 * n, seed);
    s.r2 = raw.head(n);
    s.b2 = raw.tail(n);
    if (tilt_r.size() == n) s.r2.array() *= tilt_r.array();
    if (tilt_b.size() == n) s.b2.array() *= tilt_b.array();
    project_mass(space, s.r2, s.b2, params.mass_r, params.mass_b);
    s.r1 = s.r2;
    s.b1 = s.b2;
    project_box(s.r1, s.b1, opts.delta, opts.box);
    s.lam_r = Field::Zero(n);
    s.lam_b = Field::Zero(n);
    return s;
}

AdmmState initial_admm_state(const P1Space& space, const ModelParams& params, const AdmmOptions& opts,
                             std::uint64_t seed) {
    return initial_admm_state(space, params, opts, seed, Field(), Field());
}

}  // namespace crossdiff
