#include "crossdiff/energy.hpp"

#include <cmath>

#include "crossdiff/errors.hpp"

namespace crossdiff {

namespace {

inline double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

void require_strict_interior(const Field& r, const Field& b, const char* where) {
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0) || !(b[i] > 0.0) || !(r[i] + b[i] < 1.0)) {
            throw FeasibilityError(std::string(where) + ": fields must satisfy r, b > 0 and r + b < 1 (node " +
                                   std::to_string(i) + ")");
        }
    }
}

}  // namespace

double potential_value(double x) {
    if (x > 0.5) return (x - 0.5) * (x - 0.5);
    if (x < -0.5) return (x + 0.5) * (x + 0.5);
    return 0.0;
}

double potential_value(double x, double y) {
    return potential_value(std::hypot(x, y));
}

Field potential_field(const Mesh& mesh, const ModelParams& params) {
    Field V = Field::Zero(mesh.num_nodes());
    if (!params.use_potential) return V;
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        V[i] = mesh.dim == 1 ? potential_value(mesh.x(i)) : potential_value(mesh.x(i), mesh.y(i));
    }
    return V;
}

double entropy_energy(const P1Space& space, const Field& r, const Field& b) {
    const Field& m = space.lumped_mass();
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        total += m[i] * (xlogx(r[i]) + xlogx(b[i]) + xlogx(1.0 - r[i] - b[i]));
    }
    return total;
}

double interaction_energy(const P1Space& space, const Convolution& conv, const ModelParams& params,
                          const Field& r, const Field& b) {
    if (!params.use_interaction) return 0.0;
    const Field ur = conv.apply(r);
    const Field ub = conv.apply(b);
    const Field integrand = params.c11 * r.array() * ur.array() - r.array() * ub.array() -
                            b.array() * ur.array() + params.c22 * b.array() * ub.array();
    return space.integrate(integrand);
}

double confinement_energy(const P1Space& space, const Field& V, const Field& r, const Field& b) {
    return space.integrate(((r + b).array() * V.array()).matrix());
}

EnergyBreakdown total_energy(const P1Space& space, const Convolution& conv, const ModelParams& params,
                             const Field& V, const Field& r, const Field& b) {
    EnergyBreakdown parts;
    parts.entropic = entropy_energy(space, r, b);
    parts.interaction = interaction_energy(space, conv, params, r, b);
    parts.confinement = confinement_energy(space, V, r, b);
    parts.total = params.eps * parts.entropic + parts.interaction + parts.confinement;
    return parts;
}

std::pair<Field, Field> entropy_variables(const Field& r, const Field& b, double eps, const Field& V) {
    require_strict_interior(r, b, "entropy_variables");
    const Field log_gap = (1.0 - r.array() - b.array()).log().matrix();
    Field u = eps * (r.array().log().matrix() - log_gap) + V;
    Field v = eps * (b.array().log().matrix() - log_gap) + V;
    return {std::move(u), std::move(v)};
}

std::pair<Field, Field> invert_entropy_variables(const Field& u, const Field& v, double eps, const Field& V) {
    if (!(eps > 0)) throw FeasibilityError("invert_entropy_variables requires eps > 0");
    const int n = static_cast<int>(u.size());
    Field r(n), b(n);
    for (int i = 0; i < n; ++i) {
        const double a = (u[i] - V[i]) / eps;
        const double c = (v[i] - V[i]) / eps;
        const double shift = std::max({0.0, a, c});
        const double e0 = std::exp(-shift);
        const double ea = std::exp(a - shift);
        const double ec = std::exp(c - shift);
        const double den = e0 + ea + ec;
        r[i] = ea / den;
        b[i] = ec / den;
    }
    return {std::move(r), std::move(b)};
}

double multiwell(double r, double b, const ModelParams& params) {
    if (!(r >= 0.0) || !(b >= 0.0) || !(r + b <= 1.0)) {
        throw FeasibilityError("multiwell requires r, b >= 0 and r + b <= 1");
    }
    const double entropy = xlogx(r) + xlogx(b) + xlogx(1.0 - r - b);
    return params.eps * entropy + 0.5 * params.c11 * r * r - r * b + 0.5 * params.c22 * b * b -
           0.5 * params.c11 * r - 0.5 * params.c22 * b;
}

std::pair<Field, Field> first_variation_residual(const P1Space& space, const Convolution& conv,
                                                 const ModelParams& params, const Field& V,
                                                 const Field& r, const Field& b) {
    const int n = space.size();
    Field res_r = Field::Zero(n), res_b = Field::Zero(n);
    if (params.eps > 0) {
        require_strict_interior(r, b, "first_variation_residual");
        const Field log_gap = (1.0 - r.array() - b.array()).log().matrix();
        res_r = params.eps * (r.array().log().matrix() - log_gap);
        res_b = params.eps * (b.array().log().matrix() - log_gap);
    }
    if (params.use_interaction) {
        const double g = params.interaction_gradient_factor();
        const Field ur = conv.apply(r);
        const Field ub = conv.apply(b);
        res_r += g * (params.c11 * ur - ub);
        res_b += g * (params.c22 * ub - ur);
    }
    res_r += V;
    res_b += V;
    return {std::move(res_r), std::move(res_b)};
}

double mass_weighted_deviation(const P1Space& space, const Field& res, const Field& density) {
    const Field w = (space.lumped_mass().array() * density.array()).matrix();
    const double total = w.sum();
    if (!(total > 0)) return 0.0;
    const double mean = w.dot(res) / total;
    const double var = (w.array() * (res.array() - mean).square()).sum() / total;
    return std::sqrt(std::max(0.0, var));
}

}  // namespace crossdiff
