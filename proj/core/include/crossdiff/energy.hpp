#pragma once

#include <optional>
#include <utility>

#include "crossdiff/kernel.hpp"
#include "crossdiff/mesh.hpp"

namespace crossdiff {

/// Which form of the interaction gradient (and transport flux) to use.
/// `exact` differentiates the interaction energy, which carries a factor 2
/// under a symmetric kernel, and keeps the confining potential with the
/// interaction block of the ADMM splitting. `paper` is the compatibility
/// variant: factor 1, potential handled by the box block, so the scheme
/// weighs the interaction at half strength relative to entropy and
/// confinement.
enum class InteractionGradient { exact, paper };

/// Model constants shared by the energies, the minimizer and the scheme.
struct ModelParams {
    double eps = 0.0;        ///< entropic regularization strength
    double D = 1.0;          ///< mobility ratio of the second species
    double c11 = -1.0;       ///< self-interaction of r (negative = attractive)
    double c22 = -1.0;       ///< self-interaction of b
    double mass_r = 1.0 / 3.0;
    double mass_b = 1.0 / 3.0;
    KernelSpec kernel;
    std::optional<ConvolutionMode> conv_mode;  ///< defaulted per dimension when unset
    bool use_potential = false;   ///< confining potential V on or off
    bool use_interaction = true;  ///< disable to run a pure diffusion limit
    InteractionGradient gradient = InteractionGradient::exact;

    ConvolutionMode convolution_mode(int dim) const {
        return conv_mode ? *conv_mode : default_convolution_mode(dim);
    }
    double interaction_gradient_factor() const {
        return gradient == InteractionGradient::exact ? 2.0 : 1.0;
    }
};

/// Confining potential, quadratic growth outside |x| = 1/2 and flat inside.
/// In 2D the same profile is applied radially.
double potential_value(double x);
double potential_value(double x, double y);

/// Nodal potential field: V where enabled, zero otherwise.
Field potential_field(const Mesh& mesh, const ModelParams& params);

struct EnergyBreakdown {
    double entropic = 0.0;     ///< F_E, unscaled by eps
    double interaction = 0.0;  ///< F_0
    double confinement = 0.0;  ///< F_C
    double total = 0.0;        ///< eps * F_E + F_0 + F_C
};

/// Mixing entropy integral, nodal quadrature, with 0 log 0 = 0.
double entropy_energy(const P1Space& space, const Field& r, const Field& b);

/// Interaction energy c11 r(K*r) - r(K*b) - b(K*r) + c22 b(K*b).
double interaction_energy(const P1Space& space, const Convolution& conv, const ModelParams& params,
                          const Field& r, const Field& b);

/// Confinement energy of (r + b) against the nodal potential field.
double confinement_energy(const P1Space& space, const Field& V, const Field& r, const Field& b);

EnergyBreakdown total_energy(const P1Space& space, const Convolution& conv, const ModelParams& params,
                             const Field& V, const Field& r, const Field& b);

/// Entropy variables u = eps (log r - log(1 - r - b)) + V and the analogue
/// for b. Requires strictly interior fields.
std::pair<Field, Field> entropy_variables(const Field& r, const Field& b, double eps, const Field& V);

/// Inverse of entropy_variables, evaluated in softmax form with a max shift
/// so that large arguments cannot overflow.
std::pair<Field, Field> invert_entropy_variables(const Field& u, const Field& v, double eps, const Field& V);

/// Multi-well potential W(r, b) behind the nonlocal Cahn-Hilliard form of the
/// energy; nonnegative on the unit triangle for moderate attraction, with
/// equality exactly at the three pure corners when eps = 0.
double multiwell(double r, double b, const ModelParams& params);

/// Residual fields of the first-variation identity at a minimizer:
/// eps (log r - log(1 - rho)) + g (c11 K*r - K*b) + V with the configured
/// gradient factor g, and the analogue for b. Constant a.e. at minimizers.
std::pair<Field, Field> first_variation_residual(const P1Space& space, const Convolution& conv,
                                                 const ModelParams& params, const Field& V,
                                                 const Field& r, const Field& b);

/// Mass-weighted standard deviation of a residual field, weighting node i by
/// lumped_mass_i * density_i. Invariant under constant shifts of res.
double mass_weighted_deviation(const P1Space& space, const Field& res, const Field& density);

}  // namespace crossdiff
