#pragma once

#include <vector>

#include "crossdiff/energy.hpp"
#include "crossdiff/evolve.hpp"

namespace crossdiff {

/// Mixing overlap integral of r b over the domain.
double overlap(const P1Space& space, const Field& r, const Field& b);

/// Dissipation bound constant
/// C = ((-c11 |r| + |b|)^2 + (-c22 |b| + |r|)^2) / 4 with |.| the L2 norms.
double entropy_bound_constant(double c11, double c22, double l2_r, double l2_b);

struct DissipationReport {
    double C = 0.0;                ///< bound constant used for the margin
    std::vector<double> t;
    std::vector<double> margin;    ///< (eps F_E + F_C)(0) + C t - (eps F_E + F_C)(t)
    double min_margin = 0.0;
    bool all_nonnegative = false;
};

/// Margin of the entropy dissipation inequality along an evolution trace.
/// The L2 norms entering C are bounded by sqrt(mass) since the densities stay
/// below one.
DissipationReport entropy_dissipation_report(const std::vector<EvolveTraceRow>& trace,
                                             const ModelParams& params);

enum class Phase { mixed = 0, red, blue, vacuum };

struct InterfaceCheck {
    int node_full = -1;     ///< node on the full-phase side
    int node_other = -1;
    Phase full = Phase::mixed;
    Phase other = Phase::mixed;
    double slope_r = 0.0;   ///< change of S_r per unit length, full -> other
    double slope_b = 0.0;
    bool violation = false;
};

struct StationarityReport {
    std::vector<InterfaceCheck> interfaces;
    std::vector<int> triple_nodes;  ///< adjacent to all three phases, not judged
    int violations = 0;
};

struct StationarityOptions {
    double phase_threshold = 0.1;  ///< |value - target| below this classifies a phase
    double slack = 1e-9;           ///< relative tolerance on the sign tests
};

/// Sign test of the interaction fields S_r = c11 K*r - K*b and
/// S_b = c22 K*b - K*r across phase interfaces: leaving a full phase, the
/// pulling field of that phase must not decrease. Where red and blue touch,
/// only the exchange of the two species remains admissible and the test
/// applies to the difference S_r - S_b.
StationarityReport stationarity_signs(const P1Space& space, const Convolution& conv,
                                      const ModelParams& params, const Field& r, const Field& b,
                                      const StationarityOptions& opts = {});

}  // namespace crossdiff
