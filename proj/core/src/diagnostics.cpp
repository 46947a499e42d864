#include "crossdiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "crossdiff/errors.hpp"

namespace crossdiff {

double overlap(const P1Space& space, const Field& r, const Field& b) {
    return space.inner(r, b);
}

double entropy_bound_constant(double c11, double c22, double l2_r, double l2_b) {
    const double ar = -c11 * l2_r + l2_b;
    const double ab = -c22 * l2_b + l2_r;
    return 0.25 * (ar * ar + ab * ab);
}

DissipationReport entropy_dissipation_report(const std::vector<EvolveTraceRow>& trace,
                                             const ModelParams& params) {
    DissipationReport report;
    if (trace.empty()) return report;

    const double l2_r = std::sqrt(std::max(0.0, trace.front().mass_r));
    const double l2_b = std::sqrt(std::max(0.0, trace.front().mass_b));
    report.C = entropy_bound_constant(params.c11, params.c22, l2_r, l2_b);

    const double e0 = params.eps * trace.front().F_E + trace.front().F_C;
    report.t.reserve(trace.size());
    report.margin.reserve(trace.size());
    report.min_margin = std::numeric_limits<double>::infinity();
    for (const EvolveTraceRow& row : trace) {
        const double e = params.eps * row.F_E + row.F_C;
        const double margin = e0 + report.C * row.t - e;
        report.t.push_back(row.t);
        report.margin.push_back(margin);
        report.min_margin = std::min(report.min_margin, margin);
    }
    report.all_nonnegative = report.min_margin >= 0.0;
    return report;
}

namespace {

Phase classify(double r, double b, double theta) {
    if (r >= 1.0 - theta && b <= theta) return Phase::red;
    if (b >= 1.0 - theta && r <= theta) return Phase::blue;
    if (r + b <= theta) return Phase::vacuum;
    return Phase::mixed;
}

bool is_full(Phase p) { return p == Phase::red || p == Phase::blue; }

std::set<std::pair<int, int>> mesh_edges(const Mesh& mesh) {
    std::set<std::pair<int, int>> edges;
    const int per = mesh.dim + 1;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const int* el = mesh.element(e);
        for (int a = 0; a < per; ++a) {
            for (int c = a + 1; c < per; ++c) {
                edges.insert({std::min(el[a], el[c]), std::max(el[a], el[c])});
            }
        }
    }
    return edges;
}

double node_distance(const Mesh& mesh, int p, int q) {
    if (mesh.dim == 1) return std::abs(mesh.x(p) - mesh.x(q));
    return std::hypot(mesh.x(p) - mesh.x(q), mesh.y(p) - mesh.y(q));
}

}  // namespace

StationarityReport stationarity_signs(const P1Space& space, const Convolution& conv,
                                      const ModelParams& params, const Field& r, const Field& b,
                                      const StationarityOptions& opts) {
    if (r.size() != space.size() || b.size() != space.size()) {
        throw ConfigError("field sizes do not match the mesh");
    }
    const Field ur = conv.apply(r);
    const Field ub = conv.apply(b);
    const Field S_r = params.c11 * ur - ub;
    const Field S_b = params.c22 * ub - ur;
    const double scale_r = std::max(1e-300, S_r.cwiseAbs().maxCoeff());
    const double scale_b = std::max(1e-300, S_b.cwiseAbs().maxCoeff());

    const Mesh& mesh = space.mesh();
    std::vector<Phase> phase(space.size());
    for (int i = 0; i < space.size(); ++i) phase[i] = classify(r[i], b[i], opts.phase_threshold);

    const auto edges = mesh_edges(mesh);

    // nodes whose edge neighborhood touches red, blue and vacuum at once
    std::vector<std::set<Phase>> seen(space.size());
    for (int i = 0; i < space.size(); ++i) seen[i].insert(phase[i]);
    for (const auto& [p, q] : edges) {
        seen[p].insert(phase[q]);
        seen[q].insert(phase[p]);
    }
    StationarityReport report;
    std::vector<std::uint8_t> is_triple(space.size(), 0);
    for (int i = 0; i < space.size(); ++i) {
        if (seen[i].count(Phase::red) && seen[i].count(Phase::blue) && seen[i].count(Phase::vacuum)) {
            is_triple[i] = 1;
            report.triple_nodes.push_back(i);
        }
    }

    auto field_drop = [&](const Field& S, int full, int other) {
        return (S[other] - S[full]) / node_distance(mesh, full, other);
    };

    for (const auto& [p, q] : edges) {
        if (phase[p] == phase[q]) continue;
        if (is_triple[p] || is_triple[q]) continue;
        if (!is_full(phase[p]) && !is_full(phase[q])) continue;

        InterfaceCheck check;
        if (is_full(phase[p])) {
            check.node_full = p;
            check.node_other = q;
        } else {
            check.node_full = q;
            check.node_other = p;
        }
        check.full = phase[check.node_full];
        check.other = phase[check.node_other];
        check.slope_r = field_drop(S_r, check.node_full, check.node_other);
        check.slope_b = field_drop(S_b, check.node_full, check.node_other);

        const double dist = node_distance(mesh, check.node_full, check.node_other);
        const double d_r = check.slope_r * dist;
        const double d_b = check.slope_b * dist;
        if (is_full(check.other)) {
            // both sides are saturated, so only the exchange r <-> b can move
            // mass; the conditions on S_r and S_b combine into one inequality
            // on their difference
            const double swap = check.full == Phase::red ? d_r - d_b : d_b - d_r;
            check.violation = swap < -opts.slack * std::max(scale_r, scale_b);
        } else if (check.full == Phase::red) {
            check.violation = d_r < -opts.slack * scale_r;
        } else {
            check.violation = d_b < -opts.slack * scale_b;
        }
        if (check.violation) ++report.violations;
        report.interfaces.push_back(check);
    }
    return report;
}

}  // namespace crossdiff
