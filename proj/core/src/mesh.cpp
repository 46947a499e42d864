#include "crossdiff/mesh.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "crossdiff/csv.hpp"

namespace crossdiff {

Mesh make_interval_mesh(double a, double b, int n) {
    if (!(b > a)) throw MeshError("interval mesh: require b > a");
    if (n < 2) throw MeshError("interval mesh: require at least 2 nodes");
    Mesh mesh;
    mesh.dim = 1;
    mesh.target_h = (b - a) / (n - 1);
    mesh.coords.resize(n);
    for (int i = 0; i < n; ++i) mesh.coords[i] = a + (b - a) * i / (n - 1);
    mesh.coords.back() = b;
    mesh.elements.reserve(2 * (n - 1));
    for (int i = 0; i + 1 < n; ++i) {
        mesh.elements.push_back(i);
        mesh.elements.push_back(i + 1);
    }
    mesh.on_boundary.assign(n, 0);
    mesh.on_boundary.front() = 1;
    mesh.on_boundary.back() = 1;
    return mesh;
}

Mesh make_disc_mesh(double radius, double target_h) {
    if (!(radius > 0) || !(target_h > 0)) throw MeshError("disc mesh: require positive radius and resolution");
    const int nr = std::max(1, static_cast<int>(std::ceil(radius / target_h)));
    const double dr = radius / nr;

    Mesh mesh;
    mesh.dim = 2;
    mesh.target_h = target_h;

    std::vector<int> ring_start(nr + 1, 0);
    mesh.coords.push_back(0.0);
    mesh.coords.push_back(0.0);
    for (int i = 1; i <= nr; ++i) {
        ring_start[i] = static_cast<int>(mesh.coords.size()) / 2;
        const int count = 6 * i;
        const double r = dr * i;
        for (int k = 0; k < count; ++k) {
            const double theta = 2.0 * std::numbers::pi * k / count;
            mesh.coords.push_back(r * std::cos(theta));
            mesh.coords.push_back(r * std::sin(theta));
        }
    }
    const int n_nodes = static_cast<int>(mesh.coords.size()) / 2;
    mesh.on_boundary.assign(n_nodes, 0);
    for (int k = ring_start[nr]; k < n_nodes; ++k) mesh.on_boundary[k] = 1;

    auto push_tri = [&mesh](int a, int b, int c) {
        const double ax = mesh.coords[2 * a], ay = mesh.coords[2 * a + 1];
        const double bx = mesh.coords[2 * b], by = mesh.coords[2 * b + 1];
        const double cx = mesh.coords[2 * c], cy = mesh.coords[2 * c + 1];
        const double twice_area = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
        mesh.elements.push_back(a);
        if (twice_area >= 0) {
            mesh.elements.push_back(b);
            mesh.elements.push_back(c);
        } else {
            mesh.elements.push_back(c);
            mesh.elements.push_back(b);
        }
    };

    for (int k = 0; k < 6; ++k) push_tri(0, ring_start[1] + k, ring_start[1] + (k + 1) % 6);

    for (int i = 2; i <= nr; ++i) {
        const int n_in = 6 * (i - 1), n_out = 6 * i;
        const int in0 = ring_start[i - 1], out0 = ring_start[i];
        int a = 0, b = 0;
        while (a < n_in || b < n_out) {
            const bool advance_inner =
                b == n_out ||
                (a < n_in && (a + 1.0) * n_out <= (b + 1.0) * n_in);
            if (advance_inner) {
                push_tri(in0 + a % n_in, out0 + b % n_out, in0 + (a + 1) % n_in);
                ++a;
            } else {
                push_tri(out0 + b % n_out, out0 + (b + 1) % n_out, in0 + a % n_in);
                ++b;
            }
        }
    }
    validate_mesh(mesh);
    return mesh;
}

double element_measure(const Mesh& mesh, int e) {
    const int* el = mesh.element(e);
    if (mesh.dim == 1) return mesh.x(el[1]) - mesh.x(el[0]);
    const double ax = mesh.x(el[0]), ay = mesh.y(el[0]);
    const double bx = mesh.x(el[1]), by = mesh.y(el[1]);
    const double cx = mesh.x(el[2]), cy = mesh.y(el[2]);
    return 0.5 * std::abs((bx - ax) * (cy - ay) - (cx - ax) * (by - ay));
}

void validate_mesh(const Mesh& mesh) {
    if (mesh.dim != 1 && mesh.dim != 2) throw MeshError("mesh dimension must be 1 or 2");
    const int n = mesh.num_nodes();
    if (static_cast<int>(mesh.on_boundary.size()) != n) throw MeshError("boundary flag count does not match node count");
    if (mesh.elements.size() % (mesh.dim + 1) != 0) throw MeshError("element array size is not a multiple of dim+1");
    for (int idx : mesh.elements) {
        if (idx < 0 || idx >= n) {
            throw MeshError("element references node " + std::to_string(idx) + " outside [0, " + std::to_string(n) + ")");
        }
    }
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (!(element_measure(mesh, e) > 0)) {
            throw MeshError("element " + std::to_string(e) + " has nonpositive measure");
        }
    }

    // Boundary nodes recomputed from facet incidence must match the flags.
    std::vector<std::uint8_t> derived(n, 0);
    if (mesh.dim == 1) {
        std::vector<int> count(n, 0);
        for (int idx : mesh.elements) ++count[idx];
        for (int i = 0; i < n; ++i) derived[i] = count[i] == 1;
    } else {
        std::map<std::pair<int, int>, int> edge_count;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const int* el = mesh.element(e);
            for (int k = 0; k < 3; ++k) {
                const int u = el[k], v = el[(k + 1) % 3];
                ++edge_count[{std::min(u, v), std::max(u, v)}];
            }
        }
        for (const auto& [edge, count] : edge_count) {
            if (count > 2) throw MeshError("edge shared by more than two triangles");
            if (count == 1) {
                derived[edge.first] = 1;
                derived[edge.second] = 1;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if ((derived[i] != 0) != (mesh.on_boundary[i] != 0)) {
            throw MeshError("boundary flag of node " + std::to_string(i) + " disagrees with connectivity");
        }
    }
}

void save_mesh(const Mesh& mesh, std::ostream& out) {
    out << mesh.dim << ' ' << mesh.num_nodes() << ' ' << mesh.num_elements() << '\n';
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        out << format_double(mesh.x(i));
        if (mesh.dim == 2) out << ' ' << format_double(mesh.y(i));
        out << ' ' << int(mesh.on_boundary[i]) << '\n';
    }
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const int* el = mesh.element(e);
        for (int k = 0; k <= mesh.dim; ++k) out << el[k] << " \n"[k == mesh.dim];
    }
}

void save_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MeshError("cannot open " + path + " for writing");
    save_mesh(mesh, out);
}

Mesh load_mesh(std::istream& in) {
    Mesh mesh;
    int n_nodes = 0, n_elems = 0;
    if (!(in >> mesh.dim >> n_nodes >> n_elems)) throw MeshError("mesh header is malformed");
    if (mesh.dim != 1 && mesh.dim != 2) throw MeshError("mesh dimension must be 1 or 2");
    if (n_nodes < 1 || n_elems < 1) throw MeshError("mesh must contain nodes and elements");
    mesh.coords.resize(static_cast<std::size_t>(n_nodes) * mesh.dim);
    mesh.on_boundary.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        int flag = 0;
        for (int d = 0; d < mesh.dim; ++d) {
            if (!(in >> mesh.coords[static_cast<std::size_t>(i) * mesh.dim + d])) {
                throw MeshError("node line " + std::to_string(i) + " is malformed");
            }
        }
        if (!(in >> flag)) throw MeshError("node line " + std::to_string(i) + " is missing the boundary flag");
        mesh.on_boundary[i] = static_cast<std::uint8_t>(flag != 0);
    }
    mesh.elements.resize(static_cast<std::size_t>(n_elems) * (mesh.dim + 1));
    for (std::size_t k = 0; k < mesh.elements.size(); ++k) {
        if (!(in >> mesh.elements[k])) throw MeshError("element list is truncated");
    }
    validate_mesh(mesh);
    return mesh;
}

Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open " + path);
    return load_mesh(in);
}

namespace {

using Triplet = Eigen::Triplet<double>;

void element_gradients_2d(const Mesh& mesh, int e, double grad[3][2], double& area) {
    const int* el = mesh.element(e);
    const double ax = mesh.x(el[0]), ay = mesh.y(el[0]);
    const double bx = mesh.x(el[1]), by = mesh.y(el[1]);
    const double cx = mesh.x(el[2]), cy = mesh.y(el[2]);
    const double det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    area = 0.5 * std::abs(det);
    grad[0][0] = (by - cy) / det;
    grad[0][1] = (cx - bx) / det;
    grad[1][0] = (cy - ay) / det;
    grad[1][1] = (ax - cx) / det;
    grad[2][0] = (ay - by) / det;
    grad[2][1] = (bx - ax) / det;
}

}  // namespace

std::pair<SparseSystem, SparseSystem> assemble_fem(const Mesh& mesh) {
    const int n = mesh.num_nodes();
    std::vector<Triplet> mass, stiff;
    mass.reserve(static_cast<std::size_t>(mesh.num_elements()) * 9);
    stiff.reserve(static_cast<std::size_t>(mesh.num_elements()) * 9);

    if (mesh.dim == 1) {
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const int* el = mesh.element(e);
            const double h = mesh.x(el[1]) - mesh.x(el[0]);
            const double m_off = h / 6.0, m_diag = h / 3.0, a = 1.0 / h;
            mass.emplace_back(el[0], el[0], m_diag);
            mass.emplace_back(el[1], el[1], m_diag);
            mass.emplace_back(el[0], el[1], m_off);
            mass.emplace_back(el[1], el[0], m_off);
            stiff.emplace_back(el[0], el[0], a);
            stiff.emplace_back(el[1], el[1], a);
            stiff.emplace_back(el[0], el[1], -a);
            stiff.emplace_back(el[1], el[0], -a);
        }
    } else {
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const int* el = mesh.element(e);
            double grad[3][2], area;
            element_gradients_2d(mesh, e, grad, area);
            double diag[3] = {0, 0, 0};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    mass.emplace_back(el[i], el[j], area / 12.0 * (i == j ? 2.0 : 1.0));
                    if (i == j) continue;
                    const double a = area * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                    stiff.emplace_back(el[i], el[j], a);
                    diag[i] -= a;  // exact zero row sums keep discrete fluxes conservative
                }
            }
            for (int i = 0; i < 3; ++i) stiff.emplace_back(el[i], el[i], diag[i]);
        }
    }

    SparseSystem M, A;
    M.matrix.resize(n, n);
    M.matrix.setFromTriplets(mass.begin(), mass.end());
    M.symmetric = true;
    A.matrix.resize(n, n);
    A.matrix.setFromTriplets(stiff.begin(), stiff.end());
    A.symmetric = true;
    return {std::move(M), std::move(A)};
}

SparseSystem assemble_weighted_stiffness(const Mesh& mesh, const Field& w) {
    if (w.size() != mesh.num_nodes()) throw MeshError("coefficient field size does not match node count");
    const int n = mesh.num_nodes();
    std::vector<Triplet> stiff;
    stiff.reserve(static_cast<std::size_t>(mesh.num_elements()) * 9);

    if (mesh.dim == 1) {
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const int* el = mesh.element(e);
            const double h = mesh.x(el[1]) - mesh.x(el[0]);
            const double a = 0.5 * (w[el[0]] + w[el[1]]) / h;
            stiff.emplace_back(el[0], el[0], a);
            stiff.emplace_back(el[1], el[1], a);
            stiff.emplace_back(el[0], el[1], -a);
            stiff.emplace_back(el[1], el[0], -a);
        }
    } else {
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const int* el = mesh.element(e);
            double grad[3][2], area;
            element_gradients_2d(mesh, e, grad, area);
            const double wbar = (w[el[0]] + w[el[1]] + w[el[2]]) / 3.0;
            double diag[3] = {0, 0, 0};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    if (i == j) continue;
                    const double a = wbar * area * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                    stiff.emplace_back(el[i], el[j], a);
                    diag[i] -= a;
                }
            }
            for (int i = 0; i < 3; ++i) stiff.emplace_back(el[i], el[i], diag[i]);
        }
    }
    SparseSystem A;
    A.matrix.resize(n, n);
    A.matrix.setFromTriplets(stiff.begin(), stiff.end());
    A.symmetric = true;
    return A;
}

SolveReport solve_sparse(const SparseSystem& system, const Field& rhs, const SolveOptions& opts) {
    if (rhs.size() != system.dim()) throw SolveError("right-hand side size does not match system dimension");
    const double rhs_norm = rhs.norm();
    const int max_it = opts.max_iterations > 0 ? opts.max_iterations : 10 * system.dim();
    SolveReport report;

    if (system.symmetric) {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(opts.tol);
        cg.setMaxIterations(max_it);
        cg.compute(system.matrix);
        report.x = cg.solve(rhs);
        report.iterations = static_cast<int>(cg.iterations());
    } else {
        Eigen::SparseLU<SpMat> lu;
        lu.analyzePattern(system.matrix);
        lu.factorize(system.matrix);
        if (lu.info() != Eigen::Success) {
            throw SolveError("sparse LU factorization failed");
        }
        report.x = lu.solve(rhs);
        report.iterations = 1;
    }

    const double abs_residual = (system.matrix * report.x - rhs).norm();
    report.residual = rhs_norm > 0 ? abs_residual / rhs_norm : abs_residual;
    report.converged = report.residual <= std::max(opts.tol, 1e-30) * 10;
    if (!report.converged) {
        throw SolveError("linear solve stalled at relative residual " + format_double(report.residual) +
                         " (target " + format_double(opts.tol) + ")");
    }
    return report;
}

P1Space::P1Space(Mesh mesh) : mesh_(std::move(mesh)) {
    validate_mesh(mesh_);
    auto [mass, stiffness] = assemble_fem(mesh_);
    mass_ = std::move(mass);
    stiffness_ = std::move(stiffness);
    lumped_ = mass_.matrix * Field::Ones(mesh_.num_nodes());
    measure_ = lumped_.sum();
}

double P1Space::integrate(const Field& f) const {
    if (f.size() != size()) throw MeshError("field size does not match node count");
    return lumped_.dot(f);
}

double P1Space::inner(const Field& f, const Field& g) const {
    return (lumped_.array() * f.array() * g.array()).sum();
}

double P1Space::norm(const Field& f) const {
    return std::sqrt(std::max(0.0, inner(f, f)));
}

std::array<Field, 2> nodal_gradient(const Mesh& mesh, const Field& u) {
    if (u.size() != mesh.num_nodes()) throw MeshError("field size does not match node count");
    const int n = mesh.num_nodes();
    Field gx = Field::Zero(n), gy = Field::Zero(n), weight = Field::Zero(n);

    if (mesh.dim == 1) {
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const int* el = mesh.element(e);
            const double h = mesh.x(el[1]) - mesh.x(el[0]);
            const double g = (u[el[1]] - u[el[0]]) / h;
            for (int k = 0; k < 2; ++k) {
                gx[el[k]] += h * g;
                weight[el[k]] += h;
            }
        }
    } else {
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const int* el = mesh.element(e);
            double grad[3][2], area;
            element_gradients_2d(mesh, e, grad, area);
            double ex = 0, ey = 0;
            for (int k = 0; k < 3; ++k) {
                ex += u[el[k]] * grad[k][0];
                ey += u[el[k]] * grad[k][1];
            }
            for (int k = 0; k < 3; ++k) {
                gx[el[k]] += area * ex;
                gy[el[k]] += area * ey;
                weight[el[k]] += area;
            }
        }
    }
    gx.array() /= weight.array();
    if (mesh.dim == 2) gy.array() /= weight.array();
    return {std::move(gx), std::move(gy)};
}

}  // namespace crossdiff
