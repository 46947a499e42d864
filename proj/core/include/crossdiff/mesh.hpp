#pragma once

#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crossdiff/errors.hpp"

namespace crossdiff {

/// Nodal coefficients of a P1 finite element function.
using Field = Eigen::VectorXd;

using SpMat = Eigen::SparseMatrix<double>;

/// Conforming simplicial mesh in 1D (intervals) or 2D (triangles).
struct Mesh {
    int dim = 1;
    std::vector<double> coords;      ///< interleaved node coordinates, dim per node
    std::vector<int> elements;       ///< dim+1 node indices per element
    std::vector<std::uint8_t> on_boundary;
    double target_h = 0.0;           ///< requested resolution, 0 if not applicable

    int num_nodes() const { return static_cast<int>(coords.size()) / dim; }
    int num_elements() const { return static_cast<int>(elements.size()) / (dim + 1); }
    double x(int node) const { return coords[static_cast<std::size_t>(node) * dim]; }
    double y(int node) const { return coords[static_cast<std::size_t>(node) * dim + 1]; }
    const int* element(int e) const { return elements.data() + static_cast<std::size_t>(e) * (dim + 1); }
};

/// Uniform mesh of [a, b] with n nodes.
Mesh make_interval_mesh(double a, double b, int n);

/// Concentric-ring triangulation of the disc of given radius, deterministic
/// node ordering (center first, then rings by increasing radius and angle).
/// All triangle diameters stay below 2 * target_h.
Mesh make_disc_mesh(double radius, double target_h);

/// Throws MeshError with a diagnostic if the mesh is structurally broken
/// (indices out of range, nonpositive element measures, boundary flags that
/// disagree with element connectivity).
void validate_mesh(const Mesh& mesh);

/// Plain text mesh format: header "dim n_nodes n_elems", one node line
/// "x [y] boundary_flag" per node, one element line of 0-based indices.
void save_mesh(const Mesh& mesh, std::ostream& out);
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(std::istream& in);
Mesh load_mesh(const std::string& path);

/// Element measure (length or area) of element e.
double element_measure(const Mesh& mesh, int e);

/// Assembled sparse operator together with its structural symmetry flag.
struct SparseSystem {
    SpMat matrix;
    bool symmetric = false;

    int dim() const { return static_cast<int>(matrix.rows()); }
};

struct SolveOptions {
    double tol = 1e-10;       ///< relative residual target
    int max_iterations = 0;   ///< 0 selects 10 * dimension
};

struct SolveReport {
    Field x;
    double residual = 0.0;    ///< relative residual actually achieved
    int iterations = 0;
    bool converged = false;
};

/// Conjugate gradients for symmetric systems, sparse LU otherwise.
/// Throws SolveError (carrying the achieved residual) on non-convergence.
SolveReport solve_sparse(const SparseSystem& system, const Field& rhs, const SolveOptions& opts = {});

/// Consistent P1 mass matrix and stiffness matrix (zero-row-sum) for the mesh.
std::pair<SparseSystem, SparseSystem> assemble_fem(const Mesh& mesh);

/// Stiffness matrix with a nodal coefficient field, integrated with the
/// element-midpoint value of the coefficient.
SparseSystem assemble_weighted_stiffness(const Mesh& mesh, const Field& w);

/// P1 discretization bundle: assembled operators plus lumped masses.
class P1Space {
public:
    explicit P1Space(Mesh mesh);

    const Mesh& mesh() const { return mesh_; }
    int size() const { return mesh_.num_nodes(); }
    const SparseSystem& mass() const { return mass_; }
    const SparseSystem& stiffness() const { return stiffness_; }
    const Field& lumped_mass() const { return lumped_; }
    double measure() const { return measure_; }

    /// Integral of the P1 interpolant, equal to ones^T M f.
    double integrate(const Field& f) const;
    /// Mass-lumped L2 inner product.
    double inner(const Field& f, const Field& g) const;
    /// Mass-lumped L2 norm.
    double norm(const Field& f) const;

private:
    Mesh mesh_;
    SparseSystem mass_;
    SparseSystem stiffness_;
    Field lumped_;
    double measure_ = 0.0;
};

/// Piecewise-constant element gradients of a nodal field, averaged back to
/// nodes with element-measure weights. Returns one component per dimension.
std::array<Field, 2> nodal_gradient(const Mesh& mesh, const Field& u);

}  // namespace crossdiff
