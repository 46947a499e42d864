#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <memory>

#include "crossdiff/mesh.hpp"

namespace crossdiff {

enum class KernelKind { coulomb, gaussian };

struct KernelSpec {
    KernelKind kind = KernelKind::coulomb;
    double sigma = 0.1;   ///< gaussian width, ignored for coulomb
};

/// How the convolution K*f is realized on a mesh.
enum class ConvolutionMode {
    free_quadrature,    ///< dense trapezoid quadrature of the kernel integral, 1D only
    dirichlet_poisson,  ///< P1 solve of -Laplace(u) = f with u = 0 on the boundary
};

/// free_quadrature in 1D, dirichlet_poisson in 2D.
ConvolutionMode default_convolution_mode(int dim);

/// Newtonian kernel: -|x|/2 in 1D, -log|x|/(2 pi) in 2D,
/// 1/(N (N-2) omega_N |x|^(N-2)) for N >= 3, with omega_N the unit ball volume.
double coulomb_eval(double radius, int dim);

/// Gaussian kernel value exp(-radius^2 / (2 sigma^2)).
double gaussian_eval(double radius, double sigma);

/// Total integral of the kernel over R^dim (closed form; gaussian only).
double kernel_integral(const KernelSpec& spec, int dim);

/// Realization of f -> K*f on a fixed discretization. Precomputes the dense
/// quadrature matrix or the Dirichlet factorization once and is then shared
/// read-only by energies, gradients and schemes.
class Convolution {
public:
    Convolution(const P1Space& space, KernelSpec spec, ConvolutionMode mode);

    const KernelSpec& spec() const { return spec_; }
    ConvolutionMode mode() const { return mode_; }
    const P1Space& space() const { return *space_; }

    /// K*f as a nodal field. In dirichlet_poisson mode the result vanishes
    /// exactly on boundary nodes.
    Field apply(const Field& f) const;

    /// Nodal gradient of K*f, one component per dimension.
    std::array<Field, 2> apply_gradient(const Field& f) const;

private:
    const P1Space* space_;
    KernelSpec spec_;
    ConvolutionMode mode_;
    Eigen::MatrixXd dense_;                                  // free_quadrature
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> dirichlet_;  // dirichlet_poisson
    std::vector<int> interior_;                              // node -> interior index, -1 on boundary
    std::vector<int> interior_nodes_;
};

/// One-shot convenience wrapper around Convolution::apply.
Field convolve(const P1Space& space, const KernelSpec& spec, const Field& f, ConvolutionMode mode);

/// Nonlocal Laplacian K*u/k - u for the gaussian kernel (1D free quadrature),
/// with k the kernel integral. Negative semidefinite against the lumped pairing.
Field nonlocal_laplacian(const P1Space& space, const KernelSpec& spec, const Field& u);

}  // namespace crossdiff
