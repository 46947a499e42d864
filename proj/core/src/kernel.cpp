#include "crossdiff/kernel.hpp"

#include <cmath>
#include <numbers>

#include "crossdiff/errors.hpp"

namespace crossdiff {

ConvolutionMode default_convolution_mode(int dim) {
    return dim == 1 ? ConvolutionMode::free_quadrature : ConvolutionMode::dirichlet_poisson;
}

double coulomb_eval(double radius, int dim) {
    const double r = std::abs(radius);
    switch (dim) {
        case 1:
            return -0.5 * r;
        case 2:
            return -std::log(r) / (2.0 * std::numbers::pi);
        default: {
            // unit ball volume omega_N = pi^(N/2) / Gamma(N/2 + 1); the
            // denominator N (N - 2) omega_N equals (N - 2) times the unit
            // sphere area
            const double omega = std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
            return 1.0 / (dim * (dim - 2) * omega * std::pow(r, dim - 2));
        }
    }
}

double gaussian_eval(double radius, double sigma) {
    const double s = radius / sigma;
    return std::exp(-0.5 * s * s);
}

double kernel_integral(const KernelSpec& spec, int dim) {
    if (spec.kind != KernelKind::gaussian) {
        throw ConfigError("kernel integral is only defined for the gaussian kernel");
    }
    if (!(spec.sigma > 0)) throw ConfigError("gaussian kernel requires sigma > 0");
    return std::pow(std::sqrt(2.0 * std::numbers::pi) * spec.sigma, dim);
}

Convolution::Convolution(const P1Space& space, KernelSpec spec, ConvolutionMode mode)
    : space_(&space), spec_(spec), mode_(mode) {
    const Mesh& mesh = space.mesh();
    const int n = mesh.num_nodes();

    if (mode_ == ConvolutionMode::free_quadrature) {
        if (mesh.dim != 1) throw ConfigError("free_quadrature convolution is available in 1D only");
        if (spec_.kind == KernelKind::gaussian && !(spec_.sigma > 0)) {
            throw ConfigError("gaussian kernel requires sigma > 0");
        }
        dense_.resize(n, n);
        const Field& m = space.lumped_mass();
        for (int i = 0; i < n; ++i) {
            const double xi = mesh.x(i);
            for (int j = 0; j < n; ++j) {
                const double r = std::abs(xi - mesh.x(j));
                const double k = spec_.kind == KernelKind::coulomb ? coulomb_eval(r, 1)
                                                                   : gaussian_eval(r, spec_.sigma);
                dense_(i, j) = k * m[j];
            }
        }
        return;
    }

    if (spec_.kind != KernelKind::coulomb) {
        throw ConfigError("dirichlet_poisson convolution requires the coulomb kernel");
    }
    interior_.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        if (!mesh.on_boundary[i]) {
            interior_[i] = static_cast<int>(interior_nodes_.size());
            interior_nodes_.push_back(i);
        }
    }
    const int ni = static_cast<int>(interior_nodes_.size());
    if (ni == 0) throw ConfigError("dirichlet_poisson convolution needs interior nodes");

    std::vector<Eigen::Triplet<double>> entries;
    const SpMat& A = space.stiffness().matrix;
    for (int col = 0; col < A.outerSize(); ++col) {
        for (SpMat::InnerIterator it(A, col); it; ++it) {
            const int ri = interior_[static_cast<int>(it.row())];
            const int ci = interior_[col];
            if (ri >= 0 && ci >= 0) entries.emplace_back(ri, ci, it.value());
        }
    }
    SpMat interior_stiffness(ni, ni);
    interior_stiffness.setFromTriplets(entries.begin(), entries.end());
    dirichlet_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
    dirichlet_->compute(interior_stiffness);
    if (dirichlet_->info() != Eigen::Success) {
        throw SolveError("Dirichlet stiffness factorization failed");
    }
}

Field Convolution::apply(const Field& f) const {
    const int n = space_->size();
    if (f.size() != n) throw MeshError("field size does not match node count");
    if (mode_ == ConvolutionMode::free_quadrature) return dense_ * f;

    const Field& m = space_->lumped_mass();
    Eigen::VectorXd rhs(interior_nodes_.size());
    for (std::size_t k = 0; k < interior_nodes_.size(); ++k) {
        const int i = interior_nodes_[k];
        rhs[static_cast<Eigen::Index>(k)] = m[i] * f[i];
    }
    const Eigen::VectorXd u_int = dirichlet_->solve(rhs);
    Field u = Field::Zero(n);
    for (std::size_t k = 0; k < interior_nodes_.size(); ++k) {
        u[interior_nodes_[k]] = u_int[static_cast<Eigen::Index>(k)];
    }
    return u;
}

std::array<Field, 2> Convolution::apply_gradient(const Field& f) const {
    return nodal_gradient(space_->mesh(), apply(f));
}

Field convolve(const P1Space& space, const KernelSpec& spec, const Field& f, ConvolutionMode mode) {
    return Convolution(space, spec, mode).apply(f);
}

Field nonlocal_laplacian(const P1Space& space, const KernelSpec& spec, const Field& u) {
    if (spec.kind != KernelKind::gaussian) {
        throw ConfigError("nonlocal laplacian is defined for the gaussian kernel");
    }
    const double k = kernel_integral(spec, space.mesh().dim);
    const Convolution conv(space, spec, ConvolutionMode::free_quadrature);
    return conv.apply(u) / k - u;
}

}  // namespace crossdiff
