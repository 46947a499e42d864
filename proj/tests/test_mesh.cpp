#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"

#include "crossdiff/mesh.hpp"

using namespace crossdiff;

namespace {

double total_area(const Mesh& mesh) {
    double area = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) area += element_measure(mesh, e);
    return area;
}

}  // namespace

TEST_SUITE("mesh") {

TEST_CASE("interval mesh layout") {
    const Mesh mesh = make_interval_mesh(-1.0, 1.0, 11);
    validate_mesh(mesh);
    CHECK(mesh.dim == 1);
    CHECK(mesh.num_nodes() == 11);
    CHECK(mesh.num_elements() == 10);
    CHECK(mesh.x(0) == doctest::Approx(-1.0));
    CHECK(mesh.x(10) == doctest::Approx(1.0));
    CHECK(mesh.on_boundary[0] == 1);
    CHECK(mesh.on_boundary[10] == 1);
    CHECK(mesh.on_boundary[5] == 0);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        CHECK(element_measure(mesh, e) == doctest::Approx(0.2).epsilon(1e-12));
    }
}

TEST_CASE("disc mesh area converges to the disc") {
    const double exact = M_PI * 4.0;
    const Mesh coarse = make_disc_mesh(2.0, 0.1);
    const Mesh fine = make_disc_mesh(2.0, 0.05);
    validate_mesh(coarse);
    validate_mesh(fine);
    CHECK(fine.num_nodes() > coarse.num_nodes());
    const double err_coarse = std::abs(total_area(coarse) - exact);
    const double err_fine = std::abs(total_area(fine) - exact);
    CHECK(err_coarse < 0.02 * exact);
    CHECK(err_fine < err_coarse);
}

TEST_CASE("validate_mesh rejects corruption") {
    Mesh mesh = make_interval_mesh(0.0, 1.0, 5);
    Mesh bad_index = mesh;
    bad_index.elements[0] = 17;
    CHECK_THROWS_AS(validate_mesh(bad_index), MeshError);

    Mesh bad_flag = mesh;
    bad_flag.on_boundary[2] = 1;
    CHECK_THROWS_AS(validate_mesh(bad_flag), MeshError);

    Mesh flipped = mesh;
    std::swap(flipped.elements[0], flipped.elements[1]);
    CHECK_THROWS_AS(validate_mesh(flipped), MeshError);
}

TEST_CASE("mesh text round-trip") {
    for (const Mesh& mesh : {make_interval_mesh(-1.0, 1.0, 17), make_disc_mesh(1.5, 0.4)}) {
        std::stringstream io;
        save_mesh(mesh, io);
        const Mesh back = load_mesh(io);
        REQUIRE(back.dim == mesh.dim);
        REQUIRE(back.num_nodes() == mesh.num_nodes());
        REQUIRE(back.num_elements() == mesh.num_elements());
        CHECK(back.elements == mesh.elements);
        CHECK(back.on_boundary == mesh.on_boundary);
        for (std::size_t i = 0; i < mesh.coords.size(); ++i) {
            CHECK(back.coords[i] == mesh.coords[i]);
        }
    }
}

TEST_CASE("solve_sparse handles SPD and unsymmetric systems") {
    const int n = 60;
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    SparseSystem spd;
    spd.symmetric = true;
    std::vector<Eigen::Triplet<double>> entries;
    for (int i = 0; i < n; ++i) {
        entries.emplace_back(i, i, 3.0);
        if (i + 1 < n) {
            entries.emplace_back(i, i + 1, -1.0);
            entries.emplace_back(i + 1, i, -1.0);
        }
    }
    spd.matrix.resize(n, n);
    spd.matrix.setFromTriplets(entries.begin(), entries.end());

    Field rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = unit(rng);
    const SolveReport cg = solve_sparse(spd, rhs);
    CHECK(cg.converged);
    CHECK((spd.matrix * cg.x - rhs).norm() / rhs.norm() <= 1e-9);

    SparseSystem lu;
    lu.symmetric = false;
    entries.clear();
    for (int i = 0; i < n; ++i) {
        entries.emplace_back(i, i, 2.0 + 0.01 * i);
        if (i + 1 < n) entries.emplace_back(i, i + 1, -1.0);
    }
    lu.matrix.resize(n, n);
    lu.matrix.setFromTriplets(entries.begin(), entries.end());
    const SolveReport direct = solve_sparse(lu, rhs);
    CHECK(direct.converged);
    CHECK((lu.matrix * direct.x - rhs).norm() / rhs.norm() <= 1e-12);

    SparseSystem singular;
    singular.symmetric = false;
    singular.matrix.resize(3, 3);
    CHECK_THROWS_AS(solve_sparse(singular, Field::Ones(3)), SolveError);
}

TEST_CASE("stiffness row sums vanish to roundoff") {
    // per element the diagonal cancels the off-diagonal entries exactly; the
    // assembled row sums only pick up re-association error from merging
    // element contributions, well below the 1/h entry scale
    for (const Mesh& mesh : {make_interval_mesh(-1.0, 1.0, 101), make_disc_mesh(2.0, 0.2)}) {
        const P1Space space(mesh);
        const Field ones = Field::Ones(space.size());
        CHECK((space.stiffness().matrix * ones).lpNorm<Eigen::Infinity>() <= 1e-13);

        Field w(space.size());
        for (int i = 0; i < space.size(); ++i) w[i] = 0.1 + 0.01 * (i % 7);
        const SparseSystem weighted = assemble_weighted_stiffness(mesh, w);
        CHECK((weighted.matrix * ones).lpNorm<Eigen::Infinity>() <= 1e-13);
    }
}

TEST_CASE("mass, lumped mass and integration agree with the measure") {
    for (const Mesh& mesh : {make_interval_mesh(-1.0, 1.0, 51), make_disc_mesh(1.0, 0.2)}) {
        const P1Space space(mesh);
        const Field ones = Field::Ones(space.size());
        CHECK(space.lumped_mass().sum() == doctest::Approx(space.measure()).epsilon(1e-12));
        CHECK(space.integrate(ones) == doctest::Approx(space.measure()).epsilon(1e-12));
        CHECK(ones.dot(space.mass().matrix * ones) == doctest::Approx(space.measure()).epsilon(1e-12));

        std::mt19937 rng(3);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        Field f(space.size());
        for (int i = 0; i < space.size(); ++i) f[i] = unit(rng);
        CHECK(space.norm(f) == doctest::Approx(std::sqrt(space.inner(f, f))).epsilon(1e-12));
        CHECK(space.inner(f, ones) == doctest::Approx(space.integrate(f)).epsilon(1e-12));
    }
}

TEST_CASE("nodal gradient reproduces linear fields") {
    const Mesh line = make_interval_mesh(-1.0, 1.0, 41);
    Field u(line.num_nodes());
    for (int i = 0; i < line.num_nodes(); ++i) u[i] = 2.0 * line.x(i) + 1.0;
    const auto grad1 = nodal_gradient(line, u);
    for (int i = 0; i < line.num_nodes(); ++i) {
        CHECK(grad1[0][i] == doctest::Approx(2.0).epsilon(1e-12));
    }

    const Mesh disc = make_disc_mesh(1.0, 0.25);
    Field v(disc.num_nodes());
    for (int i = 0; i < disc.num_nodes(); ++i) v[i] = 2.0 * disc.x(i) + 3.0 * disc.y(i);
    const auto grad2 = nodal_gradient(disc, v);
    for (int i = 0; i < disc.num_nodes(); ++i) {
        CHECK(grad2[0][i] == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(grad2[1][i] == doctest::Approx(3.0).epsilon(1e-10));
    }
}

}  // TEST_SUITE("mesh")
