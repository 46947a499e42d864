#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"

#include "crossdiff/minimize.hpp"

using namespace crossdiff;

namespace {

struct Fixture {
    P1Space space;
    Convolution conv;
    ModelParams params;
    Field V;

    explicit Fixture(int n, ModelParams p)
        : space(make_interval_mesh(-1.0, 1.0, n)),
          conv(space, p.kernel, ConvolutionMode::free_quadrature),
          params(p),
          V(potential_field(space.mesh(), p)) {}
};

ModelParams segregation_params() {
    ModelParams p;
    p.c11 = -1.0;
    p.c22 = -1.5;
    p.use_potential = true;
    return p;
}

AdmmState random_interior_state(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> interior(0.05, 0.35);
    std::uniform_real_distribution<double> lam(-0.5, 0.5);
    AdmmState s;
    s.r1.resize(n), s.b1.resize(n), s.r2.resize(n), s.b2.resize(n);
    s.lam_r.resize(n), s.lam_b.resize(n);
    for (int i = 0; i < n; ++i) {
        s.r1[i] = interior(rng);
        s.b1[i] = interior(rng);
        s.r2[i] = interior(rng);
        s.b2[i] = interior(rng);
        s.lam_r[i] = lam(rng);
        s.lam_b[i] = lam(rng);
    }
    return s;
}

Field random_direction(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Field d(n);
    for (int i = 0; i < n; ++i) d[i] = unit(rng);
    return d;
}

}  // namespace

TEST_SUITE("minimize") {

TEST_CASE("block gradients match directional finite differences") {
    ModelParams p = segregation_params();
    p.eps = 0.1;
    Fixture fx(11, p);
    const double mu = 1.3;
    const double t = 1e-6;
    std::mt19937 rng(31);

    for (auto mode : {InteractionGradient::exact, InteractionGradient::paper}) {
        fx.params.gradient = mode;
        for (int trial = 0; trial < 6; ++trial) {
            AdmmState s = random_interior_state(11, rng);
            const Field dr = random_direction(11, rng);
            const Field db = random_direction(11, rng);

            {
                const auto [gr, gb] = grad_block1(fx.params, fx.V, s, mu);
                const double ip = fx.space.inner(gr, dr) + fx.space.inner(gb, db);
                AdmmState plus = s, minus = s;
                plus.r1 += t * dr, plus.b1 += t * db;
                minus.r1 -= t * dr, minus.b1 -= t * db;
                const double fd = (lagrangian(fx.space, fx.conv, fx.params, fx.V, plus, mu) -
                                   lagrangian(fx.space, fx.conv, fx.params, fx.V, minus, mu)) /
                                  (2.0 * t);
                CHECK(std::abs(fd - ip) <= 1e-6 * std::max(1.0, std::abs(fd)));
            }
            {
                const auto [gr, gb] = grad_block2(fx.conv, fx.params, fx.V, s, mu);
                const double ip = fx.space.inner(gr, dr) + fx.space.inner(gb, db);
                AdmmState plus = s, minus = s;
                plus.r2 += t * dr, plus.b2 += t * db;
                minus.r2 -= t * dr, minus.b2 -= t * db;
                const double fd = (lagrangian(fx.space, fx.conv, fx.params, fx.V, plus, mu) -
                                   lagrangian(fx.space, fx.conv, fx.params, fx.V, minus, mu)) /
                                  (2.0 * t);
                CHECK(std::abs(fd - ip) <= 1e-6 * std::max(1.0, std::abs(fd)));
            }
        }
    }
    fx.params.gradient = InteractionGradient::exact;

    AdmmState boundary = random_interior_state(11, rng);
    boundary.r1[3] = 0.0;
    CHECK_THROWS_AS(grad_block1(fx.params, fx.V, boundary, mu), FeasibilityError);
}

TEST_CASE("project_mass is the metric projection onto the mass constraints") {
    const P1Space space(make_interval_mesh(-1.0, 1.0, 31));
    std::mt19937 rng(7);
    Field r = random_direction(31, rng), b = random_direction(31, rng);
    const Field r0 = r, b0 = b;
    project_mass(space, r, b, 0.3, 0.25);
    CHECK(space.integrate(r) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(space.integrate(b) == doctest::Approx(0.25).epsilon(1e-12));

    Field r2 = r, b2 = b;
    project_mass(space, r2, b2, 0.3, 0.25);
    CHECK((r2 - r).lpNorm<Eigen::Infinity>() <= 1e-14);

    // the correction is metric-orthogonal to feasible differences
    Field yr = random_direction(31, rng), yb = random_direction(31, rng);
    project_mass(space, yr, yb, 0.3, 0.25);
    CHECK(std::abs(space.inner(r - r0, yr - r)) <= 1e-12);
    CHECK(std::abs(space.inner(b - b0, yb - b)) <= 1e-12);
}

TEST_CASE("exact box projection satisfies the variational inequality") {
    const double delta = 0.05;
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> wide(-0.5, 1.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int n = 200;
    Field r(n), b(n);
    for (int i = 0; i < n; ++i) {
        r[i] = wide(rng);
        b[i] = wide(rng);
    }
    const Field r0 = r, b0 = b;
    project_box(r, b, delta, BoxProjection::exact);

    for (int i = 0; i < n; ++i) {
        CHECK(r[i] >= delta - 1e-14);
        CHECK(b[i] >= delta - 1e-14);
        CHECK(r[i] + b[i] <= 1.0 - delta + 1e-14);
    }

    Field r_again = r, b_again = b;
    project_box(r_again, b_again, delta, BoxProjection::exact);
    CHECK((r_again - r).lpNorm<Eigen::Infinity>() <= 1e-14);

    // (x - Px) . (p - Px) <= 0 for every feasible p, checked per node
    for (int trial = 0; trial < 20; ++trial) {
        for (int i = 0; i < n; ++i) {
            const double pr = delta + unit(rng) * (1.0 - 3.0 * delta);
            const double pb = delta + unit(rng) * (1.0 - 2.0 * delta - pr);
            const double dot = (r0[i] - r[i]) * (pr - r[i]) + (b0[i] - b[i]) * (pb - b[i]);
            CHECK(dot <= 1e-12);
        }
    }

    Field deep_r = Field::Constant(1, -1.0), deep_b = Field::Constant(1, -1.0);
    project_box(deep_r, deep_b, delta, BoxProjection::exact);
    CHECK(deep_r[0] == doctest::Approx(delta));
    CHECK(deep_b[0] == doctest::Approx(delta));

    CHECK_THROWS_AS(project_box(r, b, 0.4, BoxProjection::exact), ConfigError);
}

TEST_CASE("paper box projection lands on the saturated face") {
    Field r = Field::Constant(1, 0.9), b = Field::Constant(1, 0.9);
    project_box(r, b, 0.0, BoxProjection::paper);
    CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(b[0] == doctest::Approx(0.5).epsilon(1e-14));

    // the rebalancing can undercut the floor, by design
    r[0] = 0.0, b[0] = 0.9;
    project_box(r, b, 0.1, BoxProjection::paper);
    CHECK(r[0] == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(b[0] == doctest::Approx(0.85).epsilon(1e-14));
    CHECK(r[0] + b[0] == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("interaction block solve agrees with a dense KKT oracle") {
    ModelParams p = segregation_params();
    p.c22 = -1.0;
    p.mass_r = 0.3;
    p.mass_b = 0.35;
    const int n = 11;
    Fixture fx(n, p);
    const double mu = 40.0;

    std::mt19937 rng(41);
    AdmmState s = random_interior_state(n, rng);

    // dense KKT system for the equality-constrained quadratic block
    const Field& m = fx.space.lumped_mass();
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            G(i, j) = coulomb_eval(std::abs(fx.space.mesh().x(i) - fx.space.mesh().x(j)), 1);
        }
    }
    const Eigen::MatrixXd M = m.asDiagonal();
    const Eigen::MatrixXd S = M * G * M;

    const int dim = 2 * n + 2;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    kkt.block(0, 0, n, n) = 2.0 * p.c11 * S + mu * M;
    kkt.block(0, n, n, n) = -2.0 * S;
    kkt.block(n, 0, n, n) = -2.0 * S;
    kkt.block(n, n, n, n) = 2.0 * p.c22 * S + mu * M;
    kkt.block(0, 2 * n, n, 1) = m;
    kkt.block(n, 2 * n + 1, n, 1) = m;
    kkt.block(2 * n, 0, 1, n) = m.transpose();
    kkt.block(2 * n + 1, n, 1, n) = m.transpose();
    rhs.segment(0, n) = M * (s.lam_r - fx.V) + mu * M * s.r1;
    rhs.segment(n, n) = M * (s.lam_b - fx.V) + mu * M * s.b1;
    rhs[2 * n] = p.mass_r;
    rhs[2 * n + 1] = p.mass_b;
    const Eigen::VectorXd z = Eigen::FullPivLU<Eigen::MatrixXd>(kkt).solve(rhs);

    AdmmOptions opts;
    opts.mu = mu;
    opts.step2 = 0.02;
    opts.armijo = true;
    opts.inner_iterations = 20000;
    opts.inner_tol = 1e-13;
    pg_solve(AdmmBlock::interaction, fx.space, fx.conv, fx.params, fx.V, s, opts);

    CHECK((s.r2 - z.segment(0, n)).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK((s.b2 - z.segment(n, n)).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(fx.space.integrate(s.r2) == doctest::Approx(p.mass_r).epsilon(1e-12));
    CHECK(fx.space.integrate(s.b2) == doctest::Approx(p.mass_b).epsilon(1e-12));
}

TEST_CASE("armijo projected gradient never increases the block objective") {
    ModelParams p = segregation_params();
    p.eps = 0.05;
    Fixture fx(41, p);
    std::mt19937 rng(55);
    AdmmState s = random_interior_state(41, rng);

    AdmmOptions opts;
    opts.delta = 1e-4;
    opts.step1 = 0.5;
    opts.armijo = true;
    opts.inner_iterations = 30;

    project_box(s.r1, s.b1, opts.delta, BoxProjection::exact);
    const double before = lagrangian(fx.space, fx.conv, fx.params, fx.V, s, opts.mu);
    pg_solve(AdmmBlock::box, fx.space, fx.conv, fx.params, fx.V, s, opts);
    const double after = lagrangian(fx.space, fx.conv, fx.params, fx.V, s, opts.mu);
    CHECK(after <= before + 1e-12);
}

TEST_CASE("admm_step updates the multipliers and keeps both blocks feasible") {
    ModelParams p = segregation_params();
    Fixture fx(41, p);
    AdmmOptions opts;
    opts.delta = 1e-6;
    opts.step1 = 0.5;
    opts.step2 = 0.1;
    opts.armijo = true;
    opts.inner_iterations = 20;

    AdmmState s = initial_admm_state(fx.space, fx.params, opts, 3);
    const Field lam_r0 = s.lam_r, lam_b0 = s.lam_b;
    admm_step(fx.space, fx.conv, fx.params, fx.V, s, opts);

    CHECK((s.lam_r - lam_r0 - opts.mu * (s.r1 - s.r2)).lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK((s.lam_b - lam_b0 - opts.mu * (s.b1 - s.b2)).lpNorm<Eigen::Infinity>() <= 1e-14);
    for (int i = 0; i < 41; ++i) {
        CHECK(s.r1[i] >= opts.delta - 1e-12);
        CHECK(s.b1[i] >= opts.delta - 1e-12);
        CHECK(s.r1[i] + s.b1[i] <= 1.0 - opts.delta + 1e-12);
    }
    CHECK(fx.space.integrate(s.r2) == doctest::Approx(p.mass_r).epsilon(1e-10));
    CHECK(fx.space.integrate(s.b2) == doctest::Approx(p.mass_b).epsilon(1e-10));
}

TEST_CASE("admm_run converges on a small segregation problem") {
    ModelParams p = segregation_params();
    Fixture fx(51, p);
    AdmmOptions opts;
    opts.mu = 8.0;
    opts.delta = 1e-6;
    opts.tol = 1e-8;
    opts.max_outer = 20000;
    opts.inner_iterations = 20;
    opts.inner_tol = 1e-10;
    opts.step1 = 0.5;
    opts.step2 = 0.1;
    opts.armijo = true;

    const AdmmResult result = admm_run(fx.space, fx.conv, fx.params, fx.V,
                                       initial_admm_state(fx.space, fx.params, opts, 1), opts);
    CHECK(result.converged);
    REQUIRE(result.trace.size() >= 2);
    CHECK(std::max(result.trace.back().primal_res_r, result.trace.back().primal_res_b) <= opts.tol);
    CHECK(result.trace.back().total < result.trace.front().total);
    for (const AdmmTraceRow& row : result.trace) {
        CHECK(std::isfinite(row.total));
    }

    ModelParams entropic = p;
    entropic.eps = 0.01;
    AdmmOptions bad = opts;
    bad.delta = 0.0;
    CHECK_THROWS_AS(admm_run(fx.space, fx.conv, entropic, fx.V,
                             initial_admm_state(fx.space, entropic, opts, 1), bad),
                    ConfigError);
}

TEST_CASE("seeded initial states are reproducible and feasible") {
    const Field a = random_uniform_field(1000, 99);
    const Field b = random_uniform_field(1000, 99);
    const Field c = random_uniform_field(1000, 100);
    CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a - c).lpNorm<Eigen::Infinity>() > 0.0);
    CHECK(a.minCoeff() >= 0.0);
    CHECK(a.maxCoeff() <= 0.49);

    ModelParams p = segregation_params();
    P1Space space(make_interval_mesh(-1.0, 1.0, 1001));
    AdmmOptions opts;
    opts.delta = 1e-6;
    const AdmmState s1 = initial_admm_state(space, p, opts, 5);
    const AdmmState s2 = initial_admm_state(space, p, opts, 5);
    CHECK((s1.r2 - s2.r2).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((s1.b1 - s2.b1).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(space.integrate(s1.r2) == doctest::Approx(p.mass_r).epsilon(1e-12));
    CHECK(space.integrate(s1.b2) == doctest::Approx(p.mass_b).epsilon(1e-12));
    CHECK(s1.r1.minCoeff() >= opts.delta - 1e-14);
    CHECK((s1.r1 + s1.b1).maxCoeff() <= 1.0 - opts.delta + 1e-14);

    // a positive tilt pushes the r mass to the right half
    Field tilt(space.size());
    for (int i = 0; i < space.size(); ++i) tilt[i] = 1.0 + 0.5 * space.mesh().x(i);
    const AdmmState tilted = initial_admm_state(space, p, opts, 5, tilt, Field());
    double left = 0.0, right = 0.0;
    int nl = 0, nr = 0;
    for (int i = 0; i < space.size(); ++i) {
        if (space.mesh().x(i) < 0) {
            left += tilted.r2[i];
            ++nl;
        } else {
            right += tilted.r2[i];
            ++nr;
        }
    }
    CHECK(right / nr - left / nl > 0.05);
}

}  // TEST_SUITE("minimize")
