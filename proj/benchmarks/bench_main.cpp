#include <benchmark/benchmark.h>

#include "crossdiff/evolve.hpp"
#include "crossdiff/minimize.hpp"

namespace {

using namespace crossdiff;

void BM_AssembleInterval(benchmark::State& state) {
    const Mesh mesh = make_interval_mesh(-1.0, 1.0, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_fem(mesh));
    }
}
BENCHMARK(BM_AssembleInterval)->Arg(1000)->Arg(10000);

void BM_AssembleDisc(benchmark::State& state) {
    const Mesh mesh = make_disc_mesh(2.0, 2.0 / static_cast<double>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_fem(mesh));
    }
    state.counters["nodes"] = mesh.num_nodes();
}
BENCHMARK(BM_AssembleDisc)->Arg(20)->Arg(40);

void BM_ConvolutionFree(benchmark::State& state) {
    const P1Space space(make_interval_mesh(-1.0, 1.0, static_cast<int>(state.range(0))));
    const Convolution conv(space, KernelSpec{}, ConvolutionMode::free_quadrature);
    const Field f = random_uniform_field(space.size(), 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv.apply(f));
    }
}
BENCHMARK(BM_ConvolutionFree)->Arg(1000)->Arg(4000);

void BM_ConvolutionDirichlet(benchmark::State& state) {
    const P1Space space(make_disc_mesh(2.0, 0.1));
    const Convolution conv(space, KernelSpec{}, ConvolutionMode::dirichlet_poisson);
    const Field f = random_uniform_field(space.size(), 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv.apply(f));
    }
    state.counters["nodes"] = space.size();
}
BENCHMARK(BM_ConvolutionDirichlet);

void BM_AdmmStep(benchmark::State& state) {
    const P1Space space(make_interval_mesh(-1.0, 1.0, static_cast<int>(state.range(0))));
    ModelParams params;
    params.c11 = -1.0;
    params.c22 = -1.5;
    params.use_potential = true;
    const Field V = potential_field(space.mesh(), params);
    const Convolution conv(space, params.kernel, ConvolutionMode::free_quadrature);
    AdmmOptions opts;
    opts.inner_iterations = 20;
    AdmmState s = initial_admm_state(space, params, opts, 7);
    for (auto _ : state) {
        admm_step(space, conv, params, V, s, opts);
    }
}
BENCHMARK(BM_AdmmStep)->Arg(1000);

void BM_ImexStep1d(benchmark::State& state) {
    const P1Space space(make_interval_mesh(-1.0, 1.0, static_cast<int>(state.range(0))));
    ModelParams params;
    params.eps = 2e-4;
    params.c11 = -2.0;
    params.c22 = -0.5;
    params.use_potential = true;
    const Field V = potential_field(space.mesh(), params);
    const Convolution conv(space, params.kernel, ConvolutionMode::free_quadrature);
    EvolveOptions opts;
    EvolveState init;
    init.r = heaviside_bump(space.mesh(), 1.0 / 3.0, 0.25, 1e-3, -0.6) +
             heaviside_bump(space.mesh(), 1.0 / 3.0, 0.25, 1e-3, 0.6);
    init.b = init.r;
    for (auto _ : state) {
        EvolveState s = init;
        evolve_step(space, conv, params, V, s, opts);
    }
}
BENCHMARK(BM_ImexStep1d)->Arg(1000);

void BM_ImexStep2d(benchmark::State& state) {
    const P1Space space(make_disc_mesh(2.0, 0.1));
    ModelParams params;
    params.eps = 0.02;
    params.c11 = -1.0;
    params.c22 = -0.5;
    const Field V = potential_field(space.mesh(), params);
    const Convolution conv(space, params.kernel, ConvolutionMode::dirichlet_poisson);
    EvolveOptions opts;
    opts.tau = 5e-3;
    EvolveState init;
    init.r = heaviside_bump(space.mesh(), 1.0 / 3.0, 0.5, 1e-3);
    init.b = init.r;
    for (auto _ : state) {
        EvolveState s = init;
        evolve_step(space, conv, params, V, s, opts);
    }
    state.counters["nodes"] = space.size();
}
BENCHMARK(BM_ImexStep2d);

}  // namespace

BENCHMARK_MAIN();
