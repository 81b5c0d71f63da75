#include <benchmark/benchmark.h>

#include <random>

#include "plapflow/block_system.hpp"
#include "plapflow/discrete.hpp"
#include "plapflow/gradient_flow.hpp"

using namespace plapflow;

namespace {

struct Fixture {
    explicit Fixture(int n)
        : disc(flow::Problem{std::make_shared<const mesh::QuadMesh>(mesh::build_unit_square_quad(n)),
                             {1e-4, 0.05, 0.75, 1e-3},
                             [](Point2 x) { return std::sin(4.0 * x.x) * x.y; },
                             {},
                             {}}) {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        c.resize(disc.space().num_cells());
        for (double& v : c) v = u(rng);
        this->u = flow::solve_initial_potential(disc, c);
    }
    flow::Discretization disc;
    std::vector<double> c;
    std::vector<double> u;
};

void BM_StiffnessAssembly(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(fem::assemble_stiffness(f.disc.space(), f.c, 1e-4));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(f.c.size()));
}
BENCHMARK(BM_StiffnessAssembly)->Arg(32)->Arg(64)->Arg(128);

void BM_Spmv(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    const auto k = fem::assemble_stiffness(f.disc.space(), f.c, 1e-4);
    std::vector<double> x(k.cols(), 1.0), y(k.rows());
    for (auto _ : state) {
        k.multiply(x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(k.nnz()));
}
BENCHMARK(BM_Spmv)->Arg(64)->Arg(128)->Arg(256);

void BM_SchurAssembly(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    const auto j = flow::jacobian(f.disc, f.c, f.u, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(linalg::assemble_schur(j.a_diag, j.b, j.c));
}
BENCHMARK(BM_SchurAssembly)->Arg(32)->Arg(64)->Arg(128);

void BM_CgSolve(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    const auto j = flow::jacobian(f.disc, f.c, f.u, 0.1);
    std::vector<double> rhs(j.s.rows(), 1.0);
    linalg::KrylovConfig cfg;
    cfg.preconditioner = static_cast<linalg::PreconditionerKind>(state.range(1));
    cfg.rtol = 1e-8;
    for (auto _ : state) {
        std::vector<double> x(rhs.size(), 0.0);
        const auto rep = linalg::krylov_solve(j.s, rhs, x, cfg);
        state.counters["iterations"] = rep.iterations;
    }
}
BENCHMARK(BM_CgSolve)
    ->Args({64, static_cast<int>(linalg::PreconditionerKind::Jacobi)})
    ->Args({64, static_cast<int>(linalg::PreconditionerKind::IncompleteCholesky0)})
    ->Args({128, static_cast<int>(linalg::PreconditionerKind::IncompleteCholesky0)});

void BM_NewtonStep(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)));
    const flow::State s{0.0, f.c, f.u};
    for (auto _ : state) benchmark::DoNotOptimize(flow::solve_step(f.disc, s, 0.1, {}));
}
BENCHMARK(BM_NewtonStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_KirchhoffSolve(benchmark::State& state) {
    auto m = std::make_shared<const mesh::TriMesh>(mesh::build_equilateral_tri(static_cast<int>(state.range(0))));
    discrete::TriGraph g;
    g.mesh = m;
    g.conductivity.assign(m->num_edges(), 1.0);
    g.source = discrete::project_sources(*m, [](Point2 x) { return x.x - x.y; });
    linalg::remove_mean(g.source);
    for (auto _ : state) benchmark::DoNotOptimize(discrete::kirchhoff_solve(g));
}
BENCHMARK(BM_KirchhoffSolve)->Arg(4)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
