#include "datamkt/simulator.hpp"
#include "datamkt/solver.hpp"

#include <benchmark/benchmark.h>

using namespace datamkt;

namespace {

MarketSpec calibration_market() {
    SideSpec seller{TypeDistribution::uniform(1.0, 10.0), Expr::parse("lam", ExprSignature{"lam"})};
    SideSpec buyer{TypeDistribution::uniform(1.0, 10.0),
                   Expr::parse("0.5*lam", ExprSignature{"lam"})};
    DirectKernels kernels{Expr::parse("0.5*lam*x", ExprSignature{"lam", "x"}),
                          Expr::parse("0.5*lam*(x-0.5)", ExprSignature{"lam", "x"})};
    return MarketSpec(std::move(seller), std::move(buyer), std::move(kernels));
}

void BM_JointMarginalEffect(benchmark::State& state) {
    const MarketSpec spec = calibration_market();
    double x = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(joint_marginal_effect(spec, Objective::Revenue, 4.0 + x * 1e-9, 6.0));
        x += 1.0;
    }
}
BENCHMARK(BM_JointMarginalEffect);

void BM_Utility(benchmark::State& state) {
    const MarketSpec spec = calibration_market();
    for (auto _ : state)
        benchmark::DoNotOptimize(utility(spec, Side::Seller, 4.0, 2.0));
}
BENCHMARK(BM_Utility);

void BM_SolveKappa(benchmark::State& state) {
    const MarketSpec spec = calibration_market();
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_kappa(spec, Objective::Revenue, Side::Seller, 5.0));
}
BENCHMARK(BM_SolveKappa);

void BM_BuildRule(benchmark::State& state) {
    const MarketSpec spec = calibration_market();
    for (auto _ : state)
        benchmark::DoNotOptimize(build_rule(spec, Objective::Revenue,
                                            static_cast<int>(state.range(0))));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildRule)->Arg(64)->Arg(256)->Arg(512)->Complexity();

void BM_FullSolve(benchmark::State& state) {
    const MarketSpec spec = calibration_market();
    for (auto _ : state)
        benchmark::DoNotOptimize(solve(spec, Objective::Revenue, 512));
}
BENCHMARK(BM_FullSolve)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const MarketSpec spec = calibration_market();
    const MechanismSolution solution = solve(spec, Objective::Revenue, 256);
    SimConfig cfg;
    cfg.n_sellers = static_cast<int>(state.range(0));
    cfg.n_buyers = cfg.n_sellers;
    cfg.seed = 17;
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate(spec, solution, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

} // namespace

int main(int argc, char** argv) {
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv))
        return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
