#include "pcor/run.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace pcor;

void bm_metropolis_build(benchmark::State& state) {
  const auto g = NetworkGraph::random_geometric(static_cast<int>(state.range(0)), 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_metropolis_weights(g));
  }
}
BENCHMARK(bm_metropolis_build)->Arg(50)->Arg(200);

void bm_allocation_resolvent(benchmark::State& state) {
  const auto problem = LogAllocationProblem::make(50);
  const MonotoneOperator op = problem.agent_operator(24);
  Vector input(2);
  input << 1.4, 0.6;
  ResolventQuery query;
  query.alpha = 2.0;
  query.input_point = input;
  query.criterion = InexactnessCriterion::exact(std::pow(10.0, -state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(resolve(op, query));
  }
}
BENCHMARK(bm_allocation_resolvent)->Arg(6)->Arg(9)->Arg(12);

void bm_pc_sweep(benchmark::State& state) {
  const auto problem = ProblemInstance::log_allocation(50);
  const auto mixing = build_metropolis_weights(NetworkGraph::random_geometric(50, 42));
  RunConfig config;
  config.method = Method::ProximalCorrection;
  config.mixing = mixing;
  config.operators = problem.operators();
  config.criterion = InexactnessCriterion::exact(1e-12);
  config.alpha = 2.0;
  config.max_iterations = 4;
  config.initial_z = problem.initial_iterate(1);
  for (auto _ : state) {
    AlgorithmState s = pc_init(config);
    s = pc_step(s, config);
    benchmark::DoNotOptimize(s.Z);
  }
}
BENCHMARK(bm_pc_sweep);

}  // namespace
