#include <benchmark/benchmark.h>

#include "dtlog/compiler.hpp"
#include "dtlog/grid.hpp"
#include "dtlog/learner.hpp"
#include "dtlog/runtime.hpp"

namespace dtlog {
namespace {

struct GridProgram {
  GridData data;
  Program program;
  FunctionRegistry registry;
};

GridProgram grid_program(int n, int depth) {
  GridData data = generate_grid({.n = n});
  Program program = prepare_program(data.rules, load_facts(data.facts));
  FunctionRegistry registry = compile_program(program.theory, program.kb, {{"path", Mode::io}}, depth);
  return {std::move(data), std::move(program), std::move(registry)};
}

void query(benchmark::State& state, int n, int depth) {
  GridProgram g = grid_program(n, depth);
  const Query q = parse_query("path(" + cell_name(n / 2, n / 2) + ",Y)");
  for (auto _ : state) benchmark::DoNotOptimize(respond(g.registry, g.program.kb, q));
}

void BM_Query16Depth10(benchmark::State& state) { query(state, 16, 10); }
void BM_Query64Depth64(benchmark::State& state) { query(state, 64, 64); }

void BM_CompileGrid(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  GridData data = generate_grid({.n = 16});
  Program program = prepare_program(data.rules, load_facts(data.facts));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compile_program(program.theory, program.kb, {{"path", Mode::io}}, depth));
  }
}

void BM_TrainEpoch16(benchmark::State& state) {
  GridProgram g = grid_program(16, 10);
  TrainConfig config{.learning_rate = 0.1, .epochs = 1, .trainable = {"edge"}};
  for (auto _ : state) benchmark::DoNotOptimize(train(g.registry, g.program.kb, g.data.train, config));
}

BENCHMARK(BM_Query16Depth10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Query64Depth64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CompileGrid)->Arg(10)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainEpoch16)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dtlog

BENCHMARK_MAIN();
