#include <benchmark/benchmark.h>

#include "common.hpp"
#include "mrt/predicate.hpp"

namespace {

const mrt::TrialProtocol& heartsteps() {
  static const auto p = bench::protocol("heartsteps", 42);
  return p;
}

const std::string& gate_source() {
  return heartsteps().find_factor("activity_suggestions")->availability->predicate_source;
}

void parse_availability(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(mrt::parse_predicate(gate_source(), heartsteps().context_vars));
}
BENCHMARK(parse_availability);

void evaluate_availability(benchmark::State& state) {
  const auto ast = mrt::parse_predicate(gate_source(), heartsteps().context_vars);
  mrt::ContextSnapshot ctx;
  ctx.values = {{"driving", false}, {"currently_active", false}, {"snoozed", false}};
  ctx.minutes_since = {{"activity_bout", 30.0}};
  for (auto _ : state) benchmark::DoNotOptimize(mrt::evaluate(ast, ctx));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(evaluate_availability);

}  // namespace
