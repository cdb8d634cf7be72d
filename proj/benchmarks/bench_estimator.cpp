#include <benchmark/benchmark.h>

#include "common.hpp"
#include "mrt/engine.hpp"
#include "mrt/estimator.hpp"
#include "mrt/outcomes.hpp"

namespace {

// 100 HeartSteps participants over 42 days; the argument is the number of
// bootstrap replicates.
void overall_effect_bootstrap(benchmark::State& state) {
  static const mrt::TrialLog log = [] {
    auto b = bench::behavior("heartsteps");
    b.steps.effect_walk = b.steps.effect_antisedentary = 60;
    auto l = mrt::run_trial(mrt::SimulationRun{bench::protocol("heartsteps", 42), 100, 9, b, 9, 0});
    mrt::enrich_outcomes(l);
    return l;
  }();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        mrt::overall_effect(log, "activity_suggestions", {}, {static_cast<int>(state.range(0))}));
}
BENCHMARK(overall_effect_bootstrap)->Arg(0)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
