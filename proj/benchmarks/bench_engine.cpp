#include <benchmark/benchmark.h>

#include <array>

#include "common.hpp"
#include "mrt/engine.hpp"
#include "mrt/rng.hpp"

namespace {

// One participant-week per iteration; items are decision records.
void run_trial_week(benchmark::State& state, const char* name) {
  const auto p = bench::protocol(name, 7);
  const auto b = bench::behavior(name);
  std::uint64_t seed = 1;
  std::int64_t records = 0;
  for (auto _ : state) {
    const auto log = mrt::run_trial(mrt::SimulationRun{p, 1, seed, b, seed, 0});
    records += static_cast<std::int64_t>(log.decisions.size());
    ++seed;
  }
  state.SetItemsProcessed(records);
}
BENCHMARK_CAPTURE(run_trial_week, heartsteps, "heartsteps")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(run_trial_week, sara, "sara")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(run_trial_week, barifit, "barifit")->Unit(benchmark::kMillisecond);

void categorical_draw(benchmark::State& state) {
  const std::array<mrt::Probability, 3> probs{mrt::Probability::parse("0.3"), mrt::Probability::parse("0.3"),
                                              mrt::Probability::parse("0.4")};
  mrt::DrawKey key{42, 0, 0, 0, mrt::DrawPurpose::assignment};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mrt::categorical(key, probs));
    ++key.decision_index;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(categorical_draw);

void minute_steps(benchmark::State& state) {
  mrt::DrawKey key{7, 0, 0, 0, mrt::DrawPurpose::behavior};
  const double dispersion = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mrt::generate_minute_steps(12.0, dispersion, key));
    ++key.decision_index;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(minute_steps)->Arg(0)->Arg(2);

}  // namespace
