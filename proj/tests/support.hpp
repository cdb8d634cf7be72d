#pragma once

#include <filesystem>
#include <algorithm>
#include <random>
#include <vector>
#include <string>

#include "mrt/case_studies.hpp"
#include "mrt/engine.hpp"
#include "mrt/outcomes.hpp"
#include "mrt/participant.hpp"
#include "mrt/protocol_io.hpp"

namespace mrt::test {

inline TrialProtocol bundled_protocol(std::string_view name) {
  return parse_protocol(find_case_study(name).protocol_text);
}

inline ParticipantConfig bundled_behavior(std::string_view name) {
  return parse_behavior(find_case_study(name).behavior_text);
}

/// Behavior without driving, bouts or snoozes: every point is available.
inline ParticipantConfig no_context(ParticipantConfig c) {
  c.context.enabled = false;
  return c;
}

inline TrialLog simulate(const TrialProtocol& protocol, const ParticipantConfig& behavior,
                         int population, std::uint64_t seed, bool enrich = true) {
  TrialLog log = run_trial(SimulationRun{protocol, population, seed, behavior, seed, 0});
  if (enrich) enrich_outcomes(log);
  return log;
}

/// Random but valid protocol/behavior pair for property tests: a bundled
/// design with a short study, perturbed probabilities and behavior.
struct FuzzCase {
  TrialProtocol protocol;
  ParticipantConfig behavior;
  int population = 1;
  std::uint64_t seed = 0;
};

inline FuzzCase fuzz_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  static constexpr const char* names[] = {"heartsteps", "sara", "barifit"};
  const char* name = names[seed % 3];

  FuzzCase c;
  c.protocol = bundled_protocol(name);
  c.behavior = bundled_behavior(name);
  c.protocol.study_length_days = pick(2, 12);
  c.population = pick(1, 5);
  c.seed = rng();

  for (auto& f : c.protocol.factors) {
    // Random micros summing to exactly one.
    std::vector<std::int64_t> cuts{0, Probability::kScale};
    for (std::size_t i = 1; i < f.levels.size(); ++i) cuts.push_back(pick(0, Probability::kScale));
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i < f.levels.size(); ++i)
      f.probabilities[i] = Probability::from_micros(cuts[i + 1] - cuts[i]);
    if (f.schedule.kind == ScheduleKind::clock_times) {
      std::vector<int> times;
      for (int m = pick(0, 200); m < kMinutesPerDay; m += pick(60, 600)) times.push_back(m);
      f.schedule.clock_times = times;
    }
  }

  ParticipantConfig& b = c.behavior;
  b.context.p_seen = uni(0, 1);
  b.context.driving_per_day = uni(0, 4);
  b.context.bouts_per_day = uni(0, 6);
  b.context.snoozes_per_day = uni(0, 1);
  b.steps.dispersion = pick(0, 1) ? uni(0.5, 5) : 0.0;
  b.steps.effect_walk = uni(0, 200);
  b.steps.effect_antisedentary = uni(0, 200);
  b.steps.effect_decay_per_day = uni(0.9, 1.0);
  b.engagement.survey_logit = uni(-2, 2);
  b.engagement.tasks_logit = uni(-2, 2);
  b.engagement.food_logit = uni(-2, 2);
  b.goals.rest_rate = uni(0, 0.5);
  return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mrt_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mrt::test
