#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "mrt/error.hpp"
#include "mrt/participant.hpp"
#include "support.hpp"

using namespace mrt;
using mrt::test::bundled_behavior;
using mrt::test::bundled_protocol;

namespace {

DrawKey key(std::uint64_t seed, std::uint64_t i, std::uint64_t channel = 0) {
  return DrawKey{seed, i, channel, 0, DrawPurpose::behavior};
}

double sample_sd(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1));
}

// Steps come only from treatment effects.
ParticipantConfig effect_only(double effect_walk, double decay) {
  ParticipantConfig c;
  c.steps.baseline_rate.assign(kMinutesPerDay, 0.0);
  c.steps.dispersion = 0.0;
  c.steps.participant_sd = 0.0;
  c.steps.day_sd = 0.0;
  c.steps.effect_walk = effect_walk;
  c.steps.effect_window = 30;
  c.steps.effect_decay_per_day = decay;
  c.context.enabled = false;
  c.context.p_seen = 1.0;
  return c;
}

ParticipantState plain_state(const TrialProtocol& p, std::uint64_t index) {
  ParticipantState s;
  s.index = index;
  s.baseline_levels.assign(p.factors.size(), std::nullopt);
  s.slot_times.assign(p.factors.size(), {});
  return s;
}

std::int64_t window_sum(const ParticipantSignals& sig, std::int64_t begin, std::int64_t len) {
  std::int64_t t = 0;
  for (std::int64_t m = begin; m < begin + len; ++m) t += sig.steps[static_cast<std::size_t>(m)];
  return t;
}

const Level kWalk{"walking", "Walking", false, std::string(payload::walking_suggestion)};

}  // namespace

TEST_CASE("nearest-rank quantile") {
  std::vector<double> v;
  for (int i = 10; i >= 1; --i) v.push_back(1000.0 * i);
  CHECK(nearest_rank_quantile(v, 0.6) == 6000.0);
  CHECK(nearest_rank_quantile(v, 0.0) == 1000.0);
  CHECK(nearest_rank_quantile(v, 1.0) == 10000.0);
  CHECK(nearest_rank_quantile(v, 0.55) == 6000.0);
  CHECK(nearest_rank_quantile(v, 0.5) == 5000.0);
  CHECK_THROWS_AS(nearest_rank_quantile(std::vector<double>{}, 0.5), Error);
}

TEST_CASE("step goals") {
  std::vector<double> totals;
  for (int i = 1; i <= 10; ++i) totals.push_back(1000.0 * i);
  StepGoalPolicy fixed;
  fixed.quantile = 0.6;
  CHECK(compute_step_goal(fixed, totals, key(1, 0)) == 6000.0);

  std::vector<double> longer{99999, 99999, 99999};
  longer.insert(longer.end(), totals.begin(), totals.end());
  CHECK(compute_step_goal(fixed, longer, key(1, 0)) == 6000.0);

  StepGoalPolicy variable;
  variable.kind = GoalPolicyKind::variable_percentile;
  const std::vector<double> flat(10, 5000.0);
  for (std::uint64_t d = 0; d < 20; ++d) {
    CHECK(compute_step_goal(fixed, flat, key(3, d)) == 5000.0);
    CHECK(compute_step_goal(variable, flat, key(3, d)) == 5000.0);
  }
  CHECK(compute_step_goal(fixed, {}, key(1, 0)) == fixed.starter_goal);

  for (std::uint64_t d = 0; d < 200; ++d) {
    const auto g = compute_step_goal(variable, totals, key(5, d));
    REQUIRE(g.has_value());
    CHECK(*g >= 3000.0);
    CHECK(*g <= 9000.0);
  }
}

TEST_CASE("rest days occur about one day per week") {
  StepGoalPolicy p;
  p.rest_days = true;
  const std::vector<double> totals(10, 5000.0);
  int rest = 0;
  constexpr int n = 10000;
  for (int i = 0; i < n; ++i)
    if (!compute_step_goal(p, totals, key(11, static_cast<std::uint64_t>(i)))) ++rest;
  CHECK(std::abs(rest / double(n) - 1.0 / 7.0) < 0.01);
}

TEST_CASE("variable-percentile goals vary more than fixed on identical histories") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::vector<double> history;
    for (std::uint64_t d = 0; d < 120; ++d)
      history.push_back(4000.0 + 4000.0 * uniform01(key(seed, d, 99)));
    StepGoalPolicy fixed, variable;
    variable.kind = GoalPolicyKind::variable_percentile;
    std::vector<double> gf, gv;
    for (std::size_t d = 1; d < history.size(); ++d) {
      const std::span<const double> past(history.data(), d);
      gf.push_back(*compute_step_goal(fixed, past, key(seed, d, 5)));
      gv.push_back(*compute_step_goal(variable, past, key(seed, d, 5)));
    }
    CAPTURE(seed);
    CHECK(sample_sd(gv) > sample_sd(gf));
  }
}

TEST_CASE("minute steps: zero mean, Poisson and overdispersed moments") {
  CHECK(generate_minute_steps(0.0, 2.0, key(1, 0)) == 0);
  CHECK(generate_minute_steps(-1.0, 0.0, key(1, 0)) == 0);

  for (double dispersion : {0.0, 2.0}) {
    constexpr int n = 100000;
    const double mean = 5.0;
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
      const double x = generate_minute_steps(mean, dispersion, key(21, static_cast<std::uint64_t>(i)));
      CHECK(x >= 0);
      s += x;
      ss += x * x;
    }
    const double m = s / n;
    const double var = ss / n - m * m;
    const double want_var = dispersion > 0 ? mean + mean * mean / dispersion : mean;
    CAPTURE(dispersion);
    CHECK(std::abs(m - mean) < 4 * std::sqrt(want_var / n));
    CHECK(std::abs(var / want_var - 1.0) < 0.05);
  }
}

TEST_CASE("seen resolution") {
  int seen = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) {
    CHECK(resolve_seen(1.0, key(2, static_cast<std::uint64_t>(i))));
    CHECK_FALSE(resolve_seen(0.0, key(2, static_cast<std::uint64_t>(i))));
    if (resolve_seen(2.0 / 3.0, key(2, static_cast<std::uint64_t>(i)))) ++seen;
  }
  CHECK(std::abs(seen / double(n) - 2.0 / 3.0) < 0.005);
  CHECK(logistic(0.0) == 0.5);
}

TEST_CASE("a seen walking suggestion adds its effect inside the window only") {
  const TrialProtocol p = bundled_protocol("heartsteps");
  const ParticipantConfig c = effect_only(60.0, 1.0);
  double inside = 0, after = 0, before = 0;
  int windows = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    ParticipantSignals sig;
    ParticipantModel m(p, c, 77, plain_state(p, i), sig);
    m.begin_day(0);
    for (int k = 0; k < 10; ++k) {
      const std::int64_t t = 120 + 120 * k;
      m.advance_to(t);
      CHECK(m.deliver(0, kWalk, static_cast<std::uint64_t>(k), t));
    }
    m.advance_to(kMinutesPerDay);
    for (int k = 0; k < 10; ++k) {
      const std::int64_t t = 120 + 120 * k;
      inside += window_sum(sig, t, 30);
      after += window_sum(sig, t + 30, 60);
      before += window_sum(sig, t - 30, 30);
      ++windows;
    }
  }
  CHECK(windows == 10000);
  CHECK(std::abs(inside / windows - 60.0) < 2.0);
  CHECK(after == 0);
  CHECK(before == 0);
}

TEST_CASE("effects decay geometrically with day in study") {
  const TrialProtocol p = bundled_protocol("heartsteps");
  const ParticipantConfig c = effect_only(60.0, 0.98);
  double day0 = 0, day30 = 0;
  constexpr int n = 10000;
  for (std::uint64_t i = 0; i < n; ++i) {
    ParticipantSignals sig;
    ParticipantModel m(p, c, 78, plain_state(p, i), sig);
    m.advance_to(600);
    m.deliver(0, kWalk, 0, 600);
    const std::int64_t t30 = 30 * kMinutesPerDay + 600;
    m.advance_to(t30);
    m.deliver(0, kWalk, 1, t30);
    m.advance_to(t30 + 30);
    day0 += window_sum(sig, 600, 30);
    day30 += window_sum(sig, t30, 30);
  }
  const double want = 60.0 * std::pow(0.98, 30);
  CHECK(std::abs(day0 / n - 60.0) < 4 * std::sqrt(60.0 / n));
  CHECK(std::abs(day30 / n - want) < 4 * std::sqrt(want / n));
}

TEST_CASE("unseen deliveries have no effect") {
  const TrialProtocol p = bundled_protocol("heartsteps");
  ParticipantConfig c = effect_only(60.0, 1.0);
  c.context.p_seen = 0.0;
  ParticipantSignals sig;
  ParticipantModel m(p, c, 5, plain_state(p, 0), sig);
  m.advance_to(600);
  CHECK_FALSE(m.deliver(0, kWalk, 0, 600));
  m.advance_to(kMinutesPerDay);
  CHECK(sig.day_total(0) == 0);
}

TEST_CASE("self-report completion matches the base logit without treatment") {
  const TrialProtocol p = bundled_protocol("sara");
  ParticipantConfig c = bundled_behavior("sara");
  c.engagement.weekday_offset = 0.0;
  c.steps.baseline_rate.assign(kMinutesPerDay, 0.0);
  long completed = 0, trials = 0;
  for (std::uint64_t i = 0; trials < 100000; ++i) {
    ParticipantSignals sig;
    ParticipantModel m(p, c, 9, plain_state(p, i), sig);
    for (int d = 0; d < p.study_length_days; ++d) {
      m.checkpoint(static_cast<std::int64_t>(d) * kMinutesPerDay + c.engagement.prompt_minute);
      ++trials;
    }
    completed += static_cast<long>(sig.events["survey_completed"].size());
  }
  CHECK(std::abs(completed / double(trials) - logistic(c.engagement.survey_logit)) < 0.01);
}

TEST_CASE("self-report context variables") {
  const TrialProtocol p = bundled_protocol("sara");
  ParticipantConfig c = bundled_behavior("sara");
  c.engagement.survey_logit = 50.0;  // always completes
  c.engagement.tasks_logit = -50.0;  // never completes
  ParticipantSignals sig;
  ParticipantModel m(p, c, 3, plain_state(p, 0), sig);
  const std::int64_t prompt = c.engagement.prompt_minute;
  const auto planned = m.checkpoint(prompt);
  REQUIRE(planned.size() == 1);
  const std::int64_t at = planned[0].minute;
  CHECK(at > prompt);
  CHECK(at < kMinutesPerDay);

  auto before = m.snapshot(at - 1, p.context_vars);
  auto after = m.snapshot(at, p.context_vars);
  CHECK(std::get<bool>(before.values.at("survey_completed_today")) == false);
  CHECK(std::get<bool>(after.values.at("survey_completed_today")) == true);
  CHECK(std::get<bool>(after.values.at("tasks_completed_today")) == false);
  CHECK(after.minutes_since.at("survey_completed") == 0.0);
  CHECK(before.minutes_since.count("survey_completed") == 0);

  auto next = m.snapshot(kMinutesPerDay + 60, p.context_vars);
  CHECK(std::get<bool>(next.values.at("prior_day_self_report")) == true);
  CHECK(std::get<bool>(next.values.at("survey_completed_today")) == false);
  CHECK(std::get<double>(next.values.at("day_in_study")) == 1.0);

  // Day 2 report does not count as a prior-day report for day 2 itself.
  const auto day1 = m.checkpoint(kMinutesPerDay + prompt);
  REQUIRE(day1.size() == 1);
  (void)m.checkpoint(2 * kMinutesPerDay + prompt);
  CHECK(std::get<bool>(m.snapshot(2 * kMinutesPerDay + 60, p.context_vars)
                           .values.at("prior_day_self_report")) == true);
}

TEST_CASE("prior-day report ignores later reports on the current day") {
  const TrialProtocol p = bundled_protocol("sara");
  ParticipantConfig c = bundled_behavior("sara");
  c.engagement.survey_logit = 50.0;
  c.engagement.tasks_logit = -50.0;
  ParticipantSignals sig;
  ParticipantModel m(p, c, 4, plain_state(p, 0), sig);
  const auto planned = m.checkpoint(kMinutesPerDay + c.engagement.prompt_minute);
  REQUIRE(planned.size() == 1);
  auto snap = m.snapshot(planned[0].minute + 1, p.context_vars);
  CHECK(std::get<bool>(snap.values.at("prior_day_self_report")) == false);
}

TEST_CASE("HeartSteps snapshots carry every declared variable") {
  const TrialProtocol p = bundled_protocol("heartsteps");
  const ParticipantConfig c = bundled_behavior("heartsteps");
  ParticipantSignals sig;
  ParticipantState s = plain_state(p, 0);
  s.start_weekday = 4;  // Friday
  ParticipantModel m(p, c, 12, s, sig);
  m.begin_day(0);
  m.begin_day(1);
  const auto snap = m.snapshot(kMinutesPerDay + 12 * 60 + 5, p.context_vars);
  for (const auto& d : p.context_vars) {
    if (d.type == VarType::event) continue;
    CAPTURE(d.id);
    CHECK(snap.values.count(d.id) == 1);
  }
  CHECK(std::get<bool>(snap.values.at("weekend")) == true);
  CHECK(std::get<double>(snap.values.at("day_of_week")) == 5.0);
  CHECK(std::get<double>(snap.values.at("hour_of_day")) == 12.0);
  CHECK(m.weekend(1));
  CHECK_FALSE(m.weekend(3));
}

TEST_CASE("activity bouts are reflected in context") {
  const TrialProtocol p = bundled_protocol("heartsteps");
  ParticipantConfig c = bundled_behavior("heartsteps");
  c.context.bouts_per_day = 6.0;
  ParticipantSignals sig;
  ParticipantModel m(p, c, 31, plain_state(p, 0), sig);
  int bouts = 0;
  for (int d = 0; d < 5; ++d) {
    for (const auto& ev : m.begin_day(d)) {
      if (ev.event_id != "activity_bout") continue;
      ++bouts;
      const auto at_end = m.snapshot(ev.minute, p.context_vars);
      CHECK(at_end.minutes_since.at("activity_bout") == 0.0);
      CHECK(std::get<bool>(m.snapshot(ev.minute - 1, p.context_vars).values.at("currently_active")));
      CHECK_FALSE(std::get<bool>(at_end.values.at("currently_active")));
    }
  }
  CHECK(bouts > 10);
}

TEST_CASE("behavior documents round trip") {
  for (const char* name : {"heartsteps", "sara", "barifit"}) {
    CAPTURE(name);
    const ParticipantConfig c = bundled_behavior(name);
    CHECK(parse_behavior(serialize_behavior(c)) == c);
  }
  ParticipantConfig custom;
  custom.steps.baseline_rate[3] = 1.25;  // not hourly-constant
  custom.goals.trailing_window_days = 7;
  CHECK(parse_behavior(serialize_behavior(custom)) == custom);
  CHECK(parse_behavior("") == ParticipantConfig{});
}

TEST_CASE("behavior validation") {
  const auto code = [](std::string_view text) {
    try {
      parse_behavior(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;
  };
  CHECK(code("[context]\np_seen = 1.5\n") == ErrorCode::config_error);
  CHECK(code("[steps]\nbaseline_rate = 1, 2, 3\n") == ErrorCode::config_error);
  CHECK(code("[steps]\ndispersion = -1\n") == ErrorCode::config_error);
  CHECK(code("[goals]\nvariable_quantile_low = 0.9\nvariable_quantile_high = 0.3\n") ==
        ErrorCode::config_error);
  CHECK(code("[nonsense]\nx = 1\n") == ErrorCode::config_error);
  CHECK(code("[steps]\nunknown = 1\n") == ErrorCode::config_error);
}

TEST_CASE("default profile") {
  const auto prof = StepModel::default_profile();
  REQUIRE(prof.size() == kMinutesPerDay);
  CHECK(prof[3 * 60] == 0.0);
  CHECK(prof[12 * 60] == 9.0);
  StepModel s;
  s.baseline_rate = prof;
  CHECK(s.profile_daily_total() == doctest::Approx(60.0 * 94));
}
