#include <doctest.h>

#include <random>

#include "mrt/error.hpp"
#include "mrt/outcomes.hpp"
#include "support.hpp"

using namespace mrt;
using namespace mrt::test;

namespace {

SignalArchive archive_of(int days, std::vector<std::uint16_t> steps = {}) {
  SignalArchive a;
  a.study_days = days;
  a.participants.resize(1);
  if (steps.empty()) steps.assign(static_cast<std::size_t>(days) * kMinutesPerDay, 0);
  a.participants[0].steps = std::move(steps);
  return a;
}

DecisionPointRecord at(std::int64_t minute) {
  DecisionPointRecord r;
  r.time_minutes = minute;
  return r;
}

OutcomeSpec offset_window(int offset, int duration) {
  OutcomeSpec s;
  s.offset = offset;
  s.duration = duration;
  return s;
}

OutcomeSpec self_report(OutcomeWindow w) {
  OutcomeSpec s;
  s.signals = {"survey_completed", "tasks_completed"};
  s.window = w;
  s.aggregation = Aggregation::indicator;
  return s;
}

ErrorCode code_of(const DecisionPointRecord& r, const OutcomeSpec& s, const SignalArchive& a) {
  try {
    proximal_outcome(r, s, a);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io_error;
}

}  // namespace

TEST_CASE("all-zero series gives zero for every window") {
  const SignalArchive a = archive_of(3);
  CHECK(proximal_outcome(at(100), offset_window(0, 30), a) == 0.0);
  OutcomeSpec next;
  next.window = OutcomeWindow::next_day;
  CHECK(proximal_outcome(at(100), next, a) == 0.0);
  OutcomeSpec whole;
  whole.window = OutcomeWindow::whole_study;
  CHECK(proximal_outcome(at(100), whole, a) == 0.0);
}

TEST_CASE("hand-summed 30-minute window") {
  SignalArchive a = archive_of(1);
  for (int m = 600; m < 630; ++m) a.participants[0].steps[static_cast<std::size_t>(m)] = 1;
  CHECK(proximal_outcome(at(600), offset_window(0, 30), a) == 30.0);
  CHECK(proximal_outcome(at(600), offset_window(10, 30), a) == 20.0);
  CHECK(proximal_outcome(at(570), offset_window(0, 30), a) == 0.0);
  CHECK(proximal_outcome(at(615), offset_window(0, 5), a) == 5.0);
}

TEST_CASE("next-day window uses the participant calendar day") {
  SignalArchive a = archive_of(3);
  auto& steps = a.participants[0].steps;
  for (int m = 0; m < 3 * kMinutesPerDay; ++m) steps[static_cast<std::size_t>(m)] = static_cast<std::uint16_t>(m / kMinutesPerDay + 1);
  OutcomeSpec next;
  next.window = OutcomeWindow::next_day;
  CHECK(proximal_outcome(at(21 * 60), next, a) == 2.0 * kMinutesPerDay);
  CHECK(proximal_outcome(at(kMinutesPerDay), next, a) == 3.0 * kMinutesPerDay);
  CHECK(code_of(at(2 * kMinutesPerDay + 60), next, a) == ErrorCode::window_out_of_range);
}

TEST_CASE("windows past the end of the study are refused") {
  const SignalArchive a = archive_of(1);
  CHECK(code_of(at(kMinutesPerDay - 10), offset_window(0, 30), a) == ErrorCode::window_out_of_range);
  CHECK(proximal_outcome(at(kMinutesPerDay - 30), offset_window(0, 30), a) == 0.0);
}

TEST_CASE("same-day indicator for a 6 pm reminder") {
  SignalArchive a = archive_of(2);
  auto& ev = a.participants[0].events;
  ev["survey_completed"] = {21 * 60};
  ev["tasks_completed"] = {};
  const auto spec = self_report(OutcomeWindow::same_day_remainder);
  CHECK(proximal_outcome(at(18 * 60), spec, a) == 1.0);
  CHECK(proximal_outcome(at(21 * 60 + 1), spec, a) == 0.0);
  CHECK(proximal_outcome(at(kMinutesPerDay + 18 * 60), spec, a) == 0.0);

  ev["survey_completed"] = {17 * 60};
  CHECK(proximal_outcome(at(18 * 60), spec, a) == 0.0);
  ev["tasks_completed"] = {23 * 60 + 59};
  CHECK(proximal_outcome(at(18 * 60), spec, a) == 1.0);

  const auto next = self_report(OutcomeWindow::next_day);
  ev["survey_completed"] = {kMinutesPerDay + 5};
  CHECK(proximal_outcome(at(10), next, a) == 1.0);
}

TEST_CASE("whole-study outcome is the mean daily total") {
  {
    SignalArchive a = archive_of(120);
    for (int d = 0; d < 120; ++d) a.participants[0].steps[static_cast<std::size_t>(d) * kMinutesPerDay + 700] = static_cast<std::uint16_t>(d);
    CHECK(study_outcome(0, {}, a) == 59.5);
  }
  {
    SignalArchive a = archive_of(10);
    for (int d = 0; d < 10; ++d) {
      a.participants[0].steps[static_cast<std::size_t>(d) * kMinutesPerDay] = 5000;
    }
    CHECK(study_outcome(0, {}, a) == 5000.0);
  }
  {
    SignalArchive a = archive_of(1);
    a.participants[0].steps[0] = 7000;
    CHECK(study_outcome(0, {}, a) == 7000.0);
  }
}

TEST_CASE("disjoint windows covering a day add up to the day total") {
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> d(0, 40);
  std::vector<std::uint16_t> steps(2 * kMinutesPerDay);
  for (auto& s : steps) s = static_cast<std::uint16_t>(d(rng));
  const SignalArchive a = archive_of(2, steps);
  for (int width : {1, 30, 45, 60, 90, 1440}) {
    double total = 0;
    for (int t = kMinutesPerDay; t < 2 * kMinutesPerDay; t += width)
      total += proximal_outcome(at(t), offset_window(0, width), a);
    CAPTURE(width);
    CHECK(total == static_cast<double>(a.participants[0].day_total(1)));
  }
}

TEST_CASE("shifting the series shifts offset-duration outcomes") {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> d(0, 30);
  std::vector<std::uint16_t> base(2 * kMinutesPerDay, 0);
  for (int m = 0; m < kMinutesPerDay; ++m) base[static_cast<std::size_t>(m)] = static_cast<std::uint16_t>(d(rng));
  for (int k : {1, 17, 300}) {
    std::vector<std::uint16_t> shifted(2 * kMinutesPerDay, 0);
    for (int m = 0; m + k < 2 * kMinutesPerDay; ++m) shifted[static_cast<std::size_t>(m + k)] = base[static_cast<std::size_t>(m)];
    const SignalArchive a = archive_of(2, base), b = archive_of(2, shifted);
    for (int t = 0; t < kMinutesPerDay; t += 37)
      for (const auto& spec : {offset_window(0, 30), offset_window(5, 60)})
        CHECK(proximal_outcome(at(t), spec, a) == proximal_outcome(at(t + k), spec, b));
  }
}

TEST_CASE("enrichment flags last-day windows as missing") {
  const TrialProtocol hs = bundled_protocol("heartsteps");
  const TrialLog log = simulate(hs, bundled_behavior("heartsteps"), 3, 21);
  const std::int64_t last_day = 41;
  for (const auto& r : log.decisions) {
    const bool last = r.time_minutes / kMinutesPerDay == last_day;
    if (r.factor_id == "planning_support") {
      CHECK(r.outcome_missing == last);
    } else {
      CHECK_FALSE(r.outcome_missing);
    }
    CHECK(r.proximal_outcome.has_value() == !r.outcome_missing);
    if (r.proximal_outcome) CHECK(*r.proximal_outcome >= 0.0);
  }
  CHECK(log.study_outcomes.empty());
}

TEST_CASE("indicator outcomes are 0 or 1 and study outcomes cover baseline factors") {
  const TrialLog sara = simulate(bundled_protocol("sara"), bundled_behavior("sara"), 5, 2);
  for (const auto& r : sara.decisions)
    if (r.proximal_outcome) CHECK((*r.proximal_outcome == 0.0 || *r.proximal_outcome == 1.0));

  const TrialProtocol bf = bundled_protocol("barifit");
  const TrialLog log = simulate(bf, bundled_behavior("barifit"), 3, 2);
  CHECK(log.study_outcomes.size() == 6);
  for (const auto& s : log.study_outcomes)
    CHECK(s.value == doctest::Approx(study_outcome(s.participant_index, {}, log.archive)));
}
