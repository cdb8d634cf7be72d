#include "mrt/protocol.hpp"

#include <set>

#include "mrt/error.hpp"
#include "mrt/predicate.hpp"

namespace mrt {

std::optional<int> Schedule::points_per_day() const {
  switch (kind) {
    case ScheduleKind::clock_times: return static_cast<int>(clock_times.size());
    case ScheduleKind::participant_chosen_slots: return slot_count;
    default: return std::nullopt;
  }
}

std::optional<std::size_t> Factor::level_index(std::string_view level_id) const {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i].id == level_id) return i;
  return std::nullopt;
}

std::optional<std::size_t> Factor::do_nothing_index() const {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i].do_nothing) return i;
  return std::nullopt;
}

const Factor* TrialProtocol::find_factor(std::string_view id) const {
  for (const auto& f : factors)
    if (f.id == id) return &f;
  return nullptr;
}

std::optional<std::size_t> TrialProtocol::factor_index(std::string_view id) const {
  for (std::size_t i = 0; i < factors.size(); ++i)
    if (factors[i].id == id) return i;
  return std::nullopt;
}

std::string_view to_string(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::overall: return "overall";
    case QuestionKind::time_trend: return "time-trend";
    case QuestionKind::moderation: return "moderation";
    case QuestionKind::baseline: return "baseline";
  }
  return "overall";
}

std::optional<QuestionKind> parse_question_kind(std::string_view text) {
  if (text == "overall") return QuestionKind::overall;
  if (text == "time-trend") return QuestionKind::time_trend;
  if (text == "moderation") return QuestionKind::moderation;
  if (text == "baseline") return QuestionKind::baseline;
  return std::nullopt;
}

std::vector<ParticipantParamDecl> derive_participant_params(const std::vector<Factor>& factors) {
  std::vector<ParticipantParamDecl> out;
  for (const auto& f : factors) {
    if (f.schedule.kind != ScheduleKind::participant_chosen_slots) continue;
    out.push_back({f.id + ".slots", f.id, f.schedule.slot_windows});
  }
  return out;
}

namespace {

class Collector {
 public:
  void add(std::string code, std::string message) {
    out_.push_back({std::move(code), std::move(message)});
  }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

void check_schedule(const TrialProtocol& p, const Factor& f, Collector& c) {
  const Schedule& s = f.schedule;
  const std::string where = "factor '" + f.id + "': ";
  if (!f.is_micro()) {
    if (s.kind != ScheduleKind::at_enrollment)
      c.add("BASELINE_SCHEDULE_INVALID", where + "baseline factors are randomized at enrollment");
    return;
  }
  switch (s.kind) {
    case ScheduleKind::at_enrollment:
      c.add("MICRO_SCHEDULE_INVALID", where + "micro-randomized factors need a decision-point schedule");
      break;
    case ScheduleKind::clock_times:
      if (s.clock_times.empty()) c.add("CLOCK_TIMES_EMPTY", where + "no clock times");
      for (std::size_t i = 0; i < s.clock_times.size(); ++i) {
        if (s.clock_times[i] < 0 || s.clock_times[i] >= kMinutesPerDay)
          c.add("CLOCK_TIME_OUT_OF_RANGE", where + "clock time outside the day");
        if (i > 0 && s.clock_times[i] <= s.clock_times[i - 1])
          c.add("CLOCK_TIMES_NOT_INCREASING", where + "clock times must strictly increase");
      }
      break;
    case ScheduleKind::participant_chosen_slots:
      if (s.slot_count < 1 || s.slot_count != static_cast<int>(s.slot_windows.size()))
        c.add("SLOT_COUNT_MISMATCH", where + "slot_count must equal the number of windows");
      for (const auto& w : s.slot_windows)
        if (w.begin < 0 || w.end > kMinutesPerDay || w.begin >= w.end)
          c.add("SLOT_WINDOW_INVALID", where + "slot window must be a non-empty range within the day");
      break;
    case ScheduleKind::event_triggered: {
      const ContextVarDecl* d = find_decl(p.context_vars, s.trigger_event_id);
      if (!d)
        c.add("UNDECLARED_VARIABLE", where + "trigger event '" + s.trigger_event_id + "' is not declared");
      else if (d->type != VarType::event)
        c.add("TRIGGER_NOT_EVENT", where + "trigger '" + s.trigger_event_id + "' is not an event");
      break;
    }
  }
}

void check_outcome(const TrialProtocol& p, const Factor& f, Collector& c) {
  const OutcomeSpec& o = f.proximal_outcome;
  const std::string where = "factor '" + f.id + "' outcome: ";
  if (o.window == OutcomeWindow::offset_duration && (o.offset < 0 || o.duration < 1))
    c.add("OUTCOME_WINDOW_INVALID", where + "need offset >= 0 and duration >= 1");
  if (o.signals.empty()) {
    c.add("UNKNOWN_SIGNAL", where + "no signal");
    return;
  }
  bool all_events = true;
  for (const auto& sig : o.signals) {
    if (sig == kStepSignal) {
      all_events = false;
      if (o.signals.size() > 1)
        c.add("UNKNOWN_SIGNAL", where + "steps cannot be combined with event signals");
      continue;
    }
    const ContextVarDecl* d = find_decl(p.context_vars, sig);
    if (!d || d->type != VarType::event) {
      c.add("UNKNOWN_SIGNAL", where + "'" + sig + "' is neither steps nor a declared event");
      all_events = false;
    }
  }
  if (o.aggregation == Aggregation::indicator && !all_events)
    c.add("INDICATOR_NEEDS_EVENT_SIGNAL", where + "indicator aggregation needs event signals");
  if ((o.aggregation == Aggregation::daily_mean) != (o.window == OutcomeWindow::whole_study))
    c.add("AGGREGATION_WINDOW_MISMATCH", where + "daily-mean goes with whole-study windows only");
}

void check_factor(const TrialProtocol& p, const Factor& f, Collector& c) {
  const std::string where = "factor '" + f.id + "': ";
  if (f.levels.empty()) c.add("NO_LEVELS", where + "at least one level required");

  std::set<std::string> level_ids;
  int do_nothing = 0;
  for (const auto& l : f.levels) {
    if (!level_ids.insert(l.id).second) c.add("DUPLICATE_LEVEL", where + "level '" + l.id + "' repeated");
    if (l.do_nothing) ++do_nothing;
  }
  if (do_nothing > 1) c.add("MULTIPLE_DO_NOTHING", where + "at most one do-nothing level");

  if (f.probabilities.size() != f.levels.size()) {
    c.add("PROB_COUNT_MISMATCH", where + "one probability per level required");
  } else {
    std::int64_t sum = 0;
    for (const auto& pr : f.probabilities) {
      if (!pr.in_unit_interval())
        c.add("PROB_OUT_OF_RANGE", where + "probability " + pr.to_string() + " outside [0,1]");
      sum += pr.micros();
    }
    if (sum != Probability::kScale)
      c.add("PROB_SUM_NOT_ONE",
            where + "probabilities sum to " + Probability::from_micros(sum).to_string());
  }

  check_schedule(p, f, c);

  if (f.availability) {
    if (!f.is_micro()) {
      c.add("BASELINE_HAS_AVAILABILITY", where + "baseline factors cannot carry availability rules");
    } else {
      if (do_nothing != 1)
        c.add("AVAILABILITY_NEEDS_DO_NOTHING",
              where + "an availability rule requires exactly one do-nothing level");
      auto idx = f.level_index(f.availability->forced_level_id);
      if (!idx || !f.levels[*idx].do_nothing)
        c.add("FORCED_LEVEL_NOT_DO_NOTHING",
              where + "forced level '" + f.availability->forced_level_id + "' is not the do-nothing level");
    }
    try {
      parse_predicate(f.availability->predicate_source, p.context_vars);
    } catch (const Error& e) {
      c.add(e.code() == ErrorCode::unknown_variable ? "UNDECLARED_VARIABLE" : "PREDICATE_INVALID",
            where + e.what());
    }
  }

  check_outcome(p, f, c);
}

}  // namespace

std::vector<Violation> validate_protocol(const TrialProtocol& p) {
  Collector c;
  if (p.study_length_days < 1) c.add("STUDY_LENGTH_INVALID", "study_length_days must be >= 1");
  if (p.time_resolution != 1) c.add("TIME_RESOLUTION_INVALID", "time_resolution is fixed at 1 minute");

  std::set<std::string> var_ids;
  for (const auto& v : p.context_vars)
    if (!var_ids.insert(v.id).second)
      c.add("DUPLICATE_CONTEXT_VAR", "context variable '" + v.id + "' declared twice");

  if (p.factors.empty()) c.add("NO_FACTORS", "at least one factor required");
  std::set<std::string> factor_ids;
  for (const auto& f : p.factors) {
    if (!factor_ids.insert(f.id).second)
      c.add("DUPLICATE_FACTOR", "factor '" + f.id + "' declared twice");
    check_factor(p, f, c);
  }
  return c.take();
}

Rational expected_deliveries_per_day(const Factor& factor) {
  if (!factor.is_micro())
    throw Error(ErrorCode::baseline_factor, "factor '" + factor.id + "' is baseline-randomized");
  auto points = factor.schedule.points_per_day();
  if (!points)
    throw Error(ErrorCode::unscheduled_factor,
                "factor '" + factor.id + "' has no fixed number of daily decision points");
  auto dn = factor.do_nothing_index();
  if (!dn || *dn >= factor.probabilities.size()) return Rational::make(*points, 1);
  const std::int64_t deliver = Probability::kScale - factor.probabilities[*dn].micros();
  return Rational::make(static_cast<std::int64_t>(*points) * deliver, Probability::kScale);
}

}  // namespace mrt
