#include "mrt/outcomes.hpp"

#include <algorithm>

#include "mrt/error.hpp"

namespace mrt {

namespace {

double step_sum(const ParticipantSignals& s, std::int64_t begin, std::int64_t end) {
  std::int64_t total = 0;
  for (std::int64_t m = begin; m < end; ++m) total += s.steps[static_cast<std::size_t>(m)];
  return static_cast<double>(total);
}

bool any_event(const ParticipantSignals& s, const std::vector<std::string>& ids, std::int64_t begin,
               std::int64_t end) {
  for (const auto& id : ids) {
    auto it = s.events.find(id);
    if (it == s.events.end()) continue;
    auto lo = std::lower_bound(it->second.begin(), it->second.end(), begin);
    if (lo != it->second.end() && *lo < end) return true;
  }
  return false;
}

}  // namespace

double proximal_outcome(const DecisionPointRecord& record, const OutcomeSpec& spec,
                        const SignalArchive& archive) {
  if (record.participant_index >= archive.participants.size())
    throw Error(ErrorCode::invalid_argument, "no signals for participant " +
                                                 std::to_string(record.participant_index));
  const ParticipantSignals& s = archive.participants[record.participant_index];
  const std::int64_t study_end = static_cast<std::int64_t>(archive.study_days) * kMinutesPerDay;
  const std::int64_t t = record.time_minutes;
  const std::int64_t day_start = t - t % kMinutesPerDay;

  std::int64_t begin = 0, end = 0;
  switch (spec.window) {
    case OutcomeWindow::offset_duration:
      begin = t + spec.offset;
      end = begin + spec.duration;
      break;
    case OutcomeWindow::next_day:
      begin = day_start + kMinutesPerDay;
      end = begin + kMinutesPerDay;
      break;
    case OutcomeWindow::same_day_remainder:
      begin = t;
      end = day_start + kMinutesPerDay;
      break;
    case OutcomeWindow::whole_study:
      return study_outcome(record.participant_index, spec, archive);
  }
  if (begin < 0 || end > study_end)
    throw Error(ErrorCode::window_out_of_range,
                "window [" + std::to_string(begin) + ", " + std::to_string(end) +
                    ") ends after the study (" + std::to_string(study_end) + ")");
  if (spec.aggregation == Aggregation::indicator)
    return any_event(s, spec.signals, begin, end) ? 1.0 : 0.0;
  return step_sum(s, begin, end);
}

double study_outcome(std::uint64_t participant, const OutcomeSpec&, const SignalArchive& archive) {
  const ParticipantSignals& s = archive.participants.at(participant);
  if (archive.study_days <= 0) return 0.0;
  double total = 0;
  for (int d = 0; d < archive.study_days; ++d) total += static_cast<double>(s.day_total(d));
  return total / archive.study_days;
}

void enrich_outcomes(TrialLog& log) {
  for (auto& r : log.decisions) {
    const Factor& f = log.protocol.factors.at(r.factor_index);
    try {
      r.proximal_outcome = proximal_outcome(r, f.proximal_outcome, log.archive);
      r.outcome_missing = false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::window_out_of_range) throw;
      r.proximal_outcome.reset();
      r.outcome_missing = true;
    }
  }
  log.study_outcomes.clear();
  for (std::size_t fi = 0; fi < log.protocol.factors.size(); ++fi) {
    const Factor& f = log.protocol.factors[fi];
    if (f.is_micro() || f.proximal_outcome.window != OutcomeWindow::whole_study) continue;
    for (const auto& p : log.participants) {
      const auto level = p.baseline_levels.at(fi);
      if (!level) continue;
      log.study_outcomes.push_back(
          {p.index, f.id, f.levels[*level].id, study_outcome(p.index, f.proximal_outcome, log.archive)});
    }
  }
}

}  // namespace mrt
