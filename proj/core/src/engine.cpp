#include "mrt/engine.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include "mrt/error.hpp"
#include "mrt/rng.hpp"

namespace mrt {

namespace {

// Factor coordinate of the start-weekday draw; well clear of real factors.
constexpr std::uint64_t kWeekdayFactor = 0xFFFF;

}  // namespace

ParticipantState enroll(const TrialProtocol& protocol, std::uint64_t participant_index,
                        std::uint64_t seed) {
  ParticipantState state;
  state.index = participant_index;
  state.start_weekday = static_cast<int>(
      uniform01({seed, participant_index, kWeekdayFactor, 0, DrawPurpose::enrollment}) * 7.0);
  state.baseline_levels.resize(protocol.factors.size());
  state.slot_times.resize(protocol.factors.size());
  for (std::size_t f = 0; f < protocol.factors.size(); ++f) {
    const Factor& factor = protocol.factors[f];
    if (!factor.is_micro()) {
      state.baseline_levels[f] = categorical({seed, participant_index, f, 0, DrawPurpose::enrollment},
                                             factor.probabilities);
    }
    if (factor.schedule.kind == ScheduleKind::participant_chosen_slots) {
      auto& times = state.slot_times[f];
      for (std::size_t j = 0; j < factor.schedule.slot_windows.size(); ++j) {
        const MinuteWindow w = factor.schedule.slot_windows[j];
        const double u = uniform01({seed, participant_index, f, 1 + j, DrawPurpose::enrollment});
        times.push_back(w.begin + static_cast<int>(std::floor(u * (w.end - w.begin))));
      }
      std::sort(times.begin(), times.end());
    }
  }
  return state;
}

DecisionEngine::DecisionEngine(const TrialProtocol& protocol) : protocol_(protocol) {
  for (const Factor& f : protocol.factors) {
    Gate gate;
    if (f.availability) {
      gate.availability = parse_predicate(f.availability->predicate_source, protocol.context_vars);
      gate.forced_level = f.level_index(f.availability->forced_level_id).value_or(0);
    } else if (auto dn = f.do_nothing_index()) {
      gate.forced_level = *dn;
    }
    gates_.push_back(std::move(gate));
  }
}

DecisionPointRecord DecisionEngine::process_decision_point(
    std::uint64_t trial_seed, std::uint64_t participant, std::size_t factor_index,
    std::uint64_t decision_index, std::int64_t minute, ContextSnapshot ctx,
    const DeliverFn& deliver) const {
  const Factor& factor = protocol_.factors.at(factor_index);
  if (!factor.is_micro())
    throw Error(ErrorCode::baseline_factor, factor.id + " is not micro-randomized");
  const Gate& gate = gates_[factor_index];

  DecisionPointRecord r;
  r.participant_index = participant;
  r.factor_id = factor.id;
  r.factor_index = factor_index;
  r.decision_index = decision_index;
  r.time_minutes = minute;

  if (gate.availability) {
    try {
      r.availability_reason = first_failing_conjunct(*gate.availability, ctx);
    } catch (const Error& e) {
      throw Error(ErrorCode::predicate_eval_failure,
                  factor.id + " availability: " + e.what());
    }
    r.available = !r.availability_reason.has_value();
  }

  if (!r.available) {
    r.assigned_level_id = factor.levels[gate.forced_level].id;
  } else {
    const std::size_t level = categorical(
        {trial_seed, participant, factor_index, decision_index, DrawPurpose::assignment},
        factor.probabilities);
    r.randomized = true;
    r.assigned_level_id = factor.levels[level].id;
    r.probability_used = factor.probabilities[level];
    if (!factor.levels[level].do_nothing && deliver) r.seen = deliver(factor.levels[level]);
  }
  r.context = std::move(ctx);
  return r;
}

namespace {

enum class Phase { day_start = 0, decision = 1, checkpoint = 2 };

struct QueueItem {
  std::int64_t minute;
  std::uint64_t participant;
  Phase phase;
  std::size_t factor;
  std::uint64_t seq;
  int day;

  auto key() const { return std::tie(minute, participant, phase, factor, seq); }
  bool operator>(const QueueItem& o) const { return key() > o.key(); }
};

}  // namespace

TrialLog run_trial(const SimulationRun& run) {
  if (run.population_size < 1)
    throw Error(ErrorCode::invalid_argument, "population_size must be at least 1");
  if (auto v = validate_protocol(run.protocol); !v.empty())
    throw Error(ErrorCode::invalid_argument,
                "protocol is invalid: " + v.front().code + ": " + v.front().message);

  TrialLog log;
  log.protocol = run.protocol;
  log.behavior = run.behavior;
  log.trial_seed = run.trial_seed;
  log.base_seed = run.base_seed;
  log.replication = run.replication;

  const TrialProtocol& protocol = log.protocol;
  const ParticipantConfig& behavior = log.behavior;
  const int days = protocol.study_length_days;
  const auto n = static_cast<std::size_t>(run.population_size);
  const std::size_t nf = protocol.factors.size();

  log.archive.study_days = days;
  log.archive.participants.resize(n);
  std::vector<ParticipantModel> models;
  models.reserve(n);
  std::uint64_t next_record = 1;  // 0 is the header
  for (std::size_t p = 0; p < n; ++p) {
    log.participants.push_back(enroll(protocol, p, run.trial_seed));
    ++next_record;
  }
  for (std::size_t p = 0; p < n; ++p)
    models.emplace_back(protocol, behavior, run.trial_seed, log.participants[p],
                        log.archive.participants[p]);

  const DecisionEngine engine(protocol);
  std::vector<std::vector<std::uint64_t>> decision_counter(n, std::vector<std::uint64_t>(nf, 0));
  std::vector<std::vector<int>> last_trigger_day(n, std::vector<int>(nf, -1));
  std::vector<int> checkpoints = models.empty() ? std::vector<int>{} : models[0].checkpoint_minutes();

  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;
  std::uint64_t seq = 0;
  for (std::size_t p = 0; p < n; ++p) queue.push({0, p, Phase::day_start, 0, seq++, 0});

  auto handle_events = [&](std::size_t p, const std::vector<PlannedEvent>& events) {
    for (const auto& e : events) {
      const int day = static_cast<int>(e.minute / kMinutesPerDay);
      for (std::size_t f = 0; f < nf; ++f) {
        const Factor& factor = protocol.factors[f];
        if (!factor.is_micro() || factor.schedule.kind != ScheduleKind::event_triggered ||
            factor.schedule.trigger_event_id != e.event_id || last_trigger_day[p][f] == day)
          continue;
        last_trigger_day[p][f] = day;
        queue.push({e.minute, p, Phase::decision, f, seq++, day});
      }
    }
  };

  while (!queue.empty()) {
    const QueueItem item = queue.top();
    queue.pop();
    const std::size_t p = item.participant;
    ParticipantModel& model = models[p];

    switch (item.phase) {
      case Phase::day_start: {
        const int day = item.day;
        model.advance_to(item.minute);
        if (day > 0)
          log.timeline.push_back({TimelineEntry::Kind::signal_day, p, day - 1, next_record++});
        if (day == days) break;
        handle_events(p, model.begin_day(day));
        const std::int64_t day_start = static_cast<std::int64_t>(day) * kMinutesPerDay;
        for (std::size_t f = 0; f < nf; ++f) {
          const Factor& factor = protocol.factors[f];
          if (!factor.is_micro()) continue;
          const std::vector<int>* times = nullptr;
          if (factor.schedule.kind == ScheduleKind::clock_times) times = &factor.schedule.clock_times;
          if (factor.schedule.kind == ScheduleKind::participant_chosen_slots)
            times = &log.participants[p].slot_times[f];
          if (!times) continue;
          for (int t : *times) queue.push({day_start + t, p, Phase::decision, f, seq++, day});
        }
        for (int c : checkpoints) queue.push({day_start + c, p, Phase::checkpoint, 0, seq++, day});
        queue.push({day_start + kMinutesPerDay, p, Phase::day_start, 0, seq++, day + 1});
        break;
      }
      case Phase::checkpoint:
        handle_events(p, model.checkpoint(item.minute));
        break;
      case Phase::decision: {
        const std::size_t f = item.factor;
        const std::uint64_t index = decision_counter[p][f]++;
        auto record = engine.process_decision_point(
            run.trial_seed, p, f, index, item.minute,
            model.snapshot(item.minute, protocol.context_vars),
            [&](const Level& level) { return model.deliver(f, level, index, item.minute); });
        record.record_id = next_record++;
        if (record.delivered()) ++next_record;  // delivery record follows
        log.timeline.push_back({TimelineEntry::Kind::decision, log.decisions.size(), 0, record.record_id});
        log.decisions.push_back(std::move(record));
        break;
      }
    }
  }
  return log;
}

DeliverySummary summarize_deliveries(const TrialLog& log) {
  DeliverySummary out;
  const auto n = log.participants.size();
  const double days = log.protocol.study_length_days;
  const std::size_t nf = log.protocol.factors.size();
  std::vector<std::vector<double>> delivered(nf, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> seen(nf, std::vector<double>(n, 0.0));
  for (const auto& r : log.decisions) {
    if (!r.delivered()) continue;
    delivered[r.factor_index][r.participant_index] += 1.0 / days;
    if (*r.seen) seen[r.factor_index][r.participant_index] += 1.0 / days;
  }
  auto mean_se = [](const std::vector<double>& v) {
    double mean = 0, ss = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) ss += (x - mean) * (x - mean);
    const double se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) /
                                               static_cast<double>(v.size()))
                                   : 0.0;
    return std::pair{mean, se};
  };
  std::vector<double> pushes(n, 0.0);
  for (std::size_t f = 0; f < nf; ++f) {
    if (!log.protocol.factors[f].is_micro()) continue;
    FactorDeliverySummary s;
    s.factor_id = log.protocol.factors[f].id;
    std::tie(s.delivered_per_day, s.delivered_se) = mean_se(delivered[f]);
    std::tie(s.seen_per_day, s.seen_se) = mean_se(seen[f]);
    for (std::size_t p = 0; p < n; ++p) pushes[p] += delivered[f][p];
    out.factors.push_back(s);
  }
  std::tie(out.pushes_per_day, out.pushes_se) = mean_se(pushes);
  return out;
}

}  // namespace mrt
