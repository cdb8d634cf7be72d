#include "mrt/participant.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mrt/error.hpp"

namespace mrt {

std::int64_t ParticipantSignals::day_total(int day) const {
  const auto begin = steps.begin() + static_cast<std::ptrdiff_t>(day) * kMinutesPerDay;
  std::int64_t total = 0;
  for (auto it = begin; it != begin + kMinutesPerDay; ++it) total += *it;
  return total;
}

std::vector<double> StepModel::default_profile() {
  // Expected steps/minute by hour of day; asleep from 23:00 to 07:00.
  static constexpr double hourly[24] = {0, 0, 0, 0, 0, 0, 0, 4, 8, 6, 5, 6,
                                        9, 7, 5, 5, 6, 9, 8, 7, 5, 3, 1, 0};
  std::vector<double> profile(kMinutesPerDay);
  for (int m = 0; m < kMinutesPerDay; ++m) profile[m] = hourly[m / 60];
  return profile;
}

double StepModel::profile_daily_total() const {
  double total = 0;
  for (double r : baseline_rate) total += r;
  return total;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double nearest_rank_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::invalid_argument, "quantile of an empty series");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::ptrdiff_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::ptrdiff_t>(rank, 1, static_cast<std::ptrdiff_t>(sorted.size()));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

std::optional<double> compute_step_goal(const StepGoalPolicy& policy,
                                        std::span<const double> trailing_daily_totals,
                                        const DrawKey& day_key) {
  KeyedEngine engine(day_key);
  const double u_rest = engine.uniform();
  const double u_quantile = engine.uniform();
  if (policy.rest_days && u_rest < policy.rest_rate) return std::nullopt;

  const auto window = static_cast<std::size_t>(std::max(policy.trailing_window_days, 1));
  if (trailing_daily_totals.empty()) return policy.starter_goal;
  auto tail = trailing_daily_totals.last(std::min(window, trailing_daily_totals.size()));

  const double q = policy.kind == GoalPolicyKind::fixed_percentile
                       ? policy.quantile
                       : policy.quantile_low +
                             (policy.quantile_high - policy.quantile_low) * u_quantile;
  return nearest_rank_quantile(tail, q);
}

int generate_minute_steps(double mean, double dispersion, const DrawKey& key) {
  if (!(mean > 0.0)) return 0;
  KeyedEngine engine(key);
  double rate = mean;
  if (dispersion > 0.0) {
    std::gamma_distribution<double> gamma(dispersion, mean / dispersion);
    rate = gamma(engine);
    if (!(rate > 0.0)) return 0;
  }
  std::poisson_distribution<int> poisson(rate);
  return poisson(engine);
}

bool resolve_seen(double p_seen, const DrawKey& key) { return bernoulli(key, p_seen); }

DrawKey behavior_key(std::uint64_t seed, std::uint64_t participant, BehaviorChannel channel,
                     std::uint64_t counter) {
  return DrawKey{seed, participant, static_cast<std::uint64_t>(channel), counter,
                 DrawPurpose::behavior};
}

namespace {

double lognormal_unit_mean(double sd, const DrawKey& key) {
  if (sd <= 0.0) return 1.0;
  KeyedEngine engine(key);
  std::normal_distribution<double> normal(0.0, 1.0);
  return std::exp(sd * normal(engine) - 0.5 * sd * sd);
}

}  // namespace

ParticipantModel::ParticipantModel(const TrialProtocol& protocol, const ParticipantConfig& config,
                                   std::uint64_t seed, const ParticipantState& state,
                                   ParticipantSignals& out)
    : protocol_(protocol), config_(config), seed_(seed), state_(state), out_(out) {
  const int days = protocol.study_length_days;
  out_.steps.assign(static_cast<std::size_t>(protocol.study_minutes()), 0);
  out_.daily_goal.assign(static_cast<std::size_t>(days), std::nullopt);
  out_.events.clear();
  for (const auto& v : protocol.context_vars)
    if (v.type == VarType::event) out_.events[v.id];

  person_multiplier_ = lognormal_unit_mean(config.steps.participant_sd,
                                           behavior_key(seed, state.index, BehaviorChannel::traits, 0));
  profile_total_ = config.steps.profile_daily_total();
  day_multiplier_.assign(static_cast<std::size_t>(days), 1.0);
  day_extra_steps_.assign(static_cast<std::size_t>(days) + 1, 0.0);
  engagement_boost_.assign(static_cast<std::size_t>(days) + 1, 0.0);
  food_boost_.assign(static_cast<std::size_t>(days) + 1, 0.0);

  std::optional<GoalPolicyKind> goal_kind;
  bool rest = false;
  for (std::size_t f = 0; f < protocol.factors.size(); ++f) {
    if (f >= state.baseline_levels.size() || !state.baseline_levels[f]) continue;
    const Level& level = protocol.factors[f].levels[*state.baseline_levels[f]];
    if (level.payload == payload::fixed_percentile) goal_kind = GoalPolicyKind::fixed_percentile;
    if (level.payload == payload::variable_percentile) goal_kind = GoalPolicyKind::variable_percentile;
    if (level.payload == payload::rest_days) rest = true;
  }
  if (goal_kind) {
    const GoalModel& g = config.goals;
    goal_policy_ = StepGoalPolicy{*goal_kind,          g.fixed_quantile, g.variable_quantile_low,
                                  g.variable_quantile_high, g.trailing_window_days, rest,
                                  g.rest_rate,         g.starter_goal};
  }
}

bool ParticipantModel::declared(std::string_view event_id) const {
  return out_.events.find(event_id) != out_.events.end();
}

void ParticipantModel::record_event(std::string_view id, std::int64_t minute) {
  if (minute < 0 || minute >= protocol_.study_minutes()) return;
  auto it = out_.events.find(id);
  if (it == out_.events.end()) return;
  auto& times = it->second;
  times.insert(std::upper_bound(times.begin(), times.end(), minute), minute);
}

std::vector<int> ParticipantModel::checkpoint_minutes() const {
  std::vector<int> out;
  if (declared("survey_completed") || declared("tasks_completed"))
    out.push_back(config_.engagement.prompt_minute);
  if (declared("food_logged")) out.push_back(config_.engagement.food_checkpoint_minute);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool ParticipantModel::inside(const std::vector<Episode>& episodes, std::int64_t minute) {
  auto it = std::upper_bound(episodes.begin(), episodes.end(), minute,
                             [](std::int64_t m, const Episode& e) { return m < e.begin; });
  if (it == episodes.begin()) return false;
  --it;
  return minute < it->end;
}

std::vector<ParticipantModel::Episode> ParticipantModel::plan_episodes(
    int day, std::uint64_t kind, double rate, const std::vector<int>& durations,
    MinuteWindow range, const std::vector<Episode>& existing) {
  std::vector<Episode> planned;
  if (rate <= 0.0) return planned;
  KeyedEngine engine(behavior_key(seed_, state_.index, BehaviorChannel::episodes,
                                  static_cast<std::uint64_t>(day) * 4 + kind));
  std::poisson_distribution<int> count(rate);
  const int n = count(engine);
  const std::int64_t day_start = static_cast<std::int64_t>(day) * kMinutesPerDay;
  const int wake = config_.context.wake_minute;
  const int sleep = config_.context.sleep_minute;

  auto overlaps = [](const std::vector<Episode>& eps, const Episode& e) {
    return std::any_of(eps.begin(), eps.end(),
                       [&](const Episode& o) { return e.begin < o.end && o.begin < e.end; });
  };
  for (int i = 0; i < n; ++i) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      int duration;
      if (!durations.empty()) {
        duration = durations[static_cast<std::size_t>(engine() % durations.size())];
      } else {
        const int span = std::max(range.end - range.begin, 0) + 1;
        duration = range.begin + static_cast<int>(engine() % static_cast<std::uint64_t>(span));
      }
      const int latest = std::max(sleep - duration, wake + 1);
      const int start = wake + static_cast<int>(engine() % static_cast<std::uint64_t>(latest - wake));
      Episode e{day_start + start, day_start + start + duration};
      if (overlaps(planned, e)) continue;
      // Earlier days' episodes can spill past midnight.
      std::size_t from = existing.size() > 4 ? existing.size() - 4 : 0;
      bool clash = false;
      for (std::size_t k = from; k < existing.size(); ++k)
        if (e.begin < existing[k].end && existing[k].begin < e.end) clash = true;
      if (clash) continue;
      planned.push_back(e);
      break;
    }
  }
  std::sort(planned.begin(), planned.end(),
            [](const Episode& a, const Episode& b) { return a.begin < b.begin; });
  return planned;
}

std::vector<PlannedEvent> ParticipantModel::begin_day(int day) {
  std::vector<PlannedEvent> events;
  day_multiplier_[static_cast<std::size_t>(day)] = lognormal_unit_mean(
      config_.steps.day_sd,
      behavior_key(seed_, state_.index, BehaviorChannel::day_multiplier, static_cast<std::uint64_t>(day)));

  const ContextModel& ctx = config_.context;
  if (ctx.enabled) {
    auto driving = plan_episodes(day, 0, ctx.driving_per_day, {}, ctx.driving_minutes, driving_);
    auto bouts = plan_episodes(day, 1, ctx.bouts_per_day, {}, ctx.bout_minutes, bouts_);
    auto snoozes = plan_episodes(day, 2, ctx.snoozes_per_day, ctx.snooze_durations, {}, snoozes_);
    driving_.insert(driving_.end(), driving.begin(), driving.end());
    bouts_.insert(bouts_.end(), bouts.begin(), bouts.end());
    snoozes_.insert(snoozes_.end(), snoozes.begin(), snoozes.end());
    for (const auto& b : bouts) {
      if (!declared("activity_bout") || b.end >= protocol_.study_minutes()) continue;
      record_event("activity_bout", b.end);
      events.push_back({"activity_bout", b.end});
    }
    for (const auto& s : snoozes) {
      if (!declared("snooze_started")) continue;
      record_event("snooze_started", s.begin);
      events.push_back({"snooze_started", s.begin});
    }
  }

  if (goal_policy_) {
    std::vector<double> totals;
    const int window = std::max(goal_policy_->trailing_window_days, 1);
    for (int d = std::max(0, day - window); d < day; ++d)
      totals.push_back(static_cast<double>(out_.day_total(d)));
    auto goal = compute_step_goal(
        *goal_policy_, totals,
        behavior_key(seed_, state_.index, BehaviorChannel::goal, static_cast<std::uint64_t>(day)));
    out_.daily_goal[static_cast<std::size_t>(day)] = goal;
    if (goal && !totals.empty()) {
      double mean = 0;
      for (double t : totals) mean += t;
      mean /= static_cast<double>(totals.size());
      day_extra_steps_[static_cast<std::size_t>(day)] +=
          config_.steps.goal_responsiveness * std::max(0.0, *goal - mean);
    }
  }
  return events;
}

std::vector<PlannedEvent> ParticipantModel::checkpoint(std::int64_t minute) {
  std::vector<PlannedEvent> events;
  const int day = static_cast<int>(minute / kMinutesPerDay);
  const int mod = static_cast<int>(minute % kMinutesPerDay);
  const EngagementModel& e = config_.engagement;
  const bool weekday = !weekend(day);

  auto plan = [&](std::string_view id, double logit, std::uint64_t slot) {
    if (!declared(id)) return;
    KeyedEngine engine(behavior_key(seed_, state_.index, BehaviorChannel::engagement,
                                    static_cast<std::uint64_t>(day) * 4 + slot));
    if (engine.uniform() >= logistic(logit)) return;
    const int room = kMinutesPerDay - mod - 1;
    if (room <= 0) return;
    const std::int64_t at =
        minute + 1 + static_cast<std::int64_t>(engine.uniform() * static_cast<double>(room));
    record_event(id, at);
    events.push_back({std::string(id), at});
  };

  if (mod == e.prompt_minute) {
    const double boost = engagement_boost_[static_cast<std::size_t>(day)] +
                         (weekday ? e.weekday_offset : 0.0);
    plan("survey_completed", e.survey_logit + boost, 0);
    plan("tasks_completed", e.tasks_logit + boost, 1);
  }
  if (mod == e.food_checkpoint_minute)
    plan("food_logged", e.food_logit + food_boost_[static_cast<std::size_t>(day)], 2);
  std::sort(events.begin(), events.end(),
            [](const PlannedEvent& a, const PlannedEvent& b) { return a.minute < b.minute; });
  return events;
}

double ParticipantModel::expected_steps(std::int64_t minute) const {
  const auto day = static_cast<std::size_t>(minute / kMinutesPerDay);
  const auto mod = static_cast<std::size_t>(minute % kMinutesPerDay);
  const StepModel& s = config_.steps;
  const double profile = s.baseline_rate[mod];
  double mean = profile * person_multiplier_ * day_multiplier_[day];
  if (profile_total_ > 0.0) mean += profile / profile_total_ * day_extra_steps_[day];
  if (inside(bouts_, minute)) mean += s.bout_rate;
  for (const auto& w : window_effects_)
    if (w.begin <= minute && minute < w.end) mean += w.per_minute;
  return mean;
}

void ParticipantModel::advance_to(std::int64_t minute) {
  minute = std::min<std::int64_t>(minute, protocol_.study_minutes());
  const double dispersion = config_.steps.dispersion;
  for (; generated_ < minute; ++generated_) {
    const double mean = expected_steps(generated_);
    const int steps = generate_minute_steps(
        mean, dispersion,
        behavior_key(seed_, state_.index, BehaviorChannel::steps, static_cast<std::uint64_t>(generated_)));
    out_.steps[static_cast<std::size_t>(generated_)] =
        static_cast<std::uint16_t>(std::min(steps, 65535));
  }
  std::erase_if(window_effects_, [&](const WindowEffect& w) { return w.end <= generated_; });
}

bool ParticipantModel::occurred_on_day(std::string_view event_id, int day,
                                       std::int64_t until) const {
  auto it = out_.events.find(event_id);
  if (it == out_.events.end()) return false;
  const std::int64_t begin = static_cast<std::int64_t>(day) * kMinutesPerDay;
  auto lo = std::lower_bound(it->second.begin(), it->second.end(), begin);
  return lo != it->second.end() && *lo <= until && *lo < begin + kMinutesPerDay;
}

std::optional<double> ParticipantModel::minutes_since(std::string_view event_id,
                                                      std::int64_t minute) const {
  auto it = out_.events.find(event_id);
  if (it == out_.events.end()) return std::nullopt;
  auto up = std::upper_bound(it->second.begin(), it->second.end(), minute);
  if (up == it->second.begin()) return std::nullopt;
  return static_cast<double>(minute - *(up - 1));
}

double ParticipantModel::location(std::int64_t minute) const {
  const int day = static_cast<int>(minute / kMinutesPerDay);
  const int hour = static_cast<int>(minute % kMinutesPerDay) / 60;
  const double u = uniform01(behavior_key(seed_, state_.index, BehaviorChannel::location,
                                          static_cast<std::uint64_t>(day) * 24 + static_cast<std::uint64_t>(hour)));
  constexpr double home = 0, work = 1, other = 2;
  if (!weekend(day) && hour >= 9 && hour < 17) {
    const double wp = config_.context.work_probability;
    if (u < wp) return work;
    return u < wp + (1.0 - wp) / 2.0 ? other : home;
  }
  return u < 0.8 ? home : other;
}

ContextSnapshot ParticipantModel::snapshot(std::int64_t minute, const ContextDecls& decls) const {
  ContextSnapshot snap;
  const int day = static_cast<int>(minute / kMinutesPerDay);
  const int mod = static_cast<int>(minute % kMinutesPerDay);
  for (const auto& d : decls) {
    const std::string& id = d.id;
    switch (d.type) {
      case VarType::event:
        if (auto since = minutes_since(id, minute)) snap.minutes_since.emplace(id, *since);
        break;
      case VarType::boolean: {
        std::optional<bool> v;
        if (id == "driving") v = inside(driving_, minute);
        else if (id == "currently_active") v = inside(bouts_, minute);
        else if (id == "snoozed") v = inside(snoozes_, minute);
        else if (id == "weekend") v = weekend(day);
        else if (id == "survey_completed_today") v = occurred_on_day("survey_completed", day, minute);
        else if (id == "tasks_completed_today") v = occurred_on_day("tasks_completed", day, minute);
        else if (id == "food_logged_today") v = occurred_on_day("food_logged", day, minute);
        else if (id == "prior_day_self_report")
          v = day > 0 && (occurred_on_day("survey_completed", day - 1, minute) ||
                          occurred_on_day("tasks_completed", day - 1, minute));
        else if (id == "rest_day")
          v = goal_policy_ && !out_.daily_goal[static_cast<std::size_t>(day)].has_value();
        if (v) snap.values.emplace(id, *v);
        break;
      }
      case VarType::number: {
        std::optional<double> v;
        if (id == "day_in_study") v = day;
        else if (id == "minute_of_day") v = mod;
        else if (id == "hour_of_day") v = mod / 60;
        else if (id == "day_of_week") v = (state_.start_weekday + day) % 7;
        else if (id == "location") v = location(minute);
        else if (id == "step_goal") {
          const auto& g = out_.daily_goal[static_cast<std::size_t>(day)];
          v = g ? *g : 0.0;
        }
        if (v) snap.values.emplace(id, *v);
        break;
      }
    }
  }
  return snap;
}

bool ParticipantModel::deliver(std::size_t factor_index, const Level& level,
                               std::uint64_t decision_index, std::int64_t minute) {
  const bool seen = resolve_seen(
      config_.context.p_seen,
      behavior_key(seed_, state_.index, BehaviorChannel::seen,
                   (static_cast<std::uint64_t>(factor_index) << 40) | decision_index));
  if (!seen) return false;

  const auto day = static_cast<std::size_t>(minute / kMinutesPerDay);
  const StepModel& s = config_.steps;
  const EngagementModel& e = config_.engagement;
  const std::string& p = level.payload;
  if (p == payload::walking_suggestion || p == payload::antisedentary_suggestion) {
    double total = p == payload::walking_suggestion ? s.effect_walk : s.effect_antisedentary;
    total *= std::pow(s.effect_decay_per_day, static_cast<double>(day));
    if (weekend(static_cast<int>(day))) total *= s.weekend_effect_multiplier;
    if (total != 0.0 && s.effect_window > 0)
      window_effects_.push_back({minute, minute + s.effect_window, total / s.effect_window});
  } else if (p == payload::structured_planning) {
    day_extra_steps_[day + 1] += s.planning_structured;
  } else if (p == payload::unstructured_planning) {
    day_extra_steps_[day + 1] += s.planning_unstructured;
  } else if (p == payload::reciprocity_message) {
    engagement_boost_[day] += e.effect_reciprocity;
  } else if (p == payload::persuasive_reminder) {
    engagement_boost_[day] += e.effect_persuasive;
  } else if (p == payload::meme_reward) {
    engagement_boost_[day + 1] += e.effect_meme;
  } else if (p == payload::life_insight) {
    engagement_boost_[day + 1] += e.effect_insight;
  } else if (p == payload::food_reminder) {
    food_boost_[day] += e.effect_food_reminder;
  }
  return true;
}

}  // namespace mrt
