#include <sstream>

#include "mrt/config.hpp"
#include "mrt/error.hpp"
#include "mrt/participant.hpp"
#include "mrt/protocol_io.hpp"

namespace mrt {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::config_error, what);
}

std::vector<double> expand_profile(const std::vector<double>& values) {
  if (values.size() == static_cast<std::size_t>(kMinutesPerDay)) return values;
  require(values.size() == 24, "baseline_rate needs 24 hourly or 1440 per-minute values");
  std::vector<double> profile(kMinutesPerDay);
  for (int m = 0; m < kMinutesPerDay; ++m) profile[m] = values[static_cast<std::size_t>(m / 60)];
  return profile;
}

bool hourly_constant(const std::vector<double>& profile) {
  for (int m = 0; m < kMinutesPerDay; ++m)
    if (profile[m] != profile[m - m % 60]) return false;
  return true;
}

MinuteWindow parse_range(const std::string& s) {
  auto dash = s.find('-');
  require(dash != std::string::npos, "duration range '" + s + "' is not MIN-MAX");
  return {static_cast<int>(parse_double(s.substr(0, dash))),
          static_cast<int>(parse_double(s.substr(dash + 1)))};
}

std::string list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

ParticipantConfig parse_behavior(std::string_view text) {
  const auto doc = ConfigDocument::parse(text);
  for (const auto& s : doc.sections())
    require(s.name == "steps" || s.name == "context" || s.name == "engagement" || s.name == "goals",
            "unknown behavior section [" + s.name + "]");

  ParticipantConfig c;
  {
    SectionReader r(doc.find("steps"), "steps");
    StepModel& s = c.steps;
    s.baseline_rate = expand_profile(r.doubles_or("baseline_rate", s.baseline_rate));
    s.dispersion = r.double_or("dispersion", s.dispersion);
    s.participant_sd = r.double_or("participant_sd", s.participant_sd);
    s.day_sd = r.double_or("day_sd", s.day_sd);
    s.bout_rate = r.double_or("bout_rate", s.bout_rate);
    s.effect_walk = r.double_or("effect_walk", s.effect_walk);
    s.effect_antisedentary = r.double_or("effect_antisedentary", s.effect_antisedentary);
    s.effect_window = r.int_or("effect_window", s.effect_window);
    s.effect_decay_per_day = r.double_or("effect_decay_per_day", s.effect_decay_per_day);
    s.weekend_effect_multiplier = r.double_or("weekend_effect_multiplier", s.weekend_effect_multiplier);
    s.planning_structured = r.double_or("planning_structured", s.planning_structured);
    s.planning_unstructured = r.double_or("planning_unstructured", s.planning_unstructured);
    s.goal_responsiveness = r.double_or("goal_responsiveness", s.goal_responsiveness);
    r.check_consumed();
    for (double v : s.baseline_rate) require(v >= 0, "baseline_rate values must be non-negative");
    require(s.dispersion >= 0, "dispersion must be >= 0");
    require(s.participant_sd >= 0 && s.day_sd >= 0, "standard deviations must be >= 0");
    require(s.bout_rate >= 0, "bout_rate must be >= 0");
    require(s.effect_window > 0, "effect_window must be positive");
    require(s.effect_decay_per_day > 0, "effect_decay_per_day must be positive");
  }
  {
    SectionReader r(doc.find("context"), "context");
    ContextModel& x = c.context;
    x.enabled = r.bool_or("enabled", x.enabled);
    x.p_seen = r.double_or("p_seen", x.p_seen);
    x.driving_per_day = r.double_or("driving_per_day", x.driving_per_day);
    if (auto v = r.text("driving_minutes")) x.driving_minutes = parse_range(*v);
    x.bouts_per_day = r.double_or("bouts_per_day", x.bouts_per_day);
    if (auto v = r.text("bout_minutes")) x.bout_minutes = parse_range(*v);
    x.snoozes_per_day = r.double_or("snoozes_per_day", x.snoozes_per_day);
    if (auto v = r.text("snooze_durations")) {
      x.snooze_durations.clear();
      for (const auto& item : split_list(*v)) x.snooze_durations.push_back(static_cast<int>(parse_double(item)));
    }
    if (auto v = r.text("wake")) x.wake_minute = parse_clock(*v);
    if (auto v = r.text("sleep")) x.sleep_minute = parse_clock(*v);
    x.work_probability = r.double_or("work_probability", x.work_probability);
    r.check_consumed();
    require(x.p_seen >= 0 && x.p_seen <= 1, "p_seen must be in [0, 1]");
    require(x.work_probability >= 0 && x.work_probability <= 1, "work_probability must be in [0, 1]");
    require(x.driving_per_day >= 0 && x.bouts_per_day >= 0 && x.snoozes_per_day >= 0,
            "episode rates must be >= 0");
    require(x.driving_minutes.begin > 0 && x.driving_minutes.begin <= x.driving_minutes.end,
            "driving_minutes must be a positive MIN-MAX range");
    require(x.bout_minutes.begin > 0 && x.bout_minutes.begin <= x.bout_minutes.end,
            "bout_minutes must be a positive MIN-MAX range");
    for (int d : x.snooze_durations) require(d > 0, "snooze durations must be positive");
    require(x.wake_minute < x.sleep_minute, "wake must precede sleep");
  }
  {
    SectionReader r(doc.find("engagement"), "engagement");
    EngagementModel& e = c.engagement;
    if (auto v = r.text("prompt")) e.prompt_minute = parse_clock(*v);
    e.survey_logit = r.double_or("survey_logit", e.survey_logit);
    e.tasks_logit = r.double_or("tasks_logit", e.tasks_logit);
    e.effect_reciprocity = r.double_or("effect_reciprocity", e.effect_reciprocity);
    e.effect_persuasive = r.double_or("effect_persuasive", e.effect_persuasive);
    e.effect_meme = r.double_or("effect_meme", e.effect_meme);
    e.effect_insight = r.double_or("effect_insight", e.effect_insight);
    e.weekday_offset = r.double_or("weekday_offset", e.weekday_offset);
    if (auto v = r.text("food_checkpoint")) e.food_checkpoint_minute = parse_clock(*v);
    e.food_logit = r.double_or("food_logit", e.food_logit);
    e.effect_food_reminder = r.double_or("effect_food_reminder", e.effect_food_reminder);
    r.check_consumed();
    require(e.prompt_minute < kMinutesPerDay - 1, "prompt must leave time before midnight");
    require(e.food_checkpoint_minute < kMinutesPerDay - 1, "food_checkpoint must leave time before midnight");
  }
  {
    SectionReader r(doc.find("goals"), "goals");
    GoalModel& g = c.goals;
    g.fixed_quantile = r.double_or("fixed_quantile", g.fixed_quantile);
    g.variable_quantile_low = r.double_or("variable_quantile_low", g.variable_quantile_low);
    g.variable_quantile_high = r.double_or("variable_quantile_high", g.variable_quantile_high);
    g.trailing_window_days = r.int_or("trailing_window_days", g.trailing_window_days);
    g.rest_rate = r.double_or("rest_rate", g.rest_rate);
    g.starter_goal = r.double_or("starter_goal", g.starter_goal);
    r.check_consumed();
    require(g.fixed_quantile >= 0 && g.fixed_quantile <= 1, "fixed_quantile must be in [0, 1]");
    require(0 <= g.variable_quantile_low && g.variable_quantile_low <= g.variable_quantile_high &&
                g.variable_quantile_high <= 1,
            "variable quantile range must satisfy 0 <= low <= high <= 1");
    require(g.trailing_window_days >= 1, "trailing_window_days must be >= 1");
    require(g.rest_rate >= 0 && g.rest_rate <= 1, "rest_rate must be in [0, 1]");
  }
  return c;
}

ParticipantConfig load_behavior(const std::filesystem::path& path) {
  return parse_behavior(read_text_file(path));
}

std::string serialize_behavior(const ParticipantConfig& c) {
  std::ostringstream o;
  const StepModel& s = c.steps;
  std::vector<double> rates;
  if (hourly_constant(s.baseline_rate)) {
    for (int h = 0; h < 24; ++h) rates.push_back(s.baseline_rate[static_cast<std::size_t>(h * 60)]);
  } else {
    rates = s.baseline_rate;
  }
  o << "[steps]\n"
    << "baseline_rate = " << list(rates) << "\n"
    << "dispersion = " << format_double(s.dispersion) << "\n"
    << "participant_sd = " << format_double(s.participant_sd) << "\n"
    << "day_sd = " << format_double(s.day_sd) << "\n"
    << "bout_rate = " << format_double(s.bout_rate) << "\n"
    << "effect_walk = " << format_double(s.effect_walk) << "\n"
    << "effect_antisedentary = " << format_double(s.effect_antisedentary) << "\n"
    << "effect_window = " << s.effect_window << "\n"
    << "effect_decay_per_day = " << format_double(s.effect_decay_per_day) << "\n"
    << "weekend_effect_multiplier = " << format_double(s.weekend_effect_multiplier) << "\n"
    << "planning_structured = " << format_double(s.planning_structured) << "\n"
    << "planning_unstructured = " << format_double(s.planning_unstructured) << "\n"
    << "goal_responsiveness = " << format_double(s.goal_responsiveness) << "\n";

  const ContextModel& x = c.context;
  std::vector<double> snooze(x.snooze_durations.begin(), x.snooze_durations.end());
  o << "\n[context]\n"
    << "enabled = " << (x.enabled ? "true" : "false") << "\n"
    << "p_seen = " << format_double(x.p_seen) << "\n"
    << "driving_per_day = " << format_double(x.driving_per_day) << "\n"
    << "driving_minutes = " << x.driving_minutes.begin << "-" << x.driving_minutes.end << "\n"
    << "bouts_per_day = " << format_double(x.bouts_per_day) << "\n"
    << "bout_minutes = " << x.bout_minutes.begin << "-" << x.bout_minutes.end << "\n"
    << "snoozes_per_day = " << format_double(x.snoozes_per_day) << "\n"
    << "snooze_durations = " << list(snooze) << "\n"
    << "wake = " << format_clock(x.wake_minute) << "\n"
    << "sleep = " << format_clock(x.sleep_minute) << "\n"
    << "work_probability = " << format_double(x.work_probability) << "\n";

  const EngagementModel& e = c.engagement;
  o << "\n[engagement]\n"
    << "prompt = " << format_clock(e.prompt_minute) << "\n"
    << "survey_logit = " << format_double(e.survey_logit) << "\n"
    << "tasks_logit = " << format_double(e.tasks_logit) << "\n"
    << "effect_reciprocity = " << format_double(e.effect_reciprocity) << "\n"
    << "effect_persuasive = " << format_double(e.effect_persuasive) << "\n"
    << "effect_meme = " << format_double(e.effect_meme) << "\n"
    << "effect_insight = " << format_double(e.effect_insight) << "\n"
    << "weekday_offset = " << format_double(e.weekday_offset) << "\n"
    << "food_checkpoint = " << format_clock(e.food_checkpoint_minute) << "\n"
    << "food_logit = " << format_double(e.food_logit) << "\n"
    << "effect_food_reminder = " << format_double(e.effect_food_reminder) << "\n";

  const GoalModel& g = c.goals;
  o << "\n[goals]\n"
    << "fixed_quantile = " << format_double(g.fixed_quantile) << "\n"
    << "variable_quantile_low = " << format_double(g.variable_quantile_low) << "\n"
    << "variable_quantile_high = " << format_double(g.variable_quantile_high) << "\n"
    << "trailing_window_days = " << g.trailing_window_days << "\n"
    << "rest_rate = " << format_double(g.rest_rate) << "\n"
    << "starter_goal = " << format_double(g.starter_goal) << "\n";
  return o.str();
}

}  // namespace mrt
