#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrt/context.hpp"
#include "mrt/protocol.hpp"
#include "mrt/rng.hpp"
#include "mrt/signals.hpp"

namespace mrt {

// Level payloads the participant model responds to. Any other payload is
// delivered but has no behavioral effect.
namespace payload {
inline constexpr std::string_view walking_suggestion = "walking_suggestion";
inline constexpr std::string_view antisedentary_suggestion = "antisedentary_suggestion";
inline constexpr std::string_view structured_planning = "structured_planning";
inline constexpr std::string_view unstructured_planning = "unstructured_planning";
inline constexpr std::string_view reciprocity_message = "reciprocity_message";
inline constexpr std::string_view persuasive_reminder = "persuasive_reminder";
inline constexpr std::string_view meme_reward = "meme_reward";
inline constexpr std::string_view life_insight = "life_insight";
inline constexpr std::string_view food_reminder = "food_reminder";
inline constexpr std::string_view fixed_percentile = "fixed_percentile";
inline constexpr std::string_view variable_percentile = "variable_percentile";
inline constexpr std::string_view rest_days = "rest_days";
}  // namespace payload

/// Minute-level step generation and treatment response.
struct StepModel {
  std::vector<double> baseline_rate;  // 1440 expected steps/minute
  double dispersion = 2.0;            // negative-binomial size; 0 = Poisson
  double participant_sd = 0.2;        // log-scale sd of the person multiplier
  double day_sd = 0.15;               // log-scale sd of the day multiplier
  double bout_rate = 40.0;            // extra steps/minute during an activity bout
  double effect_walk = 0.0;           // extra steps over the effect window, when seen
  double effect_antisedentary = 0.0;
  int effect_window = 30;
  double effect_decay_per_day = 1.0;
  double weekend_effect_multiplier = 1.0;
  double planning_structured = 0.0;    // extra steps the following day, when seen
  double planning_unstructured = 0.0;
  double goal_responsiveness = 0.0;    // steps per step of max(0, goal - trailing mean)

  static std::vector<double> default_profile();
  double profile_daily_total() const;

  friend bool operator==(const StepModel&, const StepModel&) = default;
};

/// Episodes that gate availability, plus notification visibility.
struct ContextModel {
  bool enabled = true;  // false: no driving, bouts or snoozes
  double p_seen = 2.0 / 3.0;
  double driving_per_day = 1.0;
  MinuteWindow driving_minutes{15, 45};
  double bouts_per_day = 2.0;
  MinuteWindow bout_minutes{5, 15};
  double snoozes_per_day = 0.05;
  std::vector<int> snooze_durations{60, 120, 240, 480};
  int wake_minute = 7 * 60;
  int sleep_minute = 23 * 60;
  double work_probability = 0.6;

  friend bool operator==(const ContextModel&, const ContextModel&) = default;
};

/// Daily self-report and food-logging behavior on the logit scale.
struct EngagementModel {
  int prompt_minute = 18 * 60;  // survey window opens
  double survey_logit = 0.4;
  double tasks_logit = 0.0;
  double effect_reciprocity = 0.0;
  double effect_persuasive = 0.0;
  double effect_meme = 0.0;
  double effect_insight = 0.0;
  double weekday_offset = 0.0;
  int food_checkpoint_minute = 9 * 60;
  double food_logit = -0.5;
  double effect_food_reminder = 0.0;

  friend bool operator==(const EngagementModel&, const EngagementModel&) = default;
};

struct GoalModel {
  double fixed_quantile = 0.6;
  double variable_quantile_low = 0.3;
  double variable_quantile_high = 0.9;
  int trailing_window_days = 10;
  double rest_rate = 1.0 / 7.0;
  double starter_goal = 5000.0;

  friend bool operator==(const GoalModel&, const GoalModel&) = default;
};

/// The behavior-config document.
struct ParticipantConfig {
  StepModel steps;
  ContextModel context;
  EngagementModel engagement;
  GoalModel goals;

  ParticipantConfig() { steps.baseline_rate = StepModel::default_profile(); }

  friend bool operator==(const ParticipantConfig&, const ParticipantConfig&) = default;
};

ParticipantConfig parse_behavior(std::string_view text);
ParticipantConfig load_behavior(const std::filesystem::path& path);
std::string serialize_behavior(const ParticipantConfig& config);

// ---------------------------------------------------------------------------
// Step goals

enum class GoalPolicyKind { fixed_percentile, variable_percentile };

struct StepGoalPolicy {
  GoalPolicyKind kind = GoalPolicyKind::fixed_percentile;
  double quantile = 0.6;
  double quantile_low = 0.3;
  double quantile_high = 0.9;
  int trailing_window_days = 10;
  bool rest_days = false;
  double rest_rate = 1.0 / 7.0;
  double starter_goal = 5000.0;
};

/// Nearest-rank quantile: the ceil(q*n)-th smallest value (rank clamped to
/// [1, n]).
double nearest_rank_quantile(std::span<const double> values, double q);

/// Goal for one day from at most the last trailing_window_days totals (the
/// span may be longer; only its tail is used). nullopt on a rest day; the
/// starter goal when there is no history yet.
std::optional<double> compute_step_goal(const StepGoalPolicy& policy,
                                        std::span<const double> trailing_daily_totals,
                                        const DrawKey& day_key);

// ---------------------------------------------------------------------------
// Sampling primitives

/// Overdispersed count with the given mean: Poisson when dispersion is 0,
/// otherwise a gamma-Poisson mixture with variance mean + mean^2/dispersion.
int generate_minute_steps(double mean, double dispersion, const DrawKey& key);

/// Bernoulli(p_seen) for one delivery.
bool resolve_seen(double p_seen, const DrawKey& key);

double logistic(double x);

// ---------------------------------------------------------------------------
// Simulated participant

/// State fixed at enrollment.
struct ParticipantState {
  std::uint64_t index = 0;
  int start_weekday = 0;  // 0 = Monday
  // Per factor: assigned level for baseline factors.
  std::vector<std::optional<std::size_t>> baseline_levels;
  // Per factor: chosen minute-of-day decision times for slot schedules.
  std::vector<std::vector<int>> slot_times;

  friend bool operator==(const ParticipantState&, const ParticipantState&) = default;
};

/// A behavior event planned at `minute` (absolute study minute).
struct PlannedEvent {
  std::string event_id;
  std::int64_t minute = 0;
};

// Behavior draw channels (DrawKey::factor_index under purpose=behavior).
enum class BehaviorChannel : std::uint64_t {
  steps = 0,
  day_multiplier = 1,
  episodes = 2,
  engagement = 3,
  seen = 4,
  goal = 5,
  location = 6,
  traits = 7,
};

DrawKey behavior_key(std::uint64_t seed, std::uint64_t participant, BehaviorChannel channel,
                     std::uint64_t counter);

/// Generative model of one participant. Signals are written into the
/// referenced ParticipantSignals as time advances.
class ParticipantModel {
 public:
  ParticipantModel(const TrialProtocol& protocol, const ParticipantConfig& config,
                   std::uint64_t seed, const ParticipantState& state, ParticipantSignals& out);

  const ParticipantState& state() const { return state_; }

  /// Minute-of-day checkpoints at which the model plans behavior.
  std::vector<int> checkpoint_minutes() const;

  /// Plans day `day`'s episodes and goal. Steps must be generated up to the
  /// day start. Returns planned event occurrences.
  std::vector<PlannedEvent> begin_day(int day);

  /// Plans engagement/food behavior at a checkpoint minute.
  std::vector<PlannedEvent> checkpoint(std::int64_t minute);

  /// Generates minute-level steps for [generated_until, minute).
  void advance_to(std::int64_t minute);
  std::int64_t generated_until() const { return generated_; }

  /// Declared context at `minute`. Declared variables the model does not
  /// produce are left out of the snapshot.
  ContextSnapshot snapshot(std::int64_t minute, const ContextDecls& decls) const;

  /// Notifies the model that `level` was delivered; returns whether it was
  /// seen. Effects only act when seen.
  bool deliver(std::size_t factor_index, const Level& level, std::uint64_t decision_index,
               std::int64_t minute);

  double expected_steps(std::int64_t minute) const;
  bool weekend(int day) const { return (state_.start_weekday + day) % 7 >= 5; }

 private:
  struct Episode {
    std::int64_t begin;
    std::int64_t end;
  };
  struct WindowEffect {
    std::int64_t begin;
    std::int64_t end;
    double per_minute;
  };

  static bool inside(const std::vector<Episode>& episodes, std::int64_t minute);
  std::vector<Episode> plan_episodes(int day, std::uint64_t kind, double rate,
                                     const std::vector<int>& durations, MinuteWindow range,
                                     const std::vector<Episode>& existing);
  void record_event(std::string_view id, std::int64_t minute);
  bool declared(std::string_view event_id) const;
  bool occurred_on_day(std::string_view event_id, int day, std::int64_t until) const;
  std::optional<double> minutes_since(std::string_view event_id, std::int64_t minute) const;
  double location(std::int64_t minute) const;

  const TrialProtocol& protocol_;
  const ParticipantConfig& config_;
  std::uint64_t seed_;
  ParticipantState state_;
  ParticipantSignals& out_;

  double person_multiplier_ = 1.0;
  double profile_total_ = 0.0;
  std::optional<StepGoalPolicy> goal_policy_;

  std::vector<Episode> driving_, bouts_, snoozes_;
  std::vector<WindowEffect> window_effects_;
  std::vector<double> day_multiplier_;
  std::vector<double> day_extra_steps_;
  std::vector<double> engagement_boost_;
  std::vector<double> food_boost_;
  std::int64_t generated_ = 0;
};

}  // namespace mrt
