#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrt/context.hpp"
#include "mrt/decimal.hpp"

namespace mrt {

inline constexpr int kMinutesPerDay = 1440;

enum class RandomizationKind { micro, baseline };

struct Level {
  std::string id;
  std::string label;
  bool do_nothing = false;
  std::string payload;  // message template id, interpreted by the participant model

  friend bool operator==(const Level&, const Level&) = default;
};

enum class ScheduleKind { clock_times, participant_chosen_slots, event_triggered, at_enrollment };

/// Minute-of-day range [begin, end).
struct MinuteWindow {
  int begin = 0;
  int end = 0;

  friend bool operator==(const MinuteWindow&, const MinuteWindow&) = default;
};

struct Schedule {
  ScheduleKind kind = ScheduleKind::at_enrollment;
  std::vector<int> clock_times;             // clock_times: minute of day
  int slot_count = 0;                       // participant_chosen_slots
  std::vector<MinuteWindow> slot_windows;   // participant_chosen_slots
  std::string trigger_event_id;             // event_triggered

  /// Decision points per day for daily schedules; nullopt otherwise.
  std::optional<int> points_per_day() const;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

enum class OutcomeWindow { offset_duration, next_day, same_day_remainder, whole_study };
enum class Aggregation { sum, indicator, daily_mean };

inline constexpr std::string_view kStepSignal = "steps";

struct OutcomeSpec {
  // "steps" or one or more declared events (indicator of any of them).
  std::vector<std::string> signals{std::string(kStepSignal)};
  OutcomeWindow window = OutcomeWindow::offset_duration;
  int offset = 0;
  int duration = 30;
  Aggregation aggregation = Aggregation::sum;

  bool is_step_signal() const { return signals.size() == 1 && signals[0] == kStepSignal; }

  friend bool operator==(const OutcomeSpec&, const OutcomeSpec&) = default;
};

struct AvailabilityRule {
  std::string predicate_source;
  std::string forced_level_id;

  friend bool operator==(const AvailabilityRule&, const AvailabilityRule&) = default;
};

struct Factor {
  std::string id;
  std::string label;
  RandomizationKind randomization_kind = RandomizationKind::micro;
  std::vector<Level> levels;
  std::vector<Probability> probabilities;  // parallel to levels
  Schedule schedule;
  std::optional<AvailabilityRule> availability;
  OutcomeSpec proximal_outcome;

  bool is_micro() const { return randomization_kind == RandomizationKind::micro; }
  std::optional<std::size_t> level_index(std::string_view level_id) const;
  std::optional<std::size_t> do_nothing_index() const;

  friend bool operator==(const Factor&, const Factor&) = default;
};

/// Per-participant parameter chosen once at enrollment, e.g. the times of
/// participant-chosen decision points.
struct ParticipantParamDecl {
  std::string id;
  std::string factor_id;
  std::vector<MinuteWindow> windows;

  friend bool operator==(const ParticipantParamDecl&, const ParticipantParamDecl&) = default;
};

enum class QuestionKind { overall, time_trend, moderation, baseline };

std::string_view to_string(QuestionKind kind);
std::optional<QuestionKind> parse_question_kind(std::string_view text);

/// A research question, answered by the estimator in `analyze`.
struct ResearchQuestion {
  std::string id;
  std::string text;
  bool primary = true;
  QuestionKind kind = QuestionKind::overall;
  std::string factor_id;
  std::vector<std::string> level_a;  // pooled treatment levels
  std::vector<std::string> level_b;  // pooled comparison levels
  std::string moderator;             // moderation only
  std::vector<double> bins;          // numeric moderator cut points

  friend bool operator==(const ResearchQuestion&, const ResearchQuestion&) = default;
};

struct TrialProtocol {
  std::string protocol_id;
  std::string title;
  int study_length_days = 1;
  int time_resolution = 1;  // minutes; fixed at 1
  ContextDecls context_vars;
  std::vector<Factor> factors;
  std::vector<ParticipantParamDecl> participant_params;
  std::vector<ResearchQuestion> questions;

  const Factor* find_factor(std::string_view id) const;
  std::optional<std::size_t> factor_index(std::string_view id) const;
  int study_minutes() const { return study_length_days * kMinutesPerDay; }

  friend bool operator==(const TrialProtocol&, const TrialProtocol&) = default;
};

/// One invariant violation. `code` is machine-readable (PROB_SUM_NOT_ONE, ...).
struct Violation {
  std::string code;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Every structural violation; empty means the protocol is valid.
std::vector<Violation> validate_protocol(const TrialProtocol& protocol);

/// Expected deliveries per day under full availability: points/day times
/// the probability of a non-do-nothing level. Throws BASELINE_FACTOR for
/// baseline factors and UNSCHEDULED_FACTOR for event-triggered ones.
Rational expected_deliveries_per_day(const Factor& factor);

/// Derives participant_params from participant-chosen-slot schedules.
std::vector<ParticipantParamDecl> derive_participant_params(const std::vector<Factor>& factors);

}  // namespace mrt
