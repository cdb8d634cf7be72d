#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mrt/context.hpp"
#include "mrt/decimal.hpp"
#include "mrt/participant.hpp"
#include "mrt/predicate.hpp"
#include "mrt/protocol.hpp"
#include "mrt/signals.hpp"

namespace mrt {

/// One scheduled or triggered decision point and what happened at it.
struct DecisionPointRecord {
  std::uint64_t record_id = 0;
  std::uint64_t participant_index = 0;
  std::string factor_id;
  std::size_t factor_index = 0;
  std::uint64_t decision_index = 0;  // per (participant, factor), from 0
  std::int64_t time_minutes = 0;     // participant clock
  bool available = true;
  std::optional<std::string> availability_reason;  // first failing conjunct
  bool randomized = false;
  std::string assigned_level_id;
  std::optional<Probability> probability_used;  // null when not randomized
  ContextSnapshot context;
  std::optional<bool> seen;  // set when a non-do-nothing level was delivered
  std::optional<double> proximal_outcome;
  bool outcome_missing = false;

  bool delivered() const { return seen.has_value(); }

  friend bool operator==(const DecisionPointRecord&, const DecisionPointRecord&) = default;
};

/// Whole-study outcome of one participant for one baseline factor.
struct StudyOutcomeRecord {
  std::uint64_t participant_index = 0;
  std::string factor_id;
  std::string level_id;
  double value = 0.0;

  friend bool operator==(const StudyOutcomeRecord&, const StudyOutcomeRecord&) = default;
};

struct TimelineEntry {
  enum class Kind { decision, signal_day };
  Kind kind = Kind::decision;
  std::size_t index = 0;  // decision: into TrialLog::decisions; signal_day: participant
  int day = 0;            // signal_day only
  std::uint64_t record_id = 0;

  friend bool operator==(const TimelineEntry&, const TimelineEntry&) = default;
};

/// Everything one run produced, in emission order.
struct TrialLog {
  TrialProtocol protocol;
  ParticipantConfig behavior;
  std::uint64_t trial_seed = 0;  // seed actually used for draws
  std::uint64_t base_seed = 0;   // seed given by the operator
  std::uint64_t replication = 0;
  std::vector<ParticipantState> participants;
  std::vector<DecisionPointRecord> decisions;
  std::vector<TimelineEntry> timeline;
  SignalArchive archive;
  std::vector<StudyOutcomeRecord> study_outcomes;

  friend bool operator==(const TrialLog&, const TrialLog&) = default;
};

struct SimulationRun {
  TrialProtocol protocol;
  int population_size = 1;
  std::uint64_t trial_seed = 0;
  ParticipantConfig behavior;
  std::uint64_t base_seed = 0;
  std::uint64_t replication = 0;
};

/// Baseline randomization and participant-chosen slots. Pure in its inputs.
ParticipantState enroll(const TrialProtocol& protocol, std::uint64_t participant_index,
                        std::uint64_t seed);

/// Availability gating and assignment for one protocol, with predicates
/// parsed once.
class DecisionEngine {
 public:
  /// Called with the assigned level when a non-do-nothing level is
  /// delivered; returns whether the participant saw it.
  using DeliverFn = std::function<bool(const Level&)>;

  explicit DecisionEngine(const TrialProtocol& protocol);

  DecisionPointRecord process_decision_point(std::uint64_t trial_seed, std::uint64_t participant,
                                             std::size_t factor_index, std::uint64_t decision_index,
                                             std::int64_t minute, ContextSnapshot ctx,
                                             const DeliverFn& deliver) const;

 private:
  struct Gate {
    std::optional<PredicateAst> availability;
    std::size_t forced_level = 0;
  };
  const TrialProtocol& protocol_;
  std::vector<Gate> gates_;
};

/// Runs the whole trial. Throws INVALID_ARGUMENT for population 0 or an
/// invalid protocol, and propagates PREDICATE_EVAL_FAILURE.
TrialLog run_trial(const SimulationRun& run);

struct FactorDeliverySummary {
  std::string factor_id;
  double delivered_per_day = 0.0;
  double delivered_se = 0.0;  // across participants
  double seen_per_day = 0.0;
  double seen_se = 0.0;
};

struct DeliverySummary {
  std::vector<FactorDeliverySummary> factors;  // micro factors, declaration order
  double pushes_per_day = 0.0;
  double pushes_se = 0.0;
};

DeliverySummary summarize_deliveries(const TrialLog& log);

}  // namespace mrt
