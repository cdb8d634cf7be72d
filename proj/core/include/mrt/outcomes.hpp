#pragma once

#include <cstdint>

#include "mrt/engine.hpp"
#include "mrt/protocol.hpp"
#include "mrt/signals.hpp"

namespace mrt {

/// Proximal outcome of one decision point. Throws WINDOW_OUT_OF_RANGE when
/// the window reaches past the end of the study.
double proximal_outcome(const DecisionPointRecord& record, const OutcomeSpec& spec,
                        const SignalArchive& archive);

/// Mean daily step total over the study.
double study_outcome(std::uint64_t participant, const OutcomeSpec& spec,
                     const SignalArchive& archive);

/// Fills proximal_outcome/outcome_missing on every decision record and
/// computes study outcomes for baseline factors with whole-study specs.
void enrich_outcomes(TrialLog& log);

}  // namespace mrt
