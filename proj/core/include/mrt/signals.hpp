#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mrt {

/// Everything recorded about one participant during a run.
struct ParticipantSignals {
  std::vector<std::uint16_t> steps;  // one entry per study minute
  // Occurrence minutes per event id, ascending, within study bounds.
  std::map<std::string, std::vector<std::int64_t>, std::less<>> events;
  // Step goal texted each morning; nullopt on rest days or without a goal policy.
  std::vector<std::optional<double>> daily_goal;

  std::int64_t day_total(int day) const;

  friend bool operator==(const ParticipantSignals&, const ParticipantSignals&) = default;
};

struct SignalArchive {
  int study_days = 0;
  std::vector<ParticipantSignals> participants;

  friend bool operator==(const SignalArchive&, const SignalArchive&) = default;
};

}  // namespace mrt
