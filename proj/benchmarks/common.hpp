#pragma once

#include "mrt/case_studies.hpp"
#include "mrt/participant.hpp"
#include "mrt/protocol_io.hpp"

namespace bench {

inline mrt::TrialProtocol protocol(std::string_view name, int days) {
  auto p = mrt::parse_protocol(mrt::find_case_study(name).protocol_text);
  p.study_length_days = days;
  return p;
}

inline mrt::ParticipantConfig behavior(std::string_view name) {
  return mrt::parse_behavior(mrt::find_case_study(name).behavior_text);
}

}  // namespace bench
