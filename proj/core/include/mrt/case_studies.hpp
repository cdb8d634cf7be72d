#pragma once

#include <span>
#include <string_view>

namespace mrt {

/// A bundled protocol and behavior configuration.
struct CaseStudy {
  std::string_view name;
  std::string_view protocol_text;
  std::string_view behavior_text;
};

std::span<const CaseStudy> case_studies();

/// Throws UNKNOWN_CASE_STUDY.
const CaseStudy& find_case_study(std::string_view name);

}  // namespace mrt
