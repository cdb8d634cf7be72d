#include "mrt/case_studies.hpp"

#include <algorithm>
#include <string>

#include "mrt/error.hpp"

namespace mrt {

namespace embedded {
extern const CaseStudy kCaseStudies[];
extern const std::size_t kCaseStudyCount;
}  // namespace embedded

std::span<const CaseStudy> case_studies() {
  return {embedded::kCaseStudies, embedded::kCaseStudyCount};
}

const CaseStudy& find_case_study(std::string_view name) {
  const auto all = case_studies();
  auto it = std::find_if(all.begin(), all.end(), [&](const CaseStudy& c) { return c.name == name; });
  if (it == all.end())
    throw Error(ErrorCode::unknown_case_study,
                "'" + std::string(name) + "' (known: heartsteps, sara, barifit)");
  return *it;
}

}  // namespace mrt
