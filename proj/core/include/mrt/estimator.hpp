#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrt/engine.hpp"

namespace mrt {

/// Pooled level sets compared by an estimate. Empty sets default to every
/// non-do-nothing level (a) against the do-nothing level (b).
struct Contrast {
  std::vector<std::string> level_a;
  std::vector<std::string> level_b;

  friend bool operator==(const Contrast&, const Contrast&) = default;
};

struct BootstrapOptions {
  int replicates = 1000;
  std::optional<std::uint64_t> seed;  // defaults to the log's trial seed
  double confidence = 0.95;
};

struct EffectEstimate {
  std::string factor_id;
  Contrast contrast;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_available_points = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::optional<std::string> stratum;
  bool empty = false;           // stratum without points in both arms
  bool low_confidence = false;  // an arm with a single unit
};

struct TrendEstimate {
  std::string factor_id;
  Contrast contrast;
  double slope = 0.0;  // outcome units per study day
  double intercept = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_days = 0;
  std::size_t n_available_points = 0;
};

/// Resolves and checks a contrast against the protocol. Throws
/// UNKNOWN_FACTOR / UNKNOWN_LEVEL / INVALID_ARGUMENT.
Contrast resolve_contrast(const TrialProtocol& protocol, std::string_view factor,
                          const Contrast& contrast);

/// Difference of mean proximal outcomes over available, non-missing decision
/// points, with a participant bootstrap.
EffectEstimate overall_effect(const TrialLog& log, std::string_view factor,
                              const Contrast& contrast = {}, const BootstrapOptions& options = {});

/// OLS slope of per-day contrasts against day in study.
TrendEstimate time_trend(const TrialLog& log, std::string_view factor,
                         const Contrast& contrast = {}, const BootstrapOptions& options = {});

/// One estimate per observed moderator stratum. Numeric moderators are
/// binned at `bins` cut points when given, else stratified by value.
std::vector<EffectEstimate> moderated_effect(const TrialLog& log, std::string_view factor,
                                             const Contrast& contrast, std::string_view moderator,
                                             const std::vector<double>& bins = {},
                                             const BootstrapOptions& options = {});

/// Between-participant difference of whole-study outcomes for a baseline
/// factor, two-sample standard error.
EffectEstimate baseline_contrast(const TrialLog& log, std::string_view factor,
                                 const Contrast& contrast = {});

/// Result of one protocol research question.
struct QuestionResult {
  ResearchQuestion question;
  std::vector<EffectEstimate> estimates;
  std::optional<TrendEstimate> trend;
  std::optional<std::string> error;  // "CODE: message" when the estimator refused
};

QuestionResult answer_question(const TrialLog& log, const ResearchQuestion& question,
                               const BootstrapOptions& options = {});

}  // namespace mrt
