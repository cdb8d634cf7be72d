#include "mrt/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "mrt/config.hpp"
#include "mrt/error.hpp"
#include "mrt/rng.hpp"

namespace mrt {

namespace {

const Factor& require_factor(const TrialProtocol& protocol, std::string_view id) {
  const Factor* f = protocol.find_factor(id);
  if (!f) throw Error(ErrorCode::unknown_factor, std::string(id));
  return *f;
}

struct Arms {
  std::vector<char> in_a;  // per level
  std::vector<char> in_b;
};

Arms arms_for(const Factor& f, const Contrast& c) {
  Arms arms{std::vector<char>(f.levels.size(), 0), std::vector<char>(f.levels.size(), 0)};
  for (const auto& id : c.level_a) arms.in_a[*f.level_index(id)] = 1;
  for (const auto& id : c.level_b) arms.in_b[*f.level_index(id)] = 1;
  return arms;
}

// Per-participant arm sums.
struct Cell {
  double sum_a = 0, sum_b = 0;
  double n_a = 0, n_b = 0;

  void add(const Cell& o) {
    sum_a += o.sum_a;
    sum_b += o.sum_b;
    n_a += o.n_a;
    n_b += o.n_b;
  }
  bool estimable() const { return n_a > 0 && n_b > 0; }
  double contrast() const { return sum_a / n_a - sum_b / n_b; }
};

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Linear-interpolated empirical quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Interval {
  double se, low, high;
};

Interval summarize_replicates(std::vector<double> reps, double confidence) {
  if (reps.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  const double se = sample_sd(reps);
  std::sort(reps.begin(), reps.end());
  const double alpha = (1.0 - confidence) / 2.0;
  return {se, quantile_sorted(reps, alpha), quantile_sorted(reps, 1.0 - alpha)};
}

// Resampled participant indices for replicate b.
std::vector<std::size_t> resample(std::uint64_t seed, std::size_t factor, int b, std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform01({seed, static_cast<std::uint64_t>(b), factor, i, DrawPurpose::resample});
    out[i] = std::min(static_cast<std::size_t>(u * static_cast<double>(n)), n - 1);
  }
  return out;
}

void check_constant_probabilities(const TrialLog& log, std::size_t factor_index) {
  const Factor& f = log.protocol.factors[factor_index];
  std::vector<std::optional<Probability>> seen(f.levels.size());
  for (const auto& r : log.decisions) {
    if (r.factor_index != factor_index || !r.randomized || !r.probability_used) continue;
    const auto level = f.level_index(r.assigned_level_id);
    if (!level) throw Error(ErrorCode::unknown_level, r.assigned_level_id);
    auto& p = seen[*level];
    if (!p) p = r.probability_used;
    else if (*p != *r.probability_used)
      throw Error(ErrorCode::nonconstant_probabilities,
                  f.id + "." + r.assigned_level_id + " was randomized with probability " +
                      p->to_string() + " and " + r.probability_used->to_string());
  }
}

// Filters records of one factor to usable ones and yields (participant, level, outcome, record).
template <typename Fn>
void for_each_usable(const TrialLog& log, std::size_t factor_index, Fn&& fn) {
  const Factor& f = log.protocol.factors[factor_index];
  for (const auto& r : log.decisions) {
    if (r.factor_index != factor_index || !r.available || !r.randomized || r.outcome_missing ||
        !r.proximal_outcome)
      continue;
    const auto level = f.level_index(r.assigned_level_id);
    if (!level) throw Error(ErrorCode::unknown_level, r.assigned_level_id);
    fn(r, *level);
  }
}

struct Prepared {
  std::size_t factor_index;
  const Factor* factor;
  Contrast contrast;
  Arms arms;
  std::uint64_t seed;
};

Prepared prepare_micro(const TrialLog& log, std::string_view factor, const Contrast& contrast,
                       const BootstrapOptions& options) {
  const Factor& f = require_factor(log.protocol, factor);
  if (!f.is_micro())
    throw Error(ErrorCode::baseline_factor, f.id + " is baseline-randomized; use a baseline contrast");
  const std::size_t fi = *log.protocol.factor_index(factor);
  Prepared p{fi, &f, resolve_contrast(log.protocol, factor, contrast), {}, options.seed.value_or(log.trial_seed)};
  p.arms = arms_for(f, p.contrast);
  check_constant_probabilities(log, fi);
  return p;
}

EffectEstimate estimate_from_cells(const Prepared& prep, const std::vector<Cell>& cells,
                                   const BootstrapOptions& options) {
  Cell total;
  for (const auto& c : cells) total.add(c);
  EffectEstimate e;
  e.factor_id = prep.factor->id;
  e.contrast = prep.contrast;
  e.n_a = static_cast<std::size_t>(total.n_a);
  e.n_b = static_cast<std::size_t>(total.n_b);
  e.n_available_points = e.n_a + e.n_b;
  if (!total.estimable()) {
    e.empty = true;
    return e;
  }
  e.estimate = total.contrast();
  std::vector<double> reps;
  reps.reserve(static_cast<std::size_t>(std::max(options.replicates, 0)));
  for (int b = 0; b < options.replicates; ++b) {
    Cell rep;
    for (std::size_t i : resample(prep.seed, prep.factor_index, b, cells.size())) rep.add(cells[i]);
    if (rep.estimable()) reps.push_back(rep.contrast());
  }
  const Interval iv = summarize_replicates(std::move(reps), options.confidence);
  e.std_error = iv.se;
  e.ci_low = iv.low;
  e.ci_high = iv.high;
  return e;
}

std::string stratum_label(double v, const std::vector<double>& bins) {
  if (bins.empty()) return format_double(v);
  if (v < bins.front()) return "<" + format_double(bins.front());
  for (std::size_t i = 0; i + 1 < bins.size(); ++i)
    if (v < bins[i + 1]) return "[" + format_double(bins[i]) + "," + format_double(bins[i + 1]) + ")";
  return ">=" + format_double(bins.back());
}

}  // namespace

Contrast resolve_contrast(const TrialProtocol& protocol, std::string_view factor,
                          const Contrast& contrast) {
  const Factor& f = require_factor(protocol, factor);
  Contrast c = contrast;
  if (c.level_a.empty() && c.level_b.empty()) {
    const auto dn = f.do_nothing_index();
    if (!dn)
      throw Error(ErrorCode::invalid_argument,
                  f.id + " has no do-nothing level; name the levels to compare");
    for (std::size_t i = 0; i < f.levels.size(); ++i)
      (i == *dn ? c.level_b : c.level_a).push_back(f.levels[i].id);
  }
  if (c.level_a.empty() || c.level_b.empty())
    throw Error(ErrorCode::invalid_argument, "both sides of a contrast need at least one level");
  std::set<std::string> used;
  for (const auto* side : {&c.level_a, &c.level_b})
    for (const auto& id : *side) {
      if (!f.level_index(id)) throw Error(ErrorCode::unknown_level, f.id + "." + id);
      if (!used.insert(id).second)
        throw Error(ErrorCode::invalid_argument, "level " + id + " appears twice in the contrast");
    }
  return c;
}

EffectEstimate overall_effect(const TrialLog& log, std::string_view factor, const Contrast& contrast,
                              const BootstrapOptions& options) {
  const Prepared prep = prepare_micro(log, factor, contrast, options);
  std::vector<Cell> cells(log.participants.size());
  for_each_usable(log, prep.factor_index, [&](const DecisionPointRecord& r, std::size_t level) {
    Cell& c = cells.at(r.participant_index);
    if (prep.arms.in_a[level]) {
      c.sum_a += *r.proximal_outcome;
      c.n_a += 1;
    } else if (prep.arms.in_b[level]) {
      c.sum_b += *r.proximal_outcome;
      c.n_b += 1;
    }
  });
  EffectEstimate e = estimate_from_cells(prep, cells, options);
  if (e.empty)
    throw Error(ErrorCode::no_available_points,
                prep.factor->id + ": no available decision points with outcomes in both arms");
  return e;
}

TrendEstimate time_trend(const TrialLog& log, std::string_view factor, const Contrast& contrast,
                         const BootstrapOptions& options) {
  const Prepared prep = prepare_micro(log, factor, contrast, options);
  const std::size_t n = log.participants.size();
  const auto days = static_cast<std::size_t>(log.protocol.study_length_days);
  std::vector<std::vector<Cell>> cells(n, std::vector<Cell>(days));
  std::size_t points = 0;
  for_each_usable(log, prep.factor_index, [&](const DecisionPointRecord& r, std::size_t level) {
    Cell& c = cells.at(r.participant_index).at(static_cast<std::size_t>(r.time_minutes / kMinutesPerDay));
    if (prep.arms.in_a[level]) {
      c.sum_a += *r.proximal_outcome;
      c.n_a += 1;
      ++points;
    } else if (prep.arms.in_b[level]) {
      c.sum_b += *r.proximal_outcome;
      c.n_b += 1;
      ++points;
    }
  });

  struct Fit {
    double slope, intercept;
    std::size_t days;
  };
  auto fit = [&](const std::vector<std::size_t>& who) -> std::optional<Fit> {
    std::vector<double> xs, ys;
    for (std::size_t d = 0; d < days; ++d) {
      Cell day;
      for (std::size_t i : who) day.add(cells[i][d]);
      if (!day.estimable()) continue;
      xs.push_back(static_cast<double>(d));
      ys.push_back(day.contrast());
    }
    if (xs.size() < 2) return std::nullopt;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx;
    return Fit{slope, my - slope * mx, xs.size()};
  };

  std::vector<std::size_t> everyone(n);
  for (std::size_t i = 0; i < n; ++i) everyone[i] = i;
  const auto point = fit(everyone);
  if (!point)
    throw Error(ErrorCode::insufficient_days,
                prep.factor->id + ": fewer than 2 study days with available points in both arms");

  std::vector<double> reps;
  for (int b = 0; b < options.replicates; ++b)
    if (auto f = fit(resample(prep.seed, prep.factor_index, b, n))) reps.push_back(f->slope);
  const Interval iv = summarize_replicates(std::move(reps), options.confidence);

  TrendEstimate t;
  t.factor_id = prep.factor->id;
  t.contrast = prep.contrast;
  t.slope = point->slope;
  t.intercept = point->intercept;
  t.std_error = iv.se;
  t.ci_low = iv.low;
  t.ci_high = iv.high;
  t.n_days = point->days;
  t.n_available_points = points;
  return t;
}

std::vector<EffectEstimate> moderated_effect(const TrialLog& log, std::string_view factor,
                                             const Contrast& contrast, std::string_view moderator,
                                             const std::vector<double>& bins,
                                             const BootstrapOptions& options) {
  const Prepared prep = prepare_micro(log, factor, contrast, options);
  const ContextVarDecl* decl = find_decl(log.protocol.context_vars, moderator);
  if (!decl || decl->type == VarType::event)
    throw Error(ErrorCode::unknown_moderator, std::string(moderator));
  if (!std::is_sorted(bins.begin(), bins.end()))
    throw Error(ErrorCode::invalid_argument, "moderator bins must be ascending");

  auto label_of = [&](const DecisionPointRecord& r) -> std::optional<std::pair<double, std::string>> {
    auto it = r.context.values.find(moderator);
    if (it == r.context.values.end()) return std::nullopt;
    if (const bool* b = std::get_if<bool>(&it->second))
      return std::pair{*b ? 1.0 : 0.0, std::string(*b ? "true" : "false")};
    const double v = std::get<double>(it->second);
    if (bins.empty()) return std::pair{v, format_double(v)};
    // Sort key: bin index.
    const auto bin = static_cast<double>(std::upper_bound(bins.begin(), bins.end(), v) - bins.begin());
    return std::pair{bin, stratum_label(v, bins)};
  };

  // Strata observed anywhere in the factor's records, ordered by value.
  std::map<double, std::string> strata;
  for (const auto& r : log.decisions)
    if (r.factor_index == prep.factor_index)
      if (auto l = label_of(r)) strata.emplace(l->first, l->second);
  if (strata.empty())
    throw Error(ErrorCode::unknown_moderator,
                std::string(moderator) + " was not captured at any decision point of " + prep.factor->id);

  std::map<double, std::vector<Cell>> cells;
  for (const auto& [key, label] : strata) cells[key].resize(log.participants.size());
  for_each_usable(log, prep.factor_index, [&](const DecisionPointRecord& r, std::size_t level) {
    auto l = label_of(r);
    if (!l) return;
    Cell& c = cells[l->first].at(r.participant_index);
    if (prep.arms.in_a[level]) {
      c.sum_a += *r.proximal_outcome;
      c.n_a += 1;
    } else if (prep.arms.in_b[level]) {
      c.sum_b += *r.proximal_outcome;
      c.n_b += 1;
    }
  });

  std::vector<EffectEstimate> out;
  for (const auto& [key, label] : strata) {
    EffectEstimate e = estimate_from_cells(prep, cells[key], options);
    e.stratum = label;
    out.push_back(std::move(e));
  }
  return out;
}

EffectEstimate baseline_contrast(const TrialLog& log, std::string_view factor,
                                 const Contrast& contrast) {
  const Factor& f = require_factor(log.protocol, factor);
  if (f.is_micro())
    throw Error(ErrorCode::invalid_argument, f.id + " is micro-randomized; use overall_effect");
  const Contrast c = resolve_contrast(log.protocol, factor, contrast);
  const Arms arms = arms_for(f, c);
  std::vector<double> a, b;
  for (const auto& s : log.study_outcomes) {
    if (s.factor_id != f.id) continue;
    const auto level = f.level_index(s.level_id);
    if (!level) throw Error(ErrorCode::unknown_level, s.level_id);
    if (arms.in_a[*level]) a.push_back(s.value);
    if (arms.in_b[*level]) b.push_back(s.value);
  }
  if (a.empty() || b.empty())
    throw Error(ErrorCode::arm_empty, f.id + ": " + (a.empty() ? "first" : "second") +
                                          " arm has no participants with study outcomes");
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double sa = sample_sd(a), sb = sample_sd(b);
  EffectEstimate e;
  e.factor_id = f.id;
  e.contrast = c;
  e.estimate = mean(a) - mean(b);
  e.std_error = std::sqrt(sa * sa / static_cast<double>(a.size()) + sb * sb / static_cast<double>(b.size()));
  e.ci_low = e.estimate - 1.959963984540054 * e.std_error;
  e.ci_high = e.estimate + 1.959963984540054 * e.std_error;
  e.n_a = a.size();
  e.n_b = b.size();
  e.n_available_points = a.size() + b.size();
  e.low_confidence = a.size() < 2 || b.size() < 2;
  return e;
}

QuestionResult answer_question(const TrialLog& log, const ResearchQuestion& question,
                               const BootstrapOptions& options) {
  QuestionResult result{question, {}, std::nullopt, std::nullopt};
  const Contrast contrast{question.level_a, question.level_b};
  try {
    switch (question.kind) {
      case QuestionKind::overall:
        result.estimates.push_back(overall_effect(log, question.factor_id, contrast, options));
        break;
      case QuestionKind::time_trend:
        result.trend = time_trend(log, question.factor_id, contrast, options);
        break;
      case QuestionKind::moderation:
        result.estimates = moderated_effect(log, question.factor_id, contrast, question.moderator,
                                            question.bins, options);
        break;
      case QuestionKind::baseline:
        result.estimates.push_back(baseline_contrast(log, question.factor_id, contrast));
        break;
    }
  } catch (const Error& e) {
    result.error = e.what();
  }
  return result;
}

}  // namespace mrt
