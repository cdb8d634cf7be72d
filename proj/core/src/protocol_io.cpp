#include "mrt/protocol_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "mrt/config.hpp"
#include "mrt/error.hpp"

namespace mrt {

namespace {

std::string_view schedule_kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::clock_times: return "clock-times";
    case ScheduleKind::participant_chosen_slots: return "participant-chosen-slots";
    case ScheduleKind::event_triggered: return "event-triggered";
    case ScheduleKind::at_enrollment: return "at-enrollment";
  }
  return "at-enrollment";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "clock-times") return ScheduleKind::clock_times;
  if (s == "participant-chosen-slots") return ScheduleKind::participant_chosen_slots;
  if (s == "event-triggered") return ScheduleKind::event_triggered;
  if (s == "at-enrollment") return ScheduleKind::at_enrollment;
  throw Error(ErrorCode::config_error, "unknown schedule kind '" + s + "'");
}

std::string_view window_name(OutcomeWindow w) {
  switch (w) {
    case OutcomeWindow::offset_duration: return "offset-duration";
    case OutcomeWindow::next_day: return "next-day";
    case OutcomeWindow::same_day_remainder: return "same-day-remainder";
    case OutcomeWindow::whole_study: return "whole-study";
  }
  return "offset-duration";
}

OutcomeWindow parse_window(const std::string& s) {
  if (s == "offset-duration") return OutcomeWindow::offset_duration;
  if (s == "next-day") return OutcomeWindow::next_day;
  if (s == "same-day-remainder") return OutcomeWindow::same_day_remainder;
  if (s == "whole-study") return OutcomeWindow::whole_study;
  throw Error(ErrorCode::config_error, "unknown outcome window '" + s + "'");
}

std::string_view aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::sum: return "sum";
    case Aggregation::indicator: return "indicator";
    case Aggregation::daily_mean: return "daily-mean";
  }
  return "sum";
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "sum") return Aggregation::sum;
  if (s == "indicator") return Aggregation::indicator;
  if (s == "daily-mean") return Aggregation::daily_mean;
  throw Error(ErrorCode::config_error, "unknown aggregation '" + s + "'");
}

MinuteWindow parse_window_range(const std::string& s) {
  auto dash = s.find('-');
  if (dash == std::string::npos)
    throw Error(ErrorCode::config_error, "slot window '" + s + "' is not a BEGIN-END range");
  return {parse_clock(s.substr(0, dash)), parse_clock(s.substr(dash + 1))};
}

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

struct FactorSections {
  const ConfigDocument::Section* main = nullptr;
  const ConfigDocument::Section* schedule = nullptr;
  const ConfigDocument::Section* availability = nullptr;
  const ConfigDocument::Section* outcome = nullptr;
  std::vector<std::pair<std::string, const ConfigDocument::Section*>> levels;
};

Factor read_factor(const std::string& id, const FactorSections& s) {
  Factor f;
  f.id = id;
  SectionReader main(s.main, "factor." + id);
  f.label = main.text_or("label", id);
  const std::string kind = main.text_or("randomization", "micro");
  if (kind == "micro") f.randomization_kind = RandomizationKind::micro;
  else if (kind == "baseline") f.randomization_kind = RandomizationKind::baseline;
  else throw Error(ErrorCode::config_error, "factor '" + id + "': unknown randomization '" + kind + "'");
  main.check_consumed();

  for (const auto& [level_id, section] : s.levels) {
    SectionReader r(section);
    Level l;
    l.id = level_id;
    l.label = r.text_or("label", level_id);
    l.do_nothing = r.bool_or("do_nothing", false);
    l.payload = r.text_or("payload", "");
    f.probabilities.push_back(Probability::parse(r.require_text("probability")));
    f.levels.push_back(std::move(l));
    r.check_consumed();
  }

  SectionReader sched(s.schedule, "factor." + id + ".schedule");
  if (sched.present()) {
    f.schedule.kind = parse_schedule_kind(sched.require_text("kind"));
    if (auto t = sched.text("clock_times"))
      for (const auto& item : split_list(*t)) f.schedule.clock_times.push_back(parse_clock(item));
    f.schedule.slot_count = sched.int_or("slot_count", 0);
    if (auto t = sched.text("slot_windows"))
      for (const auto& item : split_list(*t)) f.schedule.slot_windows.push_back(parse_window_range(item));
    f.schedule.trigger_event_id = sched.text_or("trigger_event", "");
    sched.check_consumed();
  } else if (f.is_micro()) {
    throw Error(ErrorCode::config_error, "factor '" + id + "' needs a schedule section");
  }

  if (s.availability) {
    SectionReader av(s.availability);
    AvailabilityRule rule;
    rule.predicate_source = av.require_text("predicate");
    rule.forced_level_id = av.require_text("forced_level");
    av.check_consumed();
    f.availability = std::move(rule);
  }

  SectionReader out(s.outcome, "factor." + id + ".outcome");
  if (!out.present()) throw Error(ErrorCode::config_error, "factor '" + id + "' needs an outcome section");
  f.proximal_outcome.signals = split_list(out.require_text("signal"));
  f.proximal_outcome.window = parse_window(out.require_text("window"));
  f.proximal_outcome.offset = out.int_or("offset", 0);
  f.proximal_outcome.duration = out.int_or("duration", 30);
  f.proximal_outcome.aggregation = parse_aggregation(out.require_text("aggregation"));
  out.check_consumed();
  return f;
}

ResearchQuestion read_question(const std::string& id, const ConfigDocument::Section* section) {
  SectionReader r(section);
  ResearchQuestion q;
  q.id = id;
  q.text = r.text_or("text", "");
  const std::string priority = r.text_or("priority", "primary");
  if (priority != "primary" && priority != "secondary")
    throw Error(ErrorCode::config_error, "question '" + id + "': priority must be primary or secondary");
  q.primary = priority == "primary";
  auto kind = parse_question_kind(r.text_or("kind", "overall"));
  if (!kind) throw Error(ErrorCode::config_error, "question '" + id + "': unknown kind");
  q.kind = *kind;
  q.factor_id = r.require_text("factor");
  q.level_a = split_list(r.text_or("level_a", ""));
  q.level_b = split_list(r.text_or("level_b", ""));
  q.moderator = r.text_or("moderator", "");
  q.bins = r.doubles_or("bins", {});
  r.check_consumed();
  return q;
}

}  // namespace

TrialProtocol parse_protocol(std::string_view text) {
  const ConfigDocument doc = ConfigDocument::parse(text);
  TrialProtocol p;

  std::vector<std::string> factor_order;
  std::map<std::string, FactorSections> factor_sections;
  std::vector<std::pair<std::string, const ConfigDocument::Section*>> questions;
  bool have_trial = false;

  for (const auto& section : doc.sections()) {
    const std::string& name = section.name;
    if (name == "trial") {
      have_trial = true;
      SectionReader r(&section);
      p.protocol_id = r.require_text("id");
      p.title = r.text_or("title", "");
      p.study_length_days = r.require_int("study_length_days");
      p.time_resolution = r.int_or("time_resolution", 1);
      r.check_consumed();
    } else if (name == "context") {
      for (const auto& [key, value] : section.entries) {
        auto type = parse_var_type(value);
        if (!type) throw Error(ErrorCode::config_error, "context '" + key + "': unknown type '" + value + "'");
        p.context_vars.push_back({key, *type});
      }
    } else if (name.starts_with("factor.")) {
      std::string rest = name.substr(7);
      std::string id = rest.substr(0, rest.find('.'));
      std::string sub = id.size() < rest.size() ? rest.substr(id.size() + 1) : "";
      if (id.empty()) throw Error(ErrorCode::config_error, "empty factor id in [" + name + "]");
      if (!factor_sections.contains(id)) factor_order.push_back(id);
      FactorSections& fs = factor_sections[id];
      if (sub.empty()) fs.main = &section;
      else if (sub == "schedule") fs.schedule = &section;
      else if (sub == "availability") fs.availability = &section;
      else if (sub == "outcome") fs.outcome = &section;
      else if (sub.starts_with("level.") && sub.size() > 6) fs.levels.emplace_back(sub.substr(6), &section);
      else throw Error(ErrorCode::config_error, "unknown section [" + name + "]");
    } else if (name.starts_with("question.") && name.size() > 9) {
      questions.emplace_back(name.substr(9), &section);
    } else {
      throw Error(ErrorCode::config_error, "unknown section [" + name + "]");
    }
  }
  if (!have_trial) throw Error(ErrorCode::config_error, "missing [trial] section");

  for (const auto& id : factor_order) p.factors.push_back(read_factor(id, factor_sections[id]));
  for (const auto& [id, section] : questions) p.questions.push_back(read_question(id, section));
  p.participant_params = derive_participant_params(p.factors);
  return p;
}

std::vector<ResearchQuestion> parse_questions(std::string_view text) {
  const ConfigDocument doc = ConfigDocument::parse(text);
  std::vector<ResearchQuestion> out;
  for (const auto& section : doc.sections()) {
    if (!section.name.starts_with("question.") || section.name.size() <= 9)
      throw Error(ErrorCode::config_error, "questions file has a [" + section.name + "] section");
    out.push_back(read_question(section.name.substr(9), &section));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrialProtocol load_protocol(const std::filesystem::path& path) {
  return parse_protocol(read_text_file(path));
}

std::string serialize_protocol(const TrialProtocol& p) {
  std::ostringstream o;
  o << "[trial]\n"
    << "id = " << p.protocol_id << "\n";
  if (!p.title.empty()) o << "title = " << p.title << "\n";
  o << "study_length_days = " << p.study_length_days << "\n"
    << "time_resolution = " << p.time_resolution << "\n";

  o << "\n[context]\n";
  for (const auto& v : p.context_vars) o << v.id << " = " << to_string(v.type) << "\n";

  for (const auto& f : p.factors) {
    o << "\n[factor." << f.id << "]\n"
      << "label = " << f.label << "\n"
      << "randomization = " << (f.is_micro() ? "micro" : "baseline") << "\n";
    for (std::size_t i = 0; i < f.levels.size(); ++i) {
      const Level& l = f.levels[i];
      o << "\n[factor." << f.id << ".level." << l.id << "]\n"
        << "label = " << l.label << "\n";
      if (i < f.probabilities.size()) o << "probability = " << f.probabilities[i].to_string() << "\n";
      o << "do_nothing = " << (l.do_nothing ? "true" : "false") << "\n";
      if (!l.payload.empty()) o << "payload = " << l.payload << "\n";
    }
    const Schedule& s = f.schedule;
    o << "\n[factor." << f.id << ".schedule]\n"
      << "kind = " << schedule_kind_name(s.kind) << "\n";
    if (!s.clock_times.empty()) {
      std::vector<std::string> items;
      for (int t : s.clock_times) items.push_back(format_clock(t));
      o << "clock_times = " << join(items) << "\n";
    }
    if (s.slot_count != 0) o << "slot_count = " << s.slot_count << "\n";
    if (!s.slot_windows.empty()) {
      std::vector<std::string> items;
      for (const auto& w : s.slot_windows) items.push_back(format_clock(w.begin) + "-" + format_clock(w.end));
      o << "slot_windows = " << join(items) << "\n";
    }
    if (!s.trigger_event_id.empty()) o << "trigger_event = " << s.trigger_event_id << "\n";
    if (f.availability) {
      o << "\n[factor." << f.id << ".availability]\n"
        << "predicate = " << f.availability->predicate_source << "\n"
        << "forced_level = " << f.availability->forced_level_id << "\n";
    }
    const OutcomeSpec& oc = f.proximal_outcome;
    o << "\n[factor." << f.id << ".outcome]\n"
      << "signal = " << join(oc.signals) << "\n"
      << "window = " << window_name(oc.window) << "\n"
      << "offset = " << oc.offset << "\n"
      << "duration = " << oc.duration << "\n"
      << "aggregation = " << aggregation_name(oc.aggregation) << "\n";
  }

  for (const auto& q : p.questions) {
    o << "\n[question." << q.id << "]\n";
    if (!q.text.empty()) o << "text = " << q.text << "\n";
    o << "priority = " << (q.primary ? "primary" : "secondary") << "\n"
      << "kind = " << to_string(q.kind) << "\n"
      << "factor = " << q.factor_id << "\n";
    if (!q.level_a.empty()) o << "level_a = " << join(q.level_a) << "\n";
    if (!q.level_b.empty()) o << "level_b = " << join(q.level_b) << "\n";
    if (!q.moderator.empty()) o << "moderator = " << q.moderator << "\n";
    if (!q.bins.empty()) {
      std::vector<std::string> items;
      for (double b : q.bins) items.push_back(format_double(b));
      o << "bins = " << join(items) << "\n";
    }
  }
  return o.str();
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mrt
