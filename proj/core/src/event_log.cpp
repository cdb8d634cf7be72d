#include "mrt/event_log.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mrt/error.hpp"
#include "mrt/participant.hpp"
#include "mrt/predicate.hpp"
#include "mrt/protocol_io.hpp"

namespace mrt {

namespace {

enum class Kind { str, uint, num, boolean, object, array, str_or_null, num_or_null, bool_or_null };

struct FieldRule {
  const char* name;
  Kind kind;
};

bool matches(const Json& v, Kind k) {
  switch (k) {
    case Kind::str: return v.is_string();
    case Kind::uint: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case Kind::num: return v.is_number();
    case Kind::boolean: return v.is_boolean();
    case Kind::object: return v.is_object();
    case Kind::array: return v.is_array();
    case Kind::str_or_null: return v.is_null() || v.is_string();
    case Kind::num_or_null: return v.is_null() || v.is_number();
    case Kind::bool_or_null: return v.is_null() || v.is_boolean();
  }
  return false;
}

const std::map<std::string, std::vector<FieldRule>, std::less<>>& schema() {
  static const std::map<std::string, std::vector<FieldRule>, std::less<>> rules = {
      {"header",
       {{"format", Kind::str}, {"population_size", Kind::uint}}},
      {"enrollment",
       {{"participant_id", Kind::uint}, {"start_weekday", Kind::uint},
        {"baseline", Kind::object}, {"slots", Kind::object}}},
      {"decision",
       {{"participant_id", Kind::uint}, {"factor_id", Kind::str}, {"decision_index", Kind::uint},
        {"time_minutes", Kind::uint}, {"available", Kind::boolean},
        {"availability_reason", Kind::str_or_null}, {"randomized", Kind::boolean},
        {"assigned_level_id", Kind::str}, {"probability_used", Kind::str_or_null},
        {"context", Kind::object}, {"seen", Kind::bool_or_null}}},
      {"delivery",
       {{"decision_record_id", Kind::uint}, {"participant_id", Kind::uint}, {"factor_id", Kind::str},
        {"level_id", Kind::str}, {"time_minutes", Kind::uint}, {"seen", Kind::boolean}}},
      {"signal-day",
       {{"participant_id", Kind::uint}, {"day", Kind::uint}, {"steps", Kind::array},
        {"total", Kind::uint}, {"goal", Kind::num_or_null}, {"events", Kind::object}}},
      {"outcome",
       {{"scope", Kind::str}, {"participant_id", Kind::uint}, {"factor_id", Kind::str},
        {"value", Kind::num_or_null}}},
      {"estimate",
       {{"factor_id", Kind::str}, {"estimate", Kind::num_or_null}}},
  };
  return rules;
}

const std::vector<FieldRule> kEventsHeader = {
    {"protocol_id", Kind::str}, {"protocol_checksum", Kind::str}, {"protocol", Kind::str},
    {"behavior", Kind::str},    {"trial_seed", Kind::uint},       {"base_seed", Kind::uint},
    {"replication", Kind::uint}};

[[noreturn]] void schema_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::schema_violation, what, line);
}

void check_fields(const Json& body, const std::vector<FieldRule>& rules, std::size_t line) {
  for (const auto& rule : rules) {
    auto it = body.find(rule.name);
    if (it == body.end()) schema_error(line, std::string("missing field '") + rule.name + "'");
    if (!matches(*it, rule.kind)) schema_error(line, std::string("field '") + rule.name + "' has the wrong type");
  }
}

void check_record(const Json& body, const std::string& type, std::size_t line) {
  check_fields(body, schema().find(type)->second, line);
  if (type == "header" && body["format"] == kEventsFormat) check_fields(body, kEventsHeader, line);
  if (type == "signal-day") {
    const auto& steps = body["steps"];
    if (steps.size() != static_cast<std::size_t>(kMinutesPerDay))
      schema_error(line, "signal-day needs 1440 step counts");
    for (const auto& s : steps)
      if (!matches(s, Kind::uint)) schema_error(line, "step counts must be non-negative integers");
  }
  if (type == "outcome") {
    const auto scope = body["scope"].get<std::string>();
    if (scope == "decision") check_fields(body, {{"decision_record_id", Kind::uint}, {"missing", Kind::boolean}}, line);
    else if (scope == "study") check_fields(body, {{"level_id", Kind::str}}, line);
    else schema_error(line, "outcome scope must be 'decision' or 'study'");
  }
  if (type == "decision") {
    const auto& ctx = body["context"];
    if (!ctx.contains("values") || !ctx["values"].is_object() || !ctx.contains("minutes_since") ||
        !ctx["minutes_since"].is_object())
      schema_error(line, "decision context needs 'values' and 'minutes_since' objects");
  }
}

Json context_json(const ContextSnapshot& ctx) {
  Json values = Json::object();
  for (const auto& [k, v] : ctx.values) {
    if (const bool* b = std::get_if<bool>(&v)) values[k] = *b;
    else values[k] = std::get<double>(v);
  }
  Json since = Json::object();
  for (const auto& [k, v] : ctx.minutes_since) since[k] = v;
  return Json{{"values", std::move(values)}, {"minutes_since", std::move(since)}};
}

ContextSnapshot context_from(const Json& j) {
  ContextSnapshot ctx;
  for (const auto& [k, v] : j["values"].items()) {
    if (v.is_boolean()) ctx.values.emplace(k, v.get<bool>());
    else ctx.values.emplace(k, v.get<double>());
  }
  for (const auto& [k, v] : j["minutes_since"].items()) ctx.minutes_since.emplace(k, v.get<double>());
  return ctx;
}

Json header_json(const TrialLog& log) {
  const std::string protocol_text = serialize_protocol(log.protocol);
  return Json{{"record_type", "header"},
              {"record_id", 0},
              {"format", kEventsFormat},
              {"protocol_id", log.protocol.protocol_id},
              {"protocol_checksum", fnv1a_hex(protocol_text)},
              {"protocol", protocol_text},
              {"behavior", serialize_behavior(log.behavior)},
              {"trial_seed", log.trial_seed},
              {"base_seed", log.base_seed},
              {"replication", log.replication},
              {"population_size", log.participants.size()},
              {"study_length_days", log.protocol.study_length_days}};
}

Json decision_json(const DecisionPointRecord& r) {
  Json j{{"record_type", "decision"},
         {"record_id", r.record_id},
         {"participant_id", r.participant_index},
         {"factor_id", r.factor_id},
         {"decision_index", r.decision_index},
         {"time_minutes", r.time_minutes},
         {"available", r.available},
         {"availability_reason", nullptr},
         {"randomized", r.randomized},
         {"assigned_level_id", r.assigned_level_id},
         {"probability_used", nullptr},
         {"context", context_json(r.context)},
         {"seen", nullptr}};
  if (r.availability_reason) j["availability_reason"] = *r.availability_reason;
  if (r.probability_used) j["probability_used"] = r.probability_used->to_string();
  if (r.seen) j["seen"] = *r.seen;
  return j;
}

Json signal_day_json(const TrialLog& log, std::size_t p, int day, std::uint64_t id) {
  const ParticipantSignals& s = log.archive.participants[p];
  const auto begin = s.steps.begin() + static_cast<std::ptrdiff_t>(day) * kMinutesPerDay;
  Json steps = Json::array();
  for (auto it = begin; it != begin + kMinutesPerDay; ++it) steps.push_back(*it);
  const std::int64_t lo = static_cast<std::int64_t>(day) * kMinutesPerDay;
  Json events = Json::object();
  for (const auto& [id_, times] : s.events) {
    Json list = Json::array();
    for (auto t : times)
      if (t >= lo && t < lo + kMinutesPerDay) list.push_back(t);
    events[id_] = std::move(list);
  }
  const auto& goal = s.daily_goal[static_cast<std::size_t>(day)];
  return Json{{"record_type", "signal-day"},
              {"record_id", id},
              {"participant_id", p},
              {"day", day},
              {"steps", std::move(steps)},
              {"total", s.day_total(day)},
              {"goal", goal ? Json(*goal) : Json(nullptr)},
              {"events", std::move(events)}};
}

void write_line(std::ostream& out, const Json& j) {
  out << j.dump() << '\n';
}

}  // namespace

void LogWriter::append(const Json& body) {
  const auto type = body.value("record_type", std::string());
  const auto id = body.value("record_id", std::uint64_t{0});
  if (count_ == 0 && type != "header")
    throw Error(ErrorCode::missing_header, "the first record must be a header");
  if (count_ > 0 && (type == "header" || id <= last_id_))
    throw Error(ErrorCode::order_violation, "record " + std::to_string(id) + " out of order",
                count_ + 1);
  write_line(out_, body);
  last_id_ = id;
  ++count_;
}

std::vector<LogRecord> read_records(std::istream& in) {
  std::vector<LogRecord> out;
  std::map<std::uint64_t, std::int64_t> last_decision_time;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty() && in.peek() == std::char_traits<char>::eof()) break;
    Json body;
    try {
      body = Json::parse(text);
    } catch (const Json::exception& e) {
      schema_error(line, std::string("not a JSON object: ") + e.what());
    }
    if (!body.is_object()) schema_error(line, "record is not a JSON object");
    if (!body.contains("record_type") || !body["record_type"].is_string())
      schema_error(line, "missing field 'record_type'");
    if (!body.contains("record_id") || !matches(body["record_id"], Kind::uint))
      schema_error(line, "missing or invalid field 'record_id'");
    const auto type = body["record_type"].get<std::string>();
    if (!schema().contains(type)) schema_error(line, "unknown record_type '" + type + "'");
    const auto id = body["record_id"].get<std::uint64_t>();

    if (out.empty() && type != "header")
      throw Error(ErrorCode::missing_header, "first record is a " + type + " record");
    if (!out.empty() && type == "header")
      throw Error(ErrorCode::order_violation, "second header", line);
    if (!out.empty() && id <= out.back().record_id)
      throw Error(ErrorCode::order_violation,
                  "record_id " + std::to_string(id) + " does not increase", line);
    check_record(body, type, line);
    if (type == "header") {
      const auto format = body["format"].get<std::string>();
      if (format != kEventsFormat && format != kOutcomesFormat)
        schema_error(line, "unsupported log format '" + format + "'");
    }
    if (type == "decision") {
      const auto p = body["participant_id"].get<std::uint64_t>();
      const auto t = body["time_minutes"].get<std::int64_t>();
      auto [it, fresh] = last_decision_time.emplace(p, t);
      if (!fresh) {
        if (t < it->second)
          throw Error(ErrorCode::order_violation,
                      "decision time goes backwards for participant " + std::to_string(p),
                      line);
        it->second = t;
      }
    }
    out.push_back({type, id, std::move(body), line});
  }
  if (out.empty()) throw Error(ErrorCode::missing_header, "log is empty");
  return out;
}

std::vector<LogRecord> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  return read_records(in);
}

std::string events_text(const TrialLog& log) {
  std::ostringstream out;
  LogWriter w(out);
  w.append(header_json(log));
  for (const auto& p : log.participants) {
    Json baseline = Json::object(), slots = Json::object();
    for (std::size_t f = 0; f < log.protocol.factors.size(); ++f) {
      const Factor& factor = log.protocol.factors[f];
      if (p.baseline_levels[f]) baseline[factor.id] = factor.levels[*p.baseline_levels[f]].id;
      if (factor.schedule.kind == ScheduleKind::participant_chosen_slots) slots[factor.id] = p.slot_times[f];
    }
    w.append(Json{{"record_type", "enrollment"},
                  {"record_id", 1 + p.index},
                  {"participant_id", p.index},
                  {"start_weekday", p.start_weekday},
                  {"baseline", std::move(baseline)},
                  {"slots", std::move(slots)}});
  }
  for (const auto& e : log.timeline) {
    if (e.kind == TimelineEntry::Kind::signal_day) {
      w.append(signal_day_json(log, e.index, e.day, e.record_id));
      continue;
    }
    const DecisionPointRecord& r = log.decisions[e.index];
    w.append(decision_json(r));
    if (r.seen)
      w.append(Json{{"record_type", "delivery"},
                    {"record_id", r.record_id + 1},
                    {"decision_record_id", r.record_id},
                    {"participant_id", r.participant_index},
                    {"factor_id", r.factor_id},
                    {"level_id", r.assigned_level_id},
                    {"time_minutes", r.time_minutes},
                    {"seen", *r.seen}});
  }
  return out.str();
}

std::string outcomes_text(const TrialLog& log) {
  std::ostringstream out;
  LogWriter w(out);
  w.append(Json{{"record_type", "header"},
                {"record_id", 0},
                {"format", kOutcomesFormat},
                {"protocol_id", log.protocol.protocol_id},
                {"trial_seed", log.trial_seed},
                {"replication", log.replication},
                {"population_size", log.participants.size()}});
  std::uint64_t id = 1;
  for (const auto& r : log.decisions)
    w.append(Json{{"record_type", "outcome"},
                  {"record_id", id++},
                  {"scope", "decision"},
                  {"decision_record_id", r.record_id},
                  {"participant_id", r.participant_index},
                  {"factor_id", r.factor_id},
                  {"value", r.proximal_outcome ? Json(*r.proximal_outcome) : Json(nullptr)},
                  {"missing", r.outcome_missing}});
  for (const auto& s : log.study_outcomes)
    w.append(Json{{"record_type", "outcome"},
                  {"record_id", id++},
                  {"scope", "study"},
                  {"participant_id", s.participant_index},
                  {"factor_id", s.factor_id},
                  {"level_id", s.level_id},
                  {"value", s.value}});
  return out.str();
}

void write_trial_log(const TrialLog& log, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
  auto write = [&](std::string_view name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  };
  write(kEventsFile, events_text(log));
  write(kOutcomesFile, outcomes_text(log));
}

TrialLog load_trial_log(const std::filesystem::path& dir) {
  const auto records = read_all(dir / kEventsFile);
  const Json& h = records.front().body;
  if (h["format"] != kEventsFormat)
    schema_error(records.front().line, "not an events log (format " + h["format"].dump() + ")");

  TrialLog log;
  log.protocol = parse_protocol(h["protocol"].get<std::string>());
  log.behavior = parse_behavior(h["behavior"].get<std::string>());
  log.trial_seed = h["trial_seed"].get<std::uint64_t>();
  log.base_seed = h["base_seed"].get<std::uint64_t>();
  log.replication = h["replication"].get<std::uint64_t>();
  const auto n = h["population_size"].get<std::size_t>();
  const TrialProtocol& protocol = log.protocol;
  const std::size_t nf = protocol.factors.size();
  const int days = protocol.study_length_days;

  log.archive.study_days = days;
  log.archive.participants.resize(n);
  for (auto& s : log.archive.participants) {
    s.steps.assign(static_cast<std::size_t>(protocol.study_minutes()), 0);
    s.daily_goal.assign(static_cast<std::size_t>(days), std::nullopt);
  }
  std::map<std::uint64_t, std::size_t> decision_by_id;

  auto participant_of = [&](const LogRecord& r) {
    const auto p = r.body["participant_id"].get<std::uint64_t>();
    if (p >= n) schema_error(r.line, "participant_id out of range");
    return p;
  };

  for (const auto& r : records) {
    const Json& b = r.body;
    if (r.record_type == "enrollment") {
      ParticipantState st;
      st.index = participant_of(r);
      st.start_weekday = b["start_weekday"].get<int>();
      st.baseline_levels.resize(nf);
      st.slot_times.resize(nf);
      for (const auto& [fid, lid] : b["baseline"].items()) {
        const auto fi = protocol.factor_index(fid);
        if (!fi || !lid.is_string()) schema_error(r.line, "bad baseline entry '" + fid + "'");
        const auto li = protocol.factors[*fi].level_index(lid.get<std::string>());
        if (!li) schema_error(r.line, "unknown level for " + fid);
        st.baseline_levels[*fi] = li;
      }
      for (const auto& [fid, times] : b["slots"].items()) {
        const auto fi = protocol.factor_index(fid);
        if (!fi || !times.is_array()) schema_error(r.line, "bad slots entry '" + fid + "'");
        st.slot_times[*fi] = times.get<std::vector<int>>();
      }
      log.participants.push_back(std::move(st));
    } else if (r.record_type == "decision") {
      DecisionPointRecord d;
      d.record_id = r.record_id;
      d.participant_index = participant_of(r);
      d.factor_id = b["factor_id"].get<std::string>();
      const auto fi = protocol.factor_index(d.factor_id);
      if (!fi) schema_error(r.line, "unknown factor '" + d.factor_id + "'");
      d.factor_index = *fi;
      d.decision_index = b["decision_index"].get<std::uint64_t>();
      d.time_minutes = b["time_minutes"].get<std::int64_t>();
      d.available = b["available"].get<bool>();
      if (!b["availability_reason"].is_null()) d.availability_reason = b["availability_reason"].get<std::string>();
      d.randomized = b["randomized"].get<bool>();
      d.assigned_level_id = b["assigned_level_id"].get<std::string>();
      if (!b["probability_used"].is_null()) {
        try {
          d.probability_used = Probability::parse(b["probability_used"].get<std::string>());
        } catch (const Error& e) {
          schema_error(r.line, e.what());
        }
      }
      d.context = context_from(b["context"]);
      if (!b["seen"].is_null()) d.seen = b["seen"].get<bool>();
      decision_by_id[d.record_id] = log.decisions.size();
      log.timeline.push_back({TimelineEntry::Kind::decision, log.decisions.size(), 0, d.record_id});
      log.decisions.push_back(std::move(d));
    } else if (r.record_type == "signal-day") {
      const auto p = participant_of(r);
      const int day = b["day"].get<int>();
      if (day >= days) schema_error(r.line, "day out of range");
      auto& s = log.archive.participants[p];
      const auto& steps = b["steps"];
      for (int m = 0; m < kMinutesPerDay; ++m)
        s.steps[static_cast<std::size_t>(day * kMinutesPerDay + m)] = steps[static_cast<std::size_t>(m)].get<std::uint16_t>();
      if (!b["goal"].is_null()) s.daily_goal[static_cast<std::size_t>(day)] = b["goal"].get<double>();
      for (const auto& [id, times] : b["events"].items()) {
        auto& list = s.events[id];
        for (const auto& t : times) list.push_back(t.get<std::int64_t>());
      }
      log.timeline.push_back({TimelineEntry::Kind::signal_day, p, day, r.record_id});
    }
  }
  if (log.participants.size() != n)
    throw Error(ErrorCode::schema_violation, "expected " + std::to_string(n) + " enrollment records");
  for (std::size_t p = 0; p < n; ++p)
    if (log.participants[p].index != p)
      throw Error(ErrorCode::schema_violation, "enrollment records out of participant order");

  const auto outcomes_path = dir / kOutcomesFile;
  if (std::filesystem::exists(outcomes_path)) {
    for (const auto& r : read_all(outcomes_path)) {
      if (r.record_type != "outcome") continue;
      const Json& b = r.body;
      if (b["scope"] == "decision") {
        auto it = decision_by_id.find(b["decision_record_id"].get<std::uint64_t>());
        if (it == decision_by_id.end()) schema_error(r.line, "outcome for an unknown decision record");
        auto& d = log.decisions[it->second];
        d.outcome_missing = b["missing"].get<bool>();
        if (!b["value"].is_null()) d.proximal_outcome = b["value"].get<double>();
      } else {
        log.study_outcomes.push_back({b["participant_id"].get<std::uint64_t>(), b["factor_id"].get<std::string>(),
                                      b["level_id"].get<std::string>(),
                                      b["value"].is_null() ? 0.0 : b["value"].get<double>()});
      }
    }
  }
  return log;
}

std::vector<Violation> verify_log(const std::filesystem::path& events_path,
                                  const TrialProtocol& protocol) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string message) { out.push_back({std::move(code), std::move(message)}); };

  std::vector<LogRecord> records;
  try {
    records = read_all(events_path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io_error) throw;
    add(std::string(to_string(e.code())), e.what());
    return out;
  }
  const Json& h = records.front().body;
  if (h["format"] != kEventsFormat) {
    add("SCHEMA_VIOLATION", "not an events log");
    return out;
  }
  if (h["protocol_checksum"] != fnv1a_hex(serialize_protocol(protocol)))
    add("PROTOCOL_MISMATCH", "log was produced from a different protocol");

  const std::size_t nf = protocol.factors.size();
  const auto n = h["population_size"].get<std::size_t>();
  const int days = protocol.study_length_days;

  std::vector<std::optional<PredicateAst>> gates(nf);
  for (std::size_t f = 0; f < nf; ++f)
    if (protocol.factors[f].availability) {
      try {
        gates[f] = parse_predicate(protocol.factors[f].availability->predicate_source, protocol.context_vars);
      } catch (const Error& e) {
        add("PREDICATE_INVALID", protocol.factors[f].id + ": " + e.what());
      }
    }

  std::map<std::uint64_t, std::map<std::string, std::string>> baseline;  // participant -> factor -> level
  std::map<std::pair<std::uint64_t, std::size_t>, std::vector<const LogRecord*>> decisions;
  std::map<std::uint64_t, const LogRecord*> by_id;
  // participant -> event id -> occurrence minutes
  std::map<std::uint64_t, std::map<std::string, std::set<std::int64_t>>> events;
  std::set<std::pair<std::uint64_t, std::uint64_t>> signal_days;
  std::size_t enrollments = 0;

  for (const auto& r : records) {
    const Json& b = r.body;
    const std::string where = "line " + std::to_string(r.line);
    by_id[r.record_id] = &r;
    if (r.record_type == "enrollment") {
      ++enrollments;
      const auto p = b["participant_id"].get<std::uint64_t>();
      auto [it, fresh] = baseline.try_emplace(p);
      for (const auto& [fid, lid] : b["baseline"].items()) {
        const Factor* f = protocol.find_factor(fid);
        if (!f || f->is_micro()) {
          add("UNKNOWN_FACTOR", where + ": baseline factor '" + fid + "'");
          continue;
        }
        const std::string level = lid.is_string() ? lid.get<std::string>() : lid.dump();
        if (!f->level_index(level)) add("UNKNOWN_LEVEL", where + ": " + fid + "." + level);
        auto [lv, inserted] = it->second.try_emplace(fid, level);
        if (!inserted && lv->second != level)
          add("BASELINE_MUTATED", where + ": participant " + std::to_string(p) + " " + fid + " changed from " +
                                      lv->second + " to " + level);
      }
      if (fresh)
        for (std::size_t f = 0; f < nf; ++f)
          if (!protocol.factors[f].is_micro() && !it->second.contains(protocol.factors[f].id))
            add("BASELINE_MUTATED", where + ": participant " + std::to_string(p) + " has no level for " +
                                        protocol.factors[f].id);
    } else if (r.record_type == "signal-day") {
      const auto p = b["participant_id"].get<std::uint64_t>();
      signal_days.insert({p, b["day"].get<std::uint64_t>()});
      for (const auto& [id, times] : b["events"].items())
        for (const auto& t : times)
          if (t.is_number()) events[p][id].insert(t.get<std::int64_t>());
    } else if (r.record_type == "decision") {
      const auto fi = protocol.factor_index(b["factor_id"].get<std::string>());
      if (!fi) {
        add("UNKNOWN_FACTOR", where + ": " + b["factor_id"].get<std::string>());
        continue;
      }
      decisions[{b["participant_id"].get<std::uint64_t>(), *fi}].push_back(&r);
    }
  }

  for (const auto& [key, list] : decisions) {
    const auto [p, fi] = key;
    const Factor& f = protocol.factors[fi];
    const auto dn = f.do_nothing_index();
    std::size_t forced = dn.value_or(0);
    if (f.availability)
      if (auto li = f.level_index(f.availability->forced_level_id)) forced = *li;
    if (!f.is_micro()) {
      add("GATING_VIOLATION", "baseline factor " + f.id + " has decision records");
      continue;
    }
    std::uint64_t expected_index = 0;
    std::set<std::int64_t> trigger_days;
    for (const LogRecord* rec : list) {
      const Json& b = rec->body;
      const std::string where = "line " + std::to_string(rec->line);
      const auto level_id = b["assigned_level_id"].get<std::string>();
      const auto level = f.level_index(level_id);
      if (!level) {
        add("UNKNOWN_LEVEL", where + ": " + f.id + "." + level_id);
        continue;
      }
      const bool available = b["available"].get<bool>();
      const bool randomized = b["randomized"].get<bool>();
      if (b["decision_index"].get<std::uint64_t>() != expected_index++)
        add("RECORD_COUNT_MISMATCH", where + ": decision_index is not consecutive");
      if (available != randomized)
        add("GATING_VIOLATION", where + ": available=" + (available ? "true" : "false") +
                                    " but randomized=" + (randomized ? "true" : "false"));
      if (!available && *level != forced)
        add("GATING_VIOLATION", where + ": unavailable point assigned " + level_id);
      if (!available && !f.availability)
        add("GATING_VIOLATION", where + ": " + f.id + " has no availability rule");
      if (gates[fi]) {
        try {
          const ContextSnapshot ctx = context_from(b["context"]);
          if (evaluate(*gates[fi], ctx) != available)
            add("GATING_VIOLATION", where + ": recorded availability disagrees with the rule");
        } catch (const Error& e) {
          add("GATING_VIOLATION", where + ": availability cannot be re-evaluated: " + e.what());
        }
      }
      const Json& prob = b["probability_used"];
      if (randomized) {
        std::optional<Probability> used;
        if (prob.is_string()) {
          try {
            used = Probability::parse(prob.get<std::string>());
          } catch (const Error&) {
          }
        }
        if (!used || *used != f.probabilities[*level])
          add("PROBABILITY_MISMATCH", where + ": " + f.id + "." + level_id + " used " + prob.dump() +
                                          ", protocol says " + f.probabilities[*level].to_string());
      } else if (!prob.is_null()) {
        add("PROBABILITY_MISMATCH", where + ": probability recorded without randomization");
      }
      const bool delivers = randomized && !f.levels[*level].do_nothing;
      if (b["seen"].is_null() == delivers)
        add("DELIVERY_MISMATCH", where + ": 'seen' must be set exactly for delivered levels");
      if (delivers) {
        auto next = by_id.find(rec->record_id + 1);
        const bool ok = next != by_id.end() && next->second->record_type == "delivery" &&
                        next->second->body["decision_record_id"] == rec->record_id &&
                        next->second->body["level_id"] == level_id &&
                        next->second->body["seen"] == b["seen"];
        if (!ok) add("DELIVERY_MISMATCH", where + ": delivery record missing or inconsistent");
      }
      const auto t = b["time_minutes"].get<std::int64_t>();
      if (f.schedule.kind == ScheduleKind::event_triggered) {
        if (!events[p][f.schedule.trigger_event_id].contains(t))
          add("RECORD_COUNT_MISMATCH", where + ": no " + f.schedule.trigger_event_id + " occurrence at minute " +
                                           std::to_string(t));
        if (!trigger_days.insert(t / kMinutesPerDay).second)
          add("RECORD_COUNT_MISMATCH", where + ": second " + f.id + " decision point on one day");
      }
    }
    if (auto per_day = f.schedule.points_per_day()) {
      const auto expected = static_cast<std::size_t>(*per_day) * static_cast<std::size_t>(days);
      if (list.size() != expected)
        add("RECORD_COUNT_MISMATCH", "participant " + std::to_string(p) + " " + f.id + ": " +
                                         std::to_string(list.size()) + " decision records, expected " +
                                         std::to_string(expected));
    }
  }

  // Clock/slot factors need records for every participant, and triggers
  // must fire on every day with an occurrence.
  for (std::uint64_t p = 0; p < n; ++p)
    for (std::size_t fi = 0; fi < nf; ++fi) {
      const Factor& f = protocol.factors[fi];
      if (!f.is_micro()) continue;
      const bool present = decisions.contains({p, fi});
      if (f.schedule.points_per_day() && !present)
        add("RECORD_COUNT_MISMATCH", "participant " + std::to_string(p) + " has no " + f.id + " records");
      if (f.schedule.kind == ScheduleKind::event_triggered) {
        std::set<std::int64_t> occurred_days, recorded_days;
        for (auto t : events[p][f.schedule.trigger_event_id]) occurred_days.insert(t / kMinutesPerDay);
        if (present)
          for (const LogRecord* rec : decisions.at({p, fi}))
            recorded_days.insert(rec->body["time_minutes"].get<std::int64_t>() / kMinutesPerDay);
        if (occurred_days != recorded_days)
          add("RECORD_COUNT_MISMATCH", "participant " + std::to_string(p) + " " + f.id + ": " +
                                           std::to_string(recorded_days.size()) + " triggered days, " +
                                           std::to_string(occurred_days.size()) + " days with " +
                                           f.schedule.trigger_event_id);
      }
    }
  if (enrollments != n)
    add("RECORD_COUNT_MISMATCH", std::to_string(enrollments) + " enrollment records for population " + std::to_string(n));
  if (signal_days.size() != n * static_cast<std::size_t>(days))
    add("RECORD_COUNT_MISMATCH", std::to_string(signal_days.size()) + " signal-day records, expected " +
                                     std::to_string(n * static_cast<std::size_t>(days)));

  const auto outcomes_path = events_path.parent_path() / kOutcomesFile;
  if (std::filesystem::exists(outcomes_path)) {
    try {
      for (const auto& r : read_all(outcomes_path)) {
        if (r.record_type != "outcome" || r.body["scope"] != "study") continue;
        const auto p = r.body["participant_id"].get<std::uint64_t>();
        const auto fid = r.body["factor_id"].get<std::string>();
        const auto lid = r.body["level_id"].get<std::string>();
        auto it = baseline.find(p);
        if (it == baseline.end() || !it->second.contains(fid) || it->second.at(fid) != lid)
          add("BASELINE_MUTATED", "outcomes line " + std::to_string(r.line) + ": participant " + std::to_string(p) +
                                      " " + fid + "=" + lid + " disagrees with enrollment");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::io_error) throw;
      add(std::string(to_string(e.code())), std::string("outcomes: ") + e.what());
    }
  }
  return out;
}

}  // namespace mrt
