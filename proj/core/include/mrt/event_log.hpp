#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrt/engine.hpp"
#include "mrt/protocol.hpp"

namespace mrt {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kEventsFormat = "mrt-log/1";
inline constexpr std::string_view kOutcomesFormat = "mrt-outcomes/1";
inline constexpr std::string_view kEventsFile = "events.jsonl";
inline constexpr std::string_view kOutcomesFile = "outcomes.jsonl";

/// One line of a log. `body` is the full JSON object, including
/// record_type and record_id.
struct LogRecord {
  std::string record_type;
  std::uint64_t record_id = 0;
  Json body;
  std::size_t line = 0;  // 1-based; 0 for records not read from a file

  friend bool operator==(const LogRecord& a, const LogRecord& b) {
    return a.record_type == b.record_type && a.record_id == b.record_id && a.body == b.body;
  }
};

/// Append-only writer. The first record must be a header and record ids
/// must increase; violations throw MISSING_HEADER / ORDER_VIOLATION.
class LogWriter {
 public:
  explicit LogWriter(std::ostream& out) : out_(out) {}

  void append(const Json& body);
  std::size_t count() const { return count_; }

 private:
  std::ostream& out_;
  std::size_t count_ = 0;
  std::uint64_t last_id_ = 0;
};

/// Parses and validates every record. Throws SCHEMA_VIOLATION(line),
/// ORDER_VIOLATION(line), MISSING_HEADER, or IO_ERROR.
std::vector<LogRecord> read_records(std::istream& in);
std::vector<LogRecord> read_all(const std::filesystem::path& path);

/// Serialized files of one run.
std::string events_text(const TrialLog& log);
std::string outcomes_text(const TrialLog& log);

/// Writes events.jsonl and outcomes.jsonl into `dir` (created if needed).
void write_trial_log(const TrialLog& log, const std::filesystem::path& dir);

/// Rebuilds a run from `dir`. Outcomes are joined in when outcomes.jsonl
/// exists.
TrialLog load_trial_log(const std::filesystem::path& dir);

/// Post-hoc consistency checks of an events file against a protocol. An
/// outcomes.jsonl next to it is checked for baseline consistency too.
/// Codes: PROTOCOL_MISMATCH, GATING_VIOLATION, PROBABILITY_MISMATCH,
/// DELIVERY_MISMATCH, RECORD_COUNT_MISMATCH, BASELINE_MUTATED,
/// UNKNOWN_FACTOR, UNKNOWN_LEVEL, and the read_all error codes.
std::vector<Violation> verify_log(const std::filesystem::path& events_path,
                                  const TrialProtocol& protocol);

}  // namespace mrt
