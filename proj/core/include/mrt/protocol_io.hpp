#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mrt/protocol.hpp"

namespace mrt {

/// Reads a protocol document. Throws CONFIG_ERROR for malformed text,
/// unknown keys or missing required keys; structural rule violations are
/// left for validate_protocol.
TrialProtocol parse_protocol(std::string_view text);
TrialProtocol load_protocol(const std::filesystem::path& path);

/// Reads a document holding only [question.<id>] sections.
std::vector<ResearchQuestion> parse_questions(std::string_view text);

/// Canonical text form; parse_protocol(serialize_protocol(p)) == p.
std::string serialize_protocol(const TrialProtocol& protocol);

/// 64-bit FNV-1a, hex encoded. Used as the protocol checksum in log headers.
std::string fnv1a_hex(std::string_view bytes);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace mrt
