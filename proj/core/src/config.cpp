#include "mrt/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mrt/error.hpp"

namespace mrt {

ConfigDocument ConfigDocument::parse(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::config_error, e.message(), e.line());
  }
  ConfigDocument doc;
  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty())
      throw Error(ErrorCode::config_error, "key '" + name + "' outside any section");
    Section s;
    s.name = name;
    for (const auto& [key, value] : child) s.entries.emplace_back(key, value.data());
    doc.sections_.push_back(std::move(s));
  }
  return doc;
}

const ConfigDocument::Section* ConfigDocument::find(std::string_view name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

SectionReader::SectionReader(const ConfigDocument::Section* section, std::string name)
    : section_(section), name_(section ? section->name : std::move(name)) {}

std::optional<std::string> SectionReader::text(std::string_view key) {
  if (!section_) return std::nullopt;
  for (const auto& [k, v] : section_->entries) {
    if (k == key) {
      used_.insert(k);
      return v;
    }
  }
  return std::nullopt;
}

std::string SectionReader::require_text(std::string_view key) {
  auto v = text(key);
  if (!v)
    throw Error(ErrorCode::config_error,
                "[" + name_ + "] missing required key '" + std::string(key) + "'");
  return *v;
}

std::string SectionReader::text_or(std::string_view key, std::string fallback) {
  auto v = text(key);
  return v ? *v : std::move(fallback);
}

namespace {

int to_int(std::string_view s, const std::string& where) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorCode::config_error, where + ": not an integer: '" + std::string(s) + "'");
  return value;
}

}  // namespace

int SectionReader::int_or(std::string_view key, int fallback) {
  auto v = text(key);
  return v ? to_int(*v, "[" + name_ + "] " + std::string(key)) : fallback;
}

int SectionReader::require_int(std::string_view key) {
  return to_int(require_text(key), "[" + name_ + "] " + std::string(key));
}

double SectionReader::double_or(std::string_view key, double fallback) {
  auto v = text(key);
  if (!v) return fallback;
  try {
    return parse_double(*v);
  } catch (const Error&) {
    throw Error(ErrorCode::config_error,
                "[" + name_ + "] " + std::string(key) + ": not a number: '" + *v + "'");
  }
}

bool SectionReader::bool_or(std::string_view key, bool fallback) {
  auto v = text(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "0") return false;
  throw Error(ErrorCode::config_error,
              "[" + name_ + "] " + std::string(key) + ": not a boolean: '" + *v + "'");
}

std::vector<double> SectionReader::doubles_or(std::string_view key, std::vector<double> fallback) {
  auto v = text(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_double(item));
  return out;
}

void SectionReader::check_consumed() const {
  if (!section_) return;
  for (const auto& [k, v] : section_->entries)
    if (!used_.contains(k))
      throw Error(ErrorCode::config_error, "[" + name_ + "] unknown key '" + k + "'");
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) pos = s.size();
    std::string item = trim(s.substr(start, pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = pos + 1;
  }
  return out;
}

int parse_clock(std::string_view s) {
  std::string t = trim(s);
  auto colon = t.find(':');
  if (colon == std::string::npos) return to_int(t, "clock time");
  int h = to_int(std::string_view(t).substr(0, colon), "clock hour");
  int m = to_int(std::string_view(t).substr(colon + 1), "clock minute");
  if (h < 0 || h > 24 || m < 0 || m > 59)
    throw Error(ErrorCode::config_error, "bad clock time '" + t + "'");
  return h * 60 + m;
}

std::string format_clock(int minute_of_day) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute_of_day / 60, minute_of_day % 60);
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  std::string t = trim(s);
  // a/b fractions are accepted so 2/3 can be written exactly
  if (auto slash = t.find('/'); slash != std::string::npos)
    return parse_double(std::string_view(t).substr(0, slash)) /
           parse_double(std::string_view(t).substr(slash + 1));
  double value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw Error(ErrorCode::config_error, "not a number: '" + t + "'");
  return value;
}

}  // namespace mrt
