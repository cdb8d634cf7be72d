#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mrt {

/// Sectioned key-value document (INI notation, ';' comment lines). Section
/// names may contain dots; order of sections and keys is preserved.
class ConfigDocument {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };

  /// Throws CONFIG_ERROR(line) on malformed text or duplicate sections/keys.
  static ConfigDocument parse(std::string_view text);

  const std::vector<Section>& sections() const { return sections_; }
  const Section* find(std::string_view name) const;

 private:
  std::vector<Section> sections_;
};

/// Typed access to one section. Every key must be consumed; check_consumed
/// rejects leftovers so typos surface as errors.
class SectionReader {
 public:
  explicit SectionReader(const ConfigDocument::Section* section, std::string name = {});

  bool present() const { return section_ != nullptr; }
  const std::string& name() const { return name_; }

  std::optional<std::string> text(std::string_view key);
  std::string require_text(std::string_view key);
  std::string text_or(std::string_view key, std::string fallback);
  int int_or(std::string_view key, int fallback);
  int require_int(std::string_view key);
  double double_or(std::string_view key, double fallback);
  bool bool_or(std::string_view key, bool fallback);
  std::vector<double> doubles_or(std::string_view key, std::vector<double> fallback);

  void check_consumed() const;

 private:
  const ConfigDocument::Section* section_;
  std::string name_;
  std::set<std::string, std::less<>> used_;
};

std::string trim(std::string_view s);
/// Splits on `sep`, trimming items and dropping empty ones.
std::vector<std::string> split_list(std::string_view s, char sep = ',');

/// "HH:MM" or plain minutes -> minute of day.
int parse_clock(std::string_view s);
std::string format_clock(int minute_of_day);

/// Shortest round-trip spelling of a double.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace mrt
