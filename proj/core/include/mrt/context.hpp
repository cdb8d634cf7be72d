#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mrt {

/// Declared type of a context variable. `event` variables are occurrence
/// streams; they may only be referenced through minutes_since(...).
enum class VarType { boolean, number, event };

std::string_view to_string(VarType type);
std::optional<VarType> parse_var_type(std::string_view text);

struct ContextVarDecl {
  std::string id;
  VarType type = VarType::boolean;

  friend bool operator==(const ContextVarDecl&, const ContextVarDecl&) = default;
};

using ContextDecls = std::vector<ContextVarDecl>;

const ContextVarDecl* find_decl(const ContextDecls& decls, std::string_view id);

using ContextValue = std::variant<bool, double>;

/// Observed context at one decision point. An event missing from
/// `minutes_since` has never occurred.
struct ContextSnapshot {
  std::map<std::string, ContextValue, std::less<>> values;
  std::map<std::string, double, std::less<>> minutes_since;

  friend bool operator==(const ContextSnapshot&, const ContextSnapshot&) = default;
};

}  // namespace mrt
