#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrt/context.hpp"

namespace mrt {

// Availability-condition language.
//
//   predicate  := or_expr
//   or_expr    := and_expr { "or" and_expr }
//   and_expr   := cmp_expr { "and" cmp_expr }
//   cmp_expr   := unary [ relop unary ]
//   unary      := "not" unary | primary
//   primary    := "(" or_expr ")" | number | "true" | "false"
//               | "minutes_since" "(" identifier ")" | identifier
//   relop      := "<" | "<=" | ">" | ">=" | "=" | "==" | "!="
//
// Comparisons take numeric operands only; the root must be boolean.

enum class NodeKind {
  logical_and,
  logical_or,
  logical_not,
  compare,
  variable,
  number,
  boolean,
  minutes_since,
};

enum class CompareOp { lt, le, gt, ge, eq, ne };

std::string_view to_string(CompareOp op);

struct PredicateNode {
  NodeKind kind = NodeKind::boolean;
  CompareOp op = CompareOp::eq;  // compare only
  std::string name;              // variable / minutes_since
  double number = 0.0;           // number only
  bool boolean = false;          // boolean only
  std::vector<PredicateNode> children;
  std::size_t position = 0;  // 1-based source offset, ignored by ==

  friend bool operator==(const PredicateNode& a, const PredicateNode& b);
};

/// A parsed and typechecked predicate. Immutable after construction.
class PredicateAst {
 public:
  PredicateAst() = default;
  explicit PredicateAst(PredicateNode root) : root_(std::move(root)) {}

  const PredicateNode& root() const { return root_; }

  /// Top-level conjuncts (the root itself if it is not an `and`).
  std::vector<const PredicateNode*> conjuncts() const;

  friend bool operator==(const PredicateAst&, const PredicateAst&) = default;

 private:
  PredicateNode root_;
};

/// Throws Error with SYNTAX_ERROR(position), UNKNOWN_VARIABLE or
/// TYPE_MISMATCH(position).
PredicateAst parse_predicate(std::string_view source, const ContextDecls& decls);

/// Pure. Events absent from the snapshot compare as +infinity minutes ago.
/// Throws MISSING_VARIABLE if the snapshot lacks a referenced variable.
bool evaluate(const PredicateAst& ast, const ContextSnapshot& ctx);
bool evaluate(const PredicateNode& node, const ContextSnapshot& ctx);

/// Source text of the first top-level conjunct that evaluates false, or
/// nullopt when the predicate holds.
std::optional<std::string> first_failing_conjunct(const PredicateAst& ast,
                                                  const ContextSnapshot& ctx);

/// Canonical source form with the minimum parentheses needed to reparse.
std::string pretty_print(const PredicateAst& ast);
std::string pretty_print(const PredicateNode& node);

/// Variables and events the predicate reads.
std::vector<std::string> referenced_names(const PredicateAst& ast);

}  // namespace mrt
