#include "mrt/predicate.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <set>

#include "mrt/error.hpp"

namespace mrt {

std::string_view to_string(VarType type) {
  switch (type) {
    case VarType::boolean: return "bool";
    case VarType::number: return "number";
    case VarType::event: return "event";
  }
  return "bool";
}

std::optional<VarType> parse_var_type(std::string_view text) {
  if (text == "bool" || text == "boolean") return VarType::boolean;
  if (text == "number") return VarType::number;
  if (text == "event") return VarType::event;
  return std::nullopt;
}

const ContextVarDecl* find_decl(const ContextDecls& decls, std::string_view id) {
  for (const auto& d : decls)
    if (d.id == id) return &d;
  return nullptr;
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
  }
  return "==";
}

bool operator==(const PredicateNode& a, const PredicateNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::compare:
      if (a.op != b.op) return false;
      break;
    case NodeKind::variable:
    case NodeKind::minutes_since:
      if (a.name != b.name) return false;
      break;
    case NodeKind::number:
      if (a.number != b.number) return false;
      break;
    case NodeKind::boolean:
      if (a.boolean != b.boolean) return false;
      break;
    default:
      break;
  }
  return a.children == b.children;
}

std::vector<const PredicateNode*> PredicateAst::conjuncts() const {
  std::vector<const PredicateNode*> out;
  if (root_.kind == NodeKind::logical_and) {
    for (const auto& c : root_.children) out.push_back(&c);
  } else {
    out.push_back(&root_);
  }
  return out;
}

namespace {

enum class Tok {
  end,
  ident,
  number,
  lparen,
  rparen,
  kw_and,
  kw_or,
  kw_not,
  kw_true,
  kw_false,
  kw_minutes_since,
  relop,
};

struct Token {
  Tok kind = Tok::end;
  std::string_view text;
  std::size_t position = 0;  // 1-based
  CompareOp op = CompareOp::eq;
  double number = 0.0;
};

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.position = i + 1;
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_ident_char(src[j])) ++j;
      t.text = src.substr(i, j - i);
      if (t.text == "and") t.kind = Tok::kw_and;
      else if (t.text == "or") t.kind = Tok::kw_or;
      else if (t.text == "not") t.kind = Tok::kw_not;
      else if (t.text == "true") t.kind = Tok::kw_true;
      else if (t.text == "false") t.kind = Tok::kw_false;
      else if (t.text == "minutes_since") t.kind = Tok::kw_minutes_since;
      else t.kind = Tok::ident;
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.'))
        ++j;
      t.text = src.substr(i, j - i);
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(),
                                       t.number, std::chars_format::fixed);
      if (ec != std::errc{} || ptr != t.text.data() + t.text.size())
        throw Error(ErrorCode::syntax_error,
                    "malformed number '" + std::string(t.text) + "'", t.position);
      if (j < src.size() && is_ident_start(src[j]))
        throw Error(ErrorCode::syntax_error, "unexpected character after number", j + 1);
      t.kind = Tok::number;
      i = j;
    } else if (c == '(') {
      t.kind = Tok::lparen;
      t.text = src.substr(i, 1);
      ++i;
    } else if (c == ')') {
      t.kind = Tok::rparen;
      t.text = src.substr(i, 1);
      ++i;
    } else if (c == '<' || c == '>' || c == '=' || c == '!') {
      bool two = i + 1 < src.size() && src[i + 1] == '=';
      t.kind = Tok::relop;
      t.text = src.substr(i, two ? 2 : 1);
      if (c == '<') t.op = two ? CompareOp::le : CompareOp::lt;
      else if (c == '>') t.op = two ? CompareOp::ge : CompareOp::gt;
      else if (c == '=') t.op = CompareOp::eq;
      else if (two) t.op = CompareOp::ne;
      else throw Error(ErrorCode::syntax_error, "unexpected '!'", t.position);
      i += two ? 2 : 1;
    } else {
      throw Error(ErrorCode::syntax_error,
                  std::string("unexpected character '") + c + "'", t.position);
    }
    out.push_back(t);
  }
  Token end;
  end.kind = Tok::end;
  end.position = src.size() + 1;
  out.push_back(end);
  return out;
}

enum class ExprType { boolean, number };

struct Typed {
  PredicateNode node;
  ExprType type;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, const ContextDecls& decls)
      : tokens_(std::move(tokens)), decls_(decls) {}

  PredicateNode parse() {
    Typed t = parse_or();
    if (peek().kind != Tok::end) syntax("unexpected token '" + std::string(peek().text) + "'");
    require_bool(t);
    return std::move(t.node);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }

  [[noreturn]] void syntax(const std::string& what) const {
    const Token& t = peek();
    throw Error(ErrorCode::syntax_error,
                t.kind == Tok::end ? "unexpected end of input" : what, t.position);
  }

  static void require_bool(const Typed& t) {
    if (t.type != ExprType::boolean)
      throw Error(ErrorCode::type_mismatch, "expected a boolean expression", t.node.position);
  }
  static void require_number(const Typed& t) {
    if (t.type != ExprType::number)
      throw Error(ErrorCode::type_mismatch, "comparison operand must be numeric",
                  t.node.position);
  }

  Typed parse_or() { return parse_chain(Tok::kw_or, NodeKind::logical_or, &Parser::parse_and); }
  Typed parse_and() { return parse_chain(Tok::kw_and, NodeKind::logical_and, &Parser::parse_cmp); }

  Typed parse_chain(Tok op, NodeKind kind, Typed (Parser::*next)()) {
    Typed first = (this->*next)();
    if (peek().kind != op) return first;
    require_bool(first);
    PredicateNode node;
    node.kind = kind;
    node.position = first.node.position;
    node.children.push_back(std::move(first.node));
    while (peek().kind == op) {
      take();
      Typed rhs = (this->*next)();
      require_bool(rhs);
      node.children.push_back(std::move(rhs.node));
    }
    return {std::move(node), ExprType::boolean};
  }

  Typed parse_cmp() {
    Typed lhs = parse_unary();
    if (peek().kind != Tok::relop) return lhs;
    const Token& op = take();
    Typed rhs = parse_unary();
    require_number(lhs);
    require_number(rhs);
    if (peek().kind == Tok::relop) syntax("comparisons do not chain");
    PredicateNode node;
    node.kind = NodeKind::compare;
    node.op = op.op;
    node.position = lhs.node.position;
    node.children.push_back(std::move(lhs.node));
    node.children.push_back(std::move(rhs.node));
    return {std::move(node), ExprType::boolean};
  }

  Typed parse_unary() {
    if (peek().kind == Tok::kw_not) {
      const Token& t = take();
      Typed operand = parse_unary();
      require_bool(operand);
      PredicateNode node;
      node.kind = NodeKind::logical_not;
      node.position = t.position;
      node.children.push_back(std::move(operand.node));
      return {std::move(node), ExprType::boolean};
    }
    return parse_primary();
  }

  Typed parse_primary() {
    const Token& t = peek();
    PredicateNode node;
    node.position = t.position;
    switch (t.kind) {
      case Tok::lparen: {
        take();
        Typed inner = parse_or();
        if (peek().kind != Tok::rparen) syntax("expected ')'");
        take();
        return inner;
      }
      case Tok::number:
        take();
        node.kind = NodeKind::number;
        node.number = t.number;
        return {std::move(node), ExprType::number};
      case Tok::kw_true:
      case Tok::kw_false:
        take();
        node.kind = NodeKind::boolean;
        node.boolean = t.kind == Tok::kw_true;
        return {std::move(node), ExprType::boolean};
      case Tok::kw_minutes_since: {
        take();
        if (peek().kind != Tok::lparen) syntax("expected '(' after minutes_since");
        take();
        if (peek().kind != Tok::ident) syntax("expected an event name");
        const Token& id = take();
        if (peek().kind != Tok::rparen) syntax("expected ')'");
        take();
        const ContextVarDecl* decl = find_decl(decls_, id.text);
        if (!decl)
          throw Error(ErrorCode::unknown_variable, std::string(id.text), id.position);
        if (decl->type != VarType::event)
          throw Error(ErrorCode::type_mismatch,
                      "minutes_since expects an event, got '" + std::string(id.text) + "'",
                      id.position);
        node.kind = NodeKind::minutes_since;
        node.name = std::string(id.text);
        return {std::move(node), ExprType::number};
      }
      case Tok::ident: {
        take();
        const ContextVarDecl* decl = find_decl(decls_, t.text);
        if (!decl) throw Error(ErrorCode::unknown_variable, std::string(t.text), t.position);
        if (decl->type == VarType::event)
          throw Error(ErrorCode::type_mismatch,
                      "event '" + std::string(t.text) + "' must be read via minutes_since",
                      t.position);
        node.kind = NodeKind::variable;
        node.name = std::string(t.text);
        return {std::move(node),
                decl->type == VarType::number ? ExprType::number : ExprType::boolean};
      }
      default:
        syntax("unexpected token '" + std::string(t.text) + "'");
    }
  }

  std::vector<Token> tokens_;
  const ContextDecls& decls_;
  std::size_t pos_ = 0;
};

double numeric_value(const PredicateNode& node, const ContextSnapshot& ctx) {
  switch (node.kind) {
    case NodeKind::number:
      return node.number;
    case NodeKind::minutes_since: {
      auto it = ctx.minutes_since.find(node.name);
      return it == ctx.minutes_since.end() ? std::numeric_limits<double>::infinity()
                                           : it->second;
    }
    case NodeKind::variable: {
      auto it = ctx.values.find(node.name);
      if (it == ctx.values.end())
        throw Error(ErrorCode::missing_variable, node.name);
      if (const double* v = std::get_if<double>(&it->second)) return *v;
      throw Error(ErrorCode::type_mismatch, "'" + node.name + "' is not numeric in snapshot");
    }
    default:
      throw Error(ErrorCode::type_mismatch, "node is not numeric", node.position);
  }
}

int precedence(const PredicateNode& node) {
  switch (node.kind) {
    case NodeKind::logical_or: return 1;
    case NodeKind::logical_and: return 2;
    case NodeKind::compare: return 3;
    case NodeKind::logical_not: return 4;
    default: return 5;
  }
}

void print(const PredicateNode& node, std::string& out);

void print_child(const PredicateNode& child, int min_prec, std::string& out) {
  if (precedence(child) < min_prec) {
    out += '(';
    print(child, out);
    out += ')';
  } else {
    print(child, out);
  }
}

void print(const PredicateNode& node, std::string& out) {
  switch (node.kind) {
    case NodeKind::logical_and:
    case NodeKind::logical_or: {
      // Nested chains of the same operator keep their grouping.
      const int prec = precedence(node) + 1;
      const char* sep = node.kind == NodeKind::logical_and ? " and " : " or ";
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) out += sep;
        print_child(node.children[i], prec, out);
      }
      break;
    }
    case NodeKind::logical_not:
      out += "not ";
      print_child(node.children[0], 4, out);
      break;
    case NodeKind::compare:
      print_child(node.children[0], 4, out);
      out += ' ';
      out += to_string(node.op);
      out += ' ';
      print_child(node.children[1], 4, out);
      break;
    case NodeKind::variable:
      out += node.name;
      break;
    case NodeKind::minutes_since:
      out += "minutes_since(" + node.name + ")";
      break;
    case NodeKind::boolean:
      out += node.boolean ? "true" : "false";
      break;
    case NodeKind::number: {
      char buf[64];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, node.number, std::chars_format::fixed);
      out.append(buf, ptr);
      break;
    }
  }
}

void collect(const PredicateNode& node, std::set<std::string>& names) {
  if (node.kind == NodeKind::variable || node.kind == NodeKind::minutes_since)
    names.insert(node.name);
  for (const auto& c : node.children) collect(c, names);
}

}  // namespace

PredicateAst parse_predicate(std::string_view source, const ContextDecls& decls) {
  Parser parser(tokenize(source), decls);
  return PredicateAst(parser.parse());
}

bool evaluate(const PredicateNode& node, const ContextSnapshot& ctx) {
  switch (node.kind) {
    case NodeKind::logical_and:
      for (const auto& c : node.children)
        if (!evaluate(c, ctx)) return false;
      return true;
    case NodeKind::logical_or:
      for (const auto& c : node.children)
        if (evaluate(c, ctx)) return true;
      return false;
    case NodeKind::logical_not:
      return !evaluate(node.children[0], ctx);
    case NodeKind::boolean:
      return node.boolean;
    case NodeKind::variable: {
      auto it = ctx.values.find(node.name);
      if (it == ctx.values.end()) throw Error(ErrorCode::missing_variable, node.name);
      if (const bool* b = std::get_if<bool>(&it->second)) return *b;
      throw Error(ErrorCode::type_mismatch, "'" + node.name + "' is not boolean in snapshot");
    }
    case NodeKind::compare: {
      const double a = numeric_value(node.children[0], ctx);
      const double b = numeric_value(node.children[1], ctx);
      switch (node.op) {
        case CompareOp::lt: return a < b;
        case CompareOp::le: return a <= b;
        case CompareOp::gt: return a > b;
        case CompareOp::ge: return a >= b;
        case CompareOp::eq: return a == b;
        case CompareOp::ne: return a != b;
      }
      return false;
    }
    case NodeKind::number:
    case NodeKind::minutes_since:
      break;
  }
  throw Error(ErrorCode::type_mismatch, "numeric node in boolean position", node.position);
}

bool evaluate(const PredicateAst& ast, const ContextSnapshot& ctx) {
  return evaluate(ast.root(), ctx);
}

std::optional<std::string> first_failing_conjunct(const PredicateAst& ast,
                                                  const ContextSnapshot& ctx) {
  for (const PredicateNode* c : ast.conjuncts())
    if (!evaluate(*c, ctx)) return pretty_print(*c);
  return std::nullopt;
}

std::string pretty_print(const PredicateNode& node) {
  std::string out;
  print(node, out);
  return out;
}

std::string pretty_print(const PredicateAst& ast) { return pretty_print(ast.root()); }

std::vector<std::string> referenced_names(const PredicateAst& ast) {
  std::set<std::string> names;
  collect(ast.root(), names);
  return {names.begin(), names.end()};
}

}  // namespace mrt
