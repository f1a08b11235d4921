#include "invmine/lang.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace invmine {

// ---------------------------------------------------------------------------
// Errors

Diagnostic::Diagnostic(DiagnosticKind kind, SourceLoc where, const std::string& message)
    : std::runtime_error(std::to_string(where.line) + ":" + std::to_string(where.col) + ": " +
                         message),
      kind_(kind),
      where_(where),
      message_(message) {}

std::string Diagnostic::format(std::string_view file) const {
  std::ostringstream os;
  os << file << ':' << where_.line << ':' << where_.col << ": " << message_;
  return os.str();
}

RuntimeDomainError::RuntimeDomainError(int pid, int line, const ProgramState& state,
                                       const std::string& what)
    : std::runtime_error("process " + std::to_string(pid) + ", line " + std::to_string(line) +
                         ": " + what + " in state " + state.to_tuple()),
      pid_(pid),
      line_(line),
      state_(state) {}

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
    case BinaryOp::Implies: return "->";
    case BinaryOp::Iff: return "<->";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Domain / ProcTemplate

Domain Domain::range(Value lo, Value hi) {
  Domain d;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

Domain Domain::sparse(std::vector<Value> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  Domain d;
  d.lo_ = values.front();
  d.hi_ = values.back();
  d.sparse_ = std::move(values);
  return d;
}

std::uint64_t Domain::size() const {
  if (!sparse_.empty()) return sparse_.size();
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(hi_) - lo_ + 1);
}

bool Domain::contains(Value v) const {
  if (!sparse_.empty()) return std::binary_search(sparse_.begin(), sparse_.end(), v);
  return v >= lo_ && v <= hi_;
}

Value Domain::min() const { return lo_; }
Value Domain::max() const { return hi_; }

Value Domain::at(std::uint64_t i) const {
  if (!sparse_.empty()) return sparse_[i];
  return static_cast<Value>(lo_ + static_cast<std::int64_t>(i));
}

std::optional<Value> Domain::floor(Value v) const {
  if (v < lo_) return std::nullopt;
  if (sparse_.empty()) return std::min(v, hi_);
  auto it = std::upper_bound(sparse_.begin(), sparse_.end(), v);
  return *std::prev(it);
}

int ProcTemplate::position_of(Value line) const {
  auto it = std::lower_bound(lines.begin(), lines.end(), line);
  if (it == lines.end() || *it != line) return -1;
  return static_cast<int>(it - lines.begin());
}

// ---------------------------------------------------------------------------
// ProgramModel

std::optional<int> ProgramModel::find_slot(std::string_view name) const {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> ProgramModel::find_decl(std::string_view name) const {
  for (std::size_t i = 0; i < decls_.size(); ++i)
    if (decls_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<std::pair<int, Value>> ProgramModel::find_enum_value(std::string_view name) const {
  auto it = enum_values_.find(name);
  if (it == enum_values_.end()) return std::nullopt;
  return it->second;
}

bool ProgramModel::is_valid(const ProgramState& s) const {
  if (static_cast<int>(s.size()) != slot_count()) return false;
  for (int i = 0; i < slot_count(); ++i)
    if (!slots_[i].domain.contains(s[i])) return false;
  return true;
}

std::string ProgramModel::format_value(int slot, Value v) const {
  const SlotInfo& info = slots_[slot];
  if (info.kind == SlotKind::Data) {
    const VarType& t = decls_[info.decl].type;
    if (t.base == BaseType::Enum && v >= 0 && v < static_cast<Value>(enums_[t.enum_id].values.size()))
      return enums_[t.enum_id].values[v];
  }
  return std::to_string(v);
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t number = 0;
  SourceLoc loc;
};

const char* const kPuncts[] = {"<->", "->", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "..",
                               "<",   ">",  "=",  "!",  "+",  "-",  "*",  "(",  ")",  "[",  "]",
                               "{",   "}",  ";",  ",",  ":"};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (src.substr(i, 2) == "/*") {
      SourceLoc start{line, col};
      std::size_t end = src.find("*/", i + 2);
      if (end == std::string_view::npos)
        throw Diagnostic(DiagnosticKind::Lex, start, "unterminated block comment");
      advance(end + 2 - i);
      continue;
    }
    Token t;
    t.loc = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Tok::Int;
      t.text = std::string(src.substr(i, j - i));
      auto [p, ec] = std::from_chars(src.data() + i, src.data() + j, t.number);
      if (ec != std::errc() || t.number > std::numeric_limits<Value>::max())
        throw Diagnostic(DiagnosticKind::Lex, t.loc, "integer literal out of range: " + t.text);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    bool matched = false;
    for (const char* p : kPuncts) {
      std::string_view pv(p);
      if (src.substr(i, pv.size()) == pv) {
        t.kind = Tok::Punct;
        t.text = std::string(pv);
        advance(pv.size());
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw Diagnostic(DiagnosticKind::Lex, t.loc,
                       std::string("unexpected character '") + c + "'");
    }
  }
  Token end;
  end.kind = Tok::End;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

const std::set<std::string, std::less<>> kKeywords = {
    "bool", "byte", "int", "enum", "proc", "replicate", "await", "goto", "assert",
    "true", "false", "_pid", "pc"};

ExprPtr make_const(Value v, SourceLoc loc, ExprType type = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Const;
  e->value = v;
  e->loc = loc;
  e->type = type;
  return e;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::vector<Token> toks, bool formula_mode)
      : toks_(std::move(toks)), formula_mode_(formula_mode) {}

  // State shared with the builder.
  std::vector<VarDecl> decls;
  std::vector<EnumDecl> enums;
  std::map<std::string, std::pair<int, Value>, std::less<>> enum_values;
  std::vector<ProcTemplate> templates;
  int process_count = 0;  // formula mode: number of pc slots

  void parse_program() {
    while (peek_ident("bool") || peek_ident("byte") || peek_ident("int") || peek_ident("enum"))
      parse_declaration();
    if (!peek_ident("proc")) fail_parse(cur(), "expected declaration or 'proc'");
    while (peek_ident("proc")) parse_proc();
    if (cur().kind != Tok::End) fail_parse(cur(), "expected 'proc' or end of input");
  }

  ExprPtr parse_formula() {
    ExprPtr e = parse_expr();
    if (cur().kind != Tok::End) fail_parse(cur(), "unexpected trailing input");
    require_numeric(*e, "condition");
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool formula_mode_;
  bool in_proc_ = false;

  const Token& cur() const { return toks_[pos_]; }
  const Token& next_tok() const { return toks_[std::min(pos_ + 1, toks_.size() - 1)]; }
  bool peek_punct(std::string_view p) const { return cur().kind == Tok::Punct && cur().text == p; }
  bool peek_ident(std::string_view p) const { return cur().kind == Tok::Ident && cur().text == p; }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] static void fail_parse(const Token& t, const std::string& msg) {
    std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw Diagnostic(DiagnosticKind::Parse, t.loc, msg + " (found " + found + ")");
  }

  void expect_punct(std::string_view p) {
    if (!peek_punct(p)) fail_parse(cur(), "expected '" + std::string(p) + "'");
    take();
  }

  Token expect_ident(const char* what) {
    if (cur().kind != Tok::Ident || kKeywords.count(cur().text))
      fail_parse(cur(), std::string("expected ") + what);
    return take();
  }

  std::int64_t expect_int(bool allow_negative) {
    bool neg = false;
    if (allow_negative && peek_punct("-")) {
      take();
      neg = true;
    }
    if (cur().kind != Tok::Int) fail_parse(cur(), "expected integer");
    std::int64_t v = take().number;
    return neg ? -v : v;
  }

  // ---- declarations

  VarType parse_type() {
    Token t = take();
    VarType type;
    if (t.text == "bool") {
      type.base = BaseType::Bool;
      type.lo = 0;
      type.hi = 1;
    } else if (t.text == "byte") {
      type.base = BaseType::Byte;
      type.lo = 0;
      type.hi = 255;
    } else if (t.text == "int") {
      type.base = BaseType::Int;
      if (!peek_punct("["))
        throw Diagnostic(DiagnosticKind::Parse, cur().loc,
                         "int needs an explicit range, e.g. int[0..3]");
      take();
      std::int64_t lo = expect_int(true);
      expect_punct("..");
      std::int64_t hi = expect_int(true);
      expect_punct("]");
      if (lo > hi)
        throw Diagnostic(DiagnosticKind::TypeMismatch, t.loc, "empty int range");
      type.lo = static_cast<Value>(lo);
      type.hi = static_cast<Value>(hi);
    } else {  // enum
      type.base = BaseType::Enum;
      expect_punct("{");
      EnumDecl en;
      int id = static_cast<int>(enums.size());
      do {
        Token name = expect_ident("enum value");
        check_fresh_name(name);
        enum_values[name.text] = {id, static_cast<Value>(en.values.size())};
        en.values.push_back(name.text);
      } while (peek_punct(",") && (take(), true));
      expect_punct("}");
      type.lo = 0;
      type.hi = static_cast<Value>(en.values.size()) - 1;
      type.enum_id = id;
      enums.push_back(std::move(en));
    }
    return type;
  }

  void check_fresh_name(const Token& name) {
    for (const auto& d : decls)
      if (d.name == name.text)
        throw Diagnostic(DiagnosticKind::DuplicateDeclaration, name.loc,
                         "duplicate declaration of '" + name.text + "'");
    if (enum_values.count(name.text))
      throw Diagnostic(DiagnosticKind::DuplicateDeclaration, name.loc,
                       "duplicate declaration of '" + name.text + "'");
  }

  Value parse_init_value(const VarType& type) {
    SourceLoc loc = cur().loc;
    std::int64_t v;
    if (type.base == BaseType::Enum) {
      Token name = expect_ident("enum value");
      auto it = enum_values.find(name.text);
      if (it == enum_values.end() || it->second.first != type.enum_id)
        throw Diagnostic(DiagnosticKind::TypeMismatch, name.loc,
                         "'" + name.text + "' is not a value of this enum");
      return it->second.second;
    }
    if (peek_ident("true") || peek_ident("false")) {
      v = take().text == "true" ? 1 : 0;
    } else {
      v = expect_int(true);
    }
    if (!type.contains(v))
      throw Diagnostic(DiagnosticKind::TypeMismatch, loc,
                       "initial value " + std::to_string(v) + " outside declared range");
    return static_cast<Value>(v);
  }

  void parse_declaration() {
    VarType type = parse_type();
    do {
      Token name = expect_ident("variable name");
      check_fresh_name(name);
      VarDecl d;
      d.name = name.text;
      d.type = type;
      d.loc = name.loc;
      if (peek_punct("[")) {
        take();
        SourceLoc lloc = cur().loc;
        std::int64_t n = expect_int(false);
        if (n < 1) throw Diagnostic(DiagnosticKind::TypeMismatch, lloc, "array length must be >= 1");
        expect_punct("]");
        d.length = static_cast<int>(n);
      }
      Value dflt = type.base == BaseType::Enum ? 0 : (type.contains(0) ? 0 : type.lo);
      d.init.assign(d.element_count(), dflt);
      if (peek_punct("=")) {
        take();
        if (peek_punct("{")) {
          take();
          if (!d.is_array())
            fail_parse(cur(), "brace initializer on a scalar");
          std::vector<Value> vals;
          do {
            vals.push_back(parse_init_value(type));
          } while (peek_punct(",") && (take(), true));
          if (static_cast<int>(vals.size()) != d.length)
            throw Diagnostic(DiagnosticKind::TypeMismatch, name.loc,
                             "initializer has " + std::to_string(vals.size()) +
                                 " values for array of length " + std::to_string(d.length));
          expect_punct("}");
          d.init = std::move(vals);
        } else {
          d.init.assign(d.element_count(), parse_init_value(type));
        }
      }
      decls.push_back(std::move(d));
    } while (peek_punct(",") && (take(), true));
    expect_punct(";");
  }

  // ---- processes

  void parse_proc() {
    Token kw = take();
    ProcTemplate proc;
    if (cur().kind == Tok::Ident && !kKeywords.count(cur().text)) proc.name = take().text;
    if (peek_ident("replicate")) {
      take();
      SourceLoc loc = cur().loc;
      std::int64_t n = expect_int(false);
      if (n < 1) throw Diagnostic(DiagnosticKind::Parse, loc, "replicate count must be >= 1");
      proc.replicate = static_cast<int>(n);
    }
    expect_punct("{");
    in_proc_ = true;
    int last_line = 0;
    while (!peek_punct("}")) {
      if (cur().kind == Tok::End) fail_parse(cur(), "expected '}'");
      if (cur().kind == Tok::Ident && !kKeywords.count(cur().text) && next_tok().kind == Tok::Punct &&
          next_tok().text == ":") {
        Stmt label;
        label.kind = StmtKind::Label;
        label.loc = cur().loc;
        label.label = take().text;
        take();
        proc.body.push_back(std::move(label));
        continue;
      }
      if (cur().loc.line <= last_line)
        throw Diagnostic(DiagnosticKind::Parse, cur().loc, "one statement per line");
      last_line = cur().loc.line;
      proc.body.push_back(parse_stmt());
    }
    proc.close_loc = cur().loc;
    if (proc.close_loc.line <= last_line)
      throw Diagnostic(DiagnosticKind::Parse, proc.close_loc,
                       "closing brace must be on its own line");
    take();
    in_proc_ = false;

    bool has_code = std::any_of(proc.body.begin(), proc.body.end(),
                                [](const Stmt& s) { return s.kind != StmtKind::Label; });
    if (!has_code) throw Diagnostic(DiagnosticKind::Parse, kw.loc, "empty process body");

    std::set<std::string> labels;
    for (const Stmt& s : proc.body) {
      if (s.kind == StmtKind::Label && !labels.insert(s.label).second)
        throw Diagnostic(DiagnosticKind::DuplicateDeclaration, s.loc,
                         "duplicate label '" + s.label + "'");
    }
    for (const Stmt& s : proc.body) {
      if (s.kind == StmtKind::Goto && !labels.count(s.label))
        throw Diagnostic(DiagnosticKind::UnresolvedLabel, s.loc,
                         "unresolved goto label '" + s.label + "'");
    }
    proc.first_pid = process_count;
    process_count += proc.replicate;
    templates.push_back(std::move(proc));
  }

  Stmt parse_stmt() {
    Stmt s;
    s.loc = cur().loc;
    if (peek_ident("await")) {
      take();
      s.kind = StmtKind::Guard;
      s.expr = parse_expr();
      require_numeric(*s.expr, "await condition");
    } else if (peek_punct("(")) {
      s.kind = StmtKind::Guard;
      s.expr = parse_expr();
      require_numeric(*s.expr, "guard condition");
    } else if (peek_ident("assert")) {
      take();
      s.kind = StmtKind::Assert;
      s.expr = parse_expr();
      require_numeric(*s.expr, "assert condition");
    } else if (peek_ident("goto")) {
      take();
      s.kind = StmtKind::Goto;
      s.label = expect_ident("label").text;
    } else if (cur().kind == Tok::Ident && !kKeywords.count(cur().text)) {
      s.kind = StmtKind::Assign;
      Token name = take();
      auto var = resolve_var(name);
      s.target_var = var;
      const VarDecl& d = decls[var];
      if (peek_punct("[")) {
        if (!d.is_array())
          throw Diagnostic(DiagnosticKind::TypeMismatch, cur().loc,
                           "'" + d.name + "' is not an array");
        take();
        s.target_index = parse_index(d);
        expect_punct("]");
      } else if (d.is_array()) {
        throw Diagnostic(DiagnosticKind::TypeMismatch, name.loc,
                         "array '" + d.name + "' needs an index");
      }
      ExprType lhs_type{d.type.base == BaseType::Enum ? d.type.enum_id : -1};
      if (peek_punct("++") || peek_punct("--")) {
        Token op = take();
        if (lhs_type.is_enum())
          throw Diagnostic(DiagnosticKind::TypeMismatch, op.loc, "arithmetic on enum variable");
        auto read = std::make_shared<Expr>();
        read->kind = ExprKind::Var;
        read->loc = name.loc;
        read->var = var;
        read->index = s.target_index;
        auto bin = std::make_shared<Expr>();
        bin->kind = ExprKind::Binary;
        bin->loc = op.loc;
        bin->binary_op = op.text == "++" ? BinaryOp::Add : BinaryOp::Sub;
        bin->lhs = read;
        bin->rhs = make_const(1, op.loc);
        s.expr = bin;
      } else {
        expect_punct("=");
        s.expr = parse_expr();
        if (!(s.expr->type == lhs_type))
          throw Diagnostic(DiagnosticKind::TypeMismatch, s.expr->loc,
                           "type mismatch in assignment to '" + d.name + "'");
      }
    } else {
      fail_parse(cur(), "expected statement");
    }
    expect_punct(";");
    return s;
  }

  int resolve_var(const Token& name) {
    for (std::size_t i = 0; i < decls.size(); ++i)
      if (decls[i].name == name.text) return static_cast<int>(i);
    throw Diagnostic(DiagnosticKind::UnknownVariable, name.loc,
                     "unknown variable '" + name.text + "'");
  }

  ExprPtr parse_index(const VarDecl& d) {
    ExprPtr idx = parse_expr();
    if (idx->type.is_enum())
      throw Diagnostic(DiagnosticKind::TypeMismatch, idx->loc, "array index must be an integer");
    if (idx->kind == ExprKind::Const && (idx->value < 0 || idx->value >= d.length))
      throw Diagnostic(DiagnosticKind::TypeMismatch, idx->loc,
                       "index " + std::to_string(idx->value) + " out of range for '" + d.name + "'");
    return idx;
  }

  // ---- expressions

  static void require_numeric(const Expr& e, const char* what) {
    if (e.type.is_enum())
      throw Diagnostic(DiagnosticKind::TypeMismatch, e.loc, std::string(what) + " must be numeric");
  }

  ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourceLoc loc) {
    switch (op) {
      case BinaryOp::Eq:
      case BinaryOp::Ne:
        if (!(lhs->type == rhs->type))
          throw Diagnostic(DiagnosticKind::TypeMismatch, loc,
                           std::string("operands of '") + to_string(op) + "' have different types");
        break;
      default:
        if (lhs->type.is_enum() || rhs->type.is_enum())
          throw Diagnostic(DiagnosticKind::TypeMismatch, loc,
                           std::string("operator '") + to_string(op) + "' needs numeric operands");
    }
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Binary;
    e->loc = loc;
    e->binary_op = op;
    e->lhs = std::move(lhs);
    e->rhs = std::move(rhs);
    return e;
  }

  ExprPtr parse_expr() { return parse_iff(); }

  ExprPtr parse_iff() {
    ExprPtr lhs = parse_implies();
    while (peek_punct("<->")) {
      if (!formula_mode_) fail_parse(cur(), "'<->' is only allowed in conditions");
      Token op = take();
      lhs = binary(BinaryOp::Iff, lhs, parse_implies(), op.loc);
    }
    return lhs;
  }

  ExprPtr parse_implies() {
    ExprPtr lhs = parse_or();
    if (peek_punct("->")) {
      if (!formula_mode_) fail_parse(cur(), "'->' is only allowed in conditions");
      Token op = take();
      return binary(BinaryOp::Implies, lhs, parse_implies(), op.loc);
    }
    return lhs;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (peek_punct("||")) {
      Token op = take();
      lhs = binary(BinaryOp::Or, lhs, parse_and(), op.loc);
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_equality();
    while (peek_punct("&&")) {
      Token op = take();
      lhs = binary(BinaryOp::And, lhs, parse_equality(), op.loc);
    }
    return lhs;
  }

  ExprPtr parse_equality() {
    ExprPtr lhs = parse_relational();
    while (peek_punct("==") || peek_punct("!=") || (formula_mode_ && peek_punct("="))) {
      Token op = take();
      BinaryOp bop = op.text == "!=" ? BinaryOp::Ne : BinaryOp::Eq;
      lhs = binary(bop, lhs, parse_relational(), op.loc);
    }
    return lhs;
  }

  ExprPtr parse_relational() {
    ExprPtr lhs = parse_additive();
    if (peek_punct("<") || peek_punct("<=") || peek_punct(">") || peek_punct(">=")) {
      Token op = take();
      BinaryOp bop = op.text == "<"    ? BinaryOp::Lt
                     : op.text == "<=" ? BinaryOp::Le
                     : op.text == ">"  ? BinaryOp::Gt
                                       : BinaryOp::Ge;
      lhs = binary(bop, lhs, parse_additive(), op.loc);
    }
    return lhs;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (peek_punct("+") || peek_punct("-")) {
      Token op = take();
      lhs = binary(op.text == "+" ? BinaryOp::Add : BinaryOp::Sub, lhs, parse_multiplicative(),
                   op.loc);
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (peek_punct("*")) {
      Token op = take();
      lhs = binary(BinaryOp::Mul, lhs, parse_unary(), op.loc);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (peek_punct("!") || peek_punct("-")) {
      Token op = take();
      ExprPtr operand = parse_unary();
      require_numeric(*operand, op.text == "!" ? "operand of '!'" : "operand of '-'");
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Unary;
      e->loc = op.loc;
      e->unary_op = op.text == "!" ? UnaryOp::Not : UnaryOp::Neg;
      e->lhs = operand;
      return e;
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = cur();
    if (t.kind == Tok::Int) {
      Token n = take();
      return make_const(static_cast<Value>(n.number), n.loc);
    }
    if (peek_punct("(")) {
      take();
      ExprPtr e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (t.kind != Tok::Ident) fail_parse(t, "expected expression");
    Token name = take();
    if (name.text == "true" || name.text == "false") {
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Const;
      e->loc = name.loc;
      e->value = name.text == "true" ? 1 : 0;
      e->is_bool_literal = true;
      return e;
    }
    if (name.text == "_pid") {
      if (!in_proc_)
        throw Diagnostic(DiagnosticKind::UnknownVariable, name.loc, "'_pid' outside a process");
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Pid;
      e->loc = name.loc;
      return e;
    }
    if (name.text == "pc" && formula_mode_) {
      expect_punct("[");
      SourceLoc loc = cur().loc;
      std::int64_t idx = expect_int(false);
      expect_punct("]");
      if (idx >= process_count)
        throw Diagnostic(DiagnosticKind::UnknownVariable, loc,
                         "no process with index " + std::to_string(idx));
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Pc;
      e->loc = name.loc;
      e->var = static_cast<int>(idx);
      return e;
    }
    if (kKeywords.count(name.text)) fail_parse(name, "expected expression");
    if (auto it = enum_values.find(name.text); it != enum_values.end())
      return make_const(it->second.second, name.loc, ExprType{it->second.first});
    int var = resolve_var(name);
    const VarDecl& d = decls[var];
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Var;
    e->loc = name.loc;
    e->var = var;
    e->type = ExprType{d.type.base == BaseType::Enum ? d.type.enum_id : -1};
    if (peek_punct("[")) {
      if (!d.is_array())
        throw Diagnostic(DiagnosticKind::TypeMismatch, cur().loc, "'" + d.name + "' is not an array");
      take();
      e->index = parse_index(d);
      expect_punct("]");
    } else if (d.is_array()) {
      throw Diagnostic(DiagnosticKind::TypeMismatch, name.loc,
                       "array '" + d.name + "' needs an index");
    }
    return e;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Model construction

class ModelBuilder {
 public:
  static std::shared_ptr<const ProgramModel> build(Parser& p) {
    auto m = std::make_shared<ProgramModel>();
    m->decls_ = std::move(p.decls);
    m->enums_ = std::move(p.enums);
    m->enum_values_ = std::move(p.enum_values);
    m->templates_ = std::move(p.templates);

    for (std::size_t t = 0; t < m->templates_.size(); ++t) {
      ProcTemplate& proc = m->templates_[t];
      std::unordered_map<std::string, int> label_pos;
      for (std::size_t b = 0; b < proc.body.size(); ++b) {
        const Stmt& s = proc.body[b];
        if (s.kind == StmtKind::Label) {
          label_pos[s.label] = static_cast<int>(proc.code.size());
        } else {
          proc.code.push_back(static_cast<int>(b));
          proc.lines.push_back(s.loc.line);
        }
      }
      proc.lines.push_back(proc.close_loc.line);
      for (std::size_t i = 0; i < proc.code.size(); ++i) {
        const Stmt& s = proc.statement(static_cast<int>(i));
        proc.next.push_back(s.kind == StmtKind::Goto ? label_pos.at(s.label)
                                                     : static_cast<int>(i) + 1);
      }
      for (int r = 0; r < proc.replicate; ++r) m->pid_template_.push_back(static_cast<int>(t));
    }

    std::vector<Value> init;
    for (int pid = 0; pid < m->process_count(); ++pid) {
      const ProcTemplate& proc = m->process_template(pid);
      SlotInfo slot;
      slot.name = "pc[" + std::to_string(pid) + "]";
      slot.kind = SlotKind::Pc;
      slot.pid = pid;
      slot.domain = Domain::sparse(proc.lines);
      slot.sort = -(1 + m->pid_template_[pid]);
      m->slots_.push_back(std::move(slot));
      init.push_back(proc.lines.front());
    }
    for (std::size_t d = 0; d < m->decls_.size(); ++d) {
      const VarDecl& decl = m->decls_[d];
      m->decl_offset_.push_back(static_cast<int>(m->slots_.size()));
      for (int e = 0; e < decl.element_count(); ++e) {
        SlotInfo slot;
        slot.name = decl.is_array() ? decl.name + "[" + std::to_string(e) + "]" : decl.name;
        slot.decl = static_cast<int>(d);
        slot.element = e;
        slot.domain = Domain::range(decl.type.lo, decl.type.hi);
        slot.sort = decl.type.base == BaseType::Enum ? 1 + decl.type.enum_id : 0;
        slot.ordered = decl.type.base != BaseType::Enum;
        m->slots_.push_back(std::move(slot));
        init.push_back(decl.init[e]);
      }
    }
    m->initial_ = ProgramState(std::move(init));
    return m;
  }
};

std::shared_ptr<const ProgramModel> parse(std::string_view source) {
  Parser p(lex(source), false);
  p.parse_program();
  return ModelBuilder::build(p);
}

ExprPtr parse_condition(const ProgramModel& model, std::string_view text) {
  Parser p(lex(text), true);
  p.decls = model.decls();
  p.enums = model.enums();
  for (std::size_t e = 0; e < model.enums().size(); ++e)
    for (std::size_t v = 0; v < model.enums()[e].values.size(); ++v)
      p.enum_values[model.enums()[e].values[v]] = {static_cast<int>(e), static_cast<Value>(v)};
  p.process_count = model.process_count();
  return p.parse_formula();
}

// ---------------------------------------------------------------------------
// Evaluation

std::int64_t evaluate(const ProgramModel& model, const Expr& e, const ProgramState& s, int pid,
                      int line) {
  switch (e.kind) {
    case ExprKind::Const:
      return e.value;
    case ExprKind::Pid:
      return pid;
    case ExprKind::Pc:
      return s[model.pc_slot(e.var)];
    case ExprKind::Var: {
      const VarDecl& d = model.decls()[e.var];
      std::int64_t idx = 0;
      if (e.index) {
        idx = evaluate(model, *e.index, s, pid, line);
        if (idx < 0 || idx >= d.length)
          throw RuntimeDomainError(pid, line, s,
                                   "index " + std::to_string(idx) + " out of bounds for '" +
                                       d.name + "'");
      }
      return s[model.data_slot(e.var, static_cast<int>(idx))];
    }
    case ExprKind::Unary: {
      std::int64_t v = evaluate(model, *e.lhs, s, pid, line);
      return e.unary_op == UnaryOp::Not ? (v == 0) : -v;
    }
    case ExprKind::Binary: {
      std::int64_t a = evaluate(model, *e.lhs, s, pid, line);
      switch (e.binary_op) {
        case BinaryOp::And:
          return a != 0 && evaluate(model, *e.rhs, s, pid, line) != 0;
        case BinaryOp::Or:
          return a != 0 || evaluate(model, *e.rhs, s, pid, line) != 0;
        case BinaryOp::Implies:
          return a == 0 || evaluate(model, *e.rhs, s, pid, line) != 0;
        default:
          break;
      }
      std::int64_t b = evaluate(model, *e.rhs, s, pid, line);
      switch (e.binary_op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Eq: return a == b;
        case BinaryOp::Ne: return a != b;
        case BinaryOp::Lt: return a < b;
        case BinaryOp::Le: return a <= b;
        case BinaryOp::Gt: return a > b;
        case BinaryOp::Ge: return a >= b;
        case BinaryOp::Iff: return (a != 0) == (b != 0);
        default: break;
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Printing and comparison

std::string to_source(const ProgramModel& model, const Expr& e) {
  switch (e.kind) {
    case ExprKind::Const:
      if (e.type.is_enum()) return model.enums()[e.type.enum_id].values[e.value];
      if (e.is_bool_literal) return e.value ? "true" : "false";
      return std::to_string(e.value);
    case ExprKind::Pid:
      return "_pid";
    case ExprKind::Pc:
      return "pc[" + std::to_string(e.var) + "]";
    case ExprKind::Var: {
      std::string out = model.decls()[e.var].name;
      if (e.index) out += "[" + to_source(model, *e.index) + "]";
      return out;
    }
    case ExprKind::Unary: {
      std::string inner = to_source(model, *e.lhs);
      if (e.lhs->kind == ExprKind::Binary) inner = "(" + inner + ")";
      // "- -1" must not lex as "--".
      if (e.unary_op == UnaryOp::Neg && !inner.empty() && inner[0] == '-') inner = "(" + inner + ")";
      return (e.unary_op == UnaryOp::Not ? "!" : "-") + inner;
    }
    case ExprKind::Binary: {
      auto side = [&](const Expr& x) {
        std::string s = to_source(model, x);
        return x.kind == ExprKind::Binary ? "(" + s + ")" : s;
      };
      return side(*e.lhs) + " " + to_string(e.binary_op) + " " + side(*e.rhs);
    }
  }
  return {};
}

namespace {

std::string type_source(const ProgramModel& m, const VarType& t) {
  switch (t.base) {
    case BaseType::Bool: return "bool";
    case BaseType::Byte: return "byte";
    case BaseType::Int: return "int[" + std::to_string(t.lo) + ".." + std::to_string(t.hi) + "]";
    case BaseType::Enum: {
      std::string out = "enum { ";
      const auto& vals = m.enums()[t.enum_id].values;
      for (std::size_t i = 0; i < vals.size(); ++i) out += (i ? ", " : "") + vals[i];
      return out + " }";
    }
  }
  return {};
}

std::string init_value_source(const ProgramModel& m, const VarType& t, Value v) {
  if (t.base == BaseType::Enum) return m.enums()[t.enum_id].values[v];
  return std::to_string(v);
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind || !(a->type == b->type)) return false;
  switch (a->kind) {
    case ExprKind::Const: return a->value == b->value;
    case ExprKind::Pid: return true;
    case ExprKind::Pc: return a->var == b->var;
    case ExprKind::Var: return a->var == b->var && expr_equal(a->index, b->index);
    case ExprKind::Unary: return a->unary_op == b->unary_op && expr_equal(a->lhs, b->lhs);
    case ExprKind::Binary:
      return a->binary_op == b->binary_op && expr_equal(a->lhs, b->lhs) &&
             expr_equal(a->rhs, b->rhs);
  }
  return false;
}

}  // namespace

std::string pretty_print(const ProgramModel& m) {
  std::ostringstream os;
  const auto& decls = m.decls();
  for (std::size_t i = 0; i < decls.size();) {
    const VarDecl& first = decls[i];
    os << type_source(m, first.type) << ' ';
    std::size_t j = i;
    // Variables sharing an anonymous enum must stay in one declaration.
    do {
      const VarDecl& d = decls[j];
      if (j != i) os << ", ";
      os << d.name;
      if (d.is_array()) os << '[' << d.length << ']';
      bool all_same = std::all_of(d.init.begin(), d.init.end(),
                                  [&](Value v) { return v == d.init.front(); });
      if (all_same) {
        os << " = " << init_value_source(m, d.type, d.init.front());
      } else {
        os << " = {";
        for (std::size_t k = 0; k < d.init.size(); ++k)
          os << (k ? ", " : "") << init_value_source(m, d.type, d.init[k]);
        os << '}';
      }
      ++j;
    } while (j < decls.size() && first.type.base == BaseType::Enum &&
             decls[j].type == first.type);
    os << ";\n";
    i = j;
  }
  for (const ProcTemplate& proc : m.templates()) {
    os << "\nproc";
    if (!proc.name.empty()) os << ' ' << proc.name;
    if (proc.replicate != 1) os << " replicate " << proc.replicate;
    os << " {\n";
    for (const Stmt& s : proc.body) {
      switch (s.kind) {
        case StmtKind::Label:
          os << s.label << ":\n";
          break;
        case StmtKind::Assign: {
          os << "  " << decls[s.target_var].name;
          if (s.target_index) os << '[' << to_source(m, *s.target_index) << ']';
          os << " = " << to_source(m, *s.expr) << ";\n";
          break;
        }
        case StmtKind::Guard:
          os << "  await " << to_source(m, *s.expr) << ";\n";
          break;
        case StmtKind::Assert:
          os << "  assert(" << to_source(m, *s.expr) << ");\n";
          break;
        case StmtKind::Goto:
          os << "  goto " << s.label << ";\n";
          break;
      }
    }
    os << "}\n";
  }
  return os.str();
}

bool structurally_equal(const ProgramModel& a, const ProgramModel& b) {
  if (a.enums() != b.enums()) return false;
  if (a.decls().size() != b.decls().size()) return false;
  for (std::size_t i = 0; i < a.decls().size(); ++i) {
    const VarDecl& x = a.decls()[i];
    const VarDecl& y = b.decls()[i];
    if (x.name != y.name || !(x.type == y.type) || x.length != y.length || x.init != y.init)
      return false;
  }
  if (a.templates().size() != b.templates().size()) return false;
  for (std::size_t t = 0; t < a.templates().size(); ++t) {
    const ProcTemplate& x = a.templates()[t];
    const ProcTemplate& y = b.templates()[t];
    if (x.name != y.name || x.replicate != y.replicate || x.body.size() != y.body.size())
      return false;
    for (std::size_t i = 0; i < x.body.size(); ++i) {
      const Stmt& s = x.body[i];
      const Stmt& u = y.body[i];
      if (s.kind != u.kind || s.target_var != u.target_var || s.label != u.label ||
          !expr_equal(s.target_index, u.target_index) || !expr_equal(s.expr, u.expr))
        return false;
    }
  }
  return true;
}

std::optional<std::uint64_t> state_space_size(const ProgramModel& model) {
  std::uint64_t total = 1;
  for (const SlotInfo& slot : model.slots()) {
    std::uint64_t n = slot.domain.size();
    if (total > std::numeric_limits<std::uint64_t>::max() / n) return std::nullopt;
    total *= n;
  }
  return total;
}

// ---------------------------------------------------------------------------
// ProgramState helpers

std::string ProgramState::to_tsv() const {
  std::string out;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (i) out += '\t';
    out += std::to_string(slots_[i]);
  }
  return out;
}

std::string ProgramState::to_tuple() const {
  std::string out = "<";
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(slots_[i]);
  }
  return out + ">";
}

std::vector<ProgramState> sorted_states(const StateSet& set) {
  std::vector<ProgramState> out(set.begin(), set.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace invmine
