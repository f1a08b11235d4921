#pragma once

// Front end for the modeling language: lexer, parser, static checker and
// the validated ProgramModel consumed by every other module.
//
// Models are shared-variable programs with a fixed set of processes. A
// process counter takes the source line number of the statement it points
// at; the line of the closing brace is the terminal position.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "invmine/state.hpp"

namespace invmine {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

enum class DiagnosticKind {
  Lex,
  Parse,
  UnknownVariable,
  TypeMismatch,
  UnresolvedLabel,
  DuplicateDeclaration,
};

/// Static error in a model or formula source. Always carries a location.
class Diagnostic : public std::runtime_error {
 public:
  Diagnostic(DiagnosticKind kind, SourceLoc where, const std::string& message);

  DiagnosticKind kind() const { return kind_; }
  SourceLoc where() const { return where_; }
  const std::string& message() const { return message_; }
  /// `file:line:col: message`
  std::string format(std::string_view file) const;

 private:
  DiagnosticKind kind_;
  SourceLoc where_;
  std::string message_;
};

/// Raised while executing a statement whose effect leaves a declared domain
/// (assignment out of range, array index out of bounds).
class RuntimeDomainError : public std::runtime_error {
 public:
  RuntimeDomainError(int pid, int line, const ProgramState& state, const std::string& what);
  int pid() const { return pid_; }
  int line() const { return line_; }
  const ProgramState& state() const { return state_; }

 private:
  int pid_;
  int line_;
  ProgramState state_;
};

// ---------------------------------------------------------------------------
// Types and declarations

enum class BaseType { Bool, Byte, Int, Enum };

struct VarType {
  BaseType base = BaseType::Int;
  Value lo = 0;
  Value hi = 0;
  int enum_id = -1;  // BaseType::Enum only

  std::uint64_t domain_size() const { return static_cast<std::uint64_t>(hi - lo) + 1; }
  bool contains(std::int64_t v) const { return v >= lo && v <= hi; }
  friend bool operator==(const VarType&, const VarType&) = default;
};

struct EnumDecl {
  std::vector<std::string> values;
  friend bool operator==(const EnumDecl&, const EnumDecl&) = default;
};

struct VarDecl {
  std::string name;
  VarType type;
  int length = 0;           // 0 for scalars, element count for arrays
  std::vector<Value> init;  // one value per element
  SourceLoc loc;

  bool is_array() const { return length > 0; }
  int element_count() const { return length > 0 ? length : 1; }
};

// ---------------------------------------------------------------------------
// Expressions

/// Static expression type: numeric (bool/byte/int share one family, as in
/// Promela) or a specific enum.
struct ExprType {
  int enum_id = -1;
  bool is_enum() const { return enum_id >= 0; }
  friend bool operator==(const ExprType&, const ExprType&) = default;
};

enum class ExprKind { Const, Var, Pid, Pc, Unary, Binary };
enum class UnaryOp { Not, Neg };
enum class BinaryOp { Add, Sub, Mul, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Implies, Iff };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::Const;
  SourceLoc loc;
  ExprType type;
  Value value = 0;     // Const
  bool is_bool_literal = false;
  int var = -1;        // Var: declaration index; Pc: process index
  ExprPtr index;       // Var: element index for arrays
  UnaryOp unary_op = UnaryOp::Not;
  BinaryOp binary_op = BinaryOp::Add;
  ExprPtr lhs;
  ExprPtr rhs;
};

const char* to_string(BinaryOp op);

// ---------------------------------------------------------------------------
// Statements and processes

enum class StmtKind { Assign, Guard, Goto, Label, Assert };

struct Stmt {
  StmtKind kind = StmtKind::Assign;
  SourceLoc loc;
  int target_var = -1;  // Assign
  ExprPtr target_index;  // Assign into an array element
  ExprPtr expr;          // Assign rhs, Guard / Assert condition
  std::string label;     // Goto target or Label name
};

/// One `proc` block. A block with `replicate n` instantiates n processes
/// that share code and differ only in `_pid`.
struct ProcTemplate {
  std::string name;
  int replicate = 1;
  int first_pid = 0;
  std::vector<Stmt> body;  // source order, labels included
  SourceLoc close_loc;

  /// Indices into `body` of the executable statements (labels stripped),
  /// in program order.
  std::vector<int> code;
  /// Counter value of code[i] is lines[i]; lines.back() is the terminal
  /// position (closing brace), so lines.size() == code.size() + 1.
  std::vector<Value> lines;
  /// Index into `code` of the next statement after code[i] (for gotos the
  /// resolved target, otherwise i + 1; code.size() means terminal).
  std::vector<int> next;

  int position_of(Value line) const;  // -1 when `line` is not a position
  const Stmt& statement(int position) const { return body[code[position]]; }
};

/// Domain of one state slot: contiguous [lo, hi] for data, sparse sorted
/// line numbers for process counters.
class Domain {
 public:
  static Domain range(Value lo, Value hi);
  static Domain sparse(std::vector<Value> values);

  std::uint64_t size() const;
  bool contains(Value v) const;
  Value min() const;
  Value max() const;
  Value at(std::uint64_t i) const;
  /// Largest domain value <= v, if any.
  std::optional<Value> floor(Value v) const;

 private:
  Value lo_ = 0;
  Value hi_ = 0;
  std::vector<Value> sparse_;
};

enum class SlotKind { Pc, Data };

struct SlotInfo {
  std::string name;  // "pc[0]", "ncrit", "flag[1]"
  SlotKind kind = SlotKind::Data;
  int decl = -1;     // data slots: declaration index
  int element = 0;   // data slots: array element
  int pid = -1;      // pc slots
  Domain domain;
  /// Slots with equal sort are comparable by var-var atoms.
  /// Numeric data share sort 0; enum e has sort 1 + e; counters of a
  /// process template t have sort -(1 + t).
  int sort = 0;
  bool ordered = true;  // enums are not ordered
};

class ProgramModel {
 public:
  const std::vector<VarDecl>& decls() const { return decls_; }
  const std::vector<EnumDecl>& enums() const { return enums_; }
  const std::vector<ProcTemplate>& templates() const { return templates_; }

  int process_count() const { return static_cast<int>(pid_template_.size()); }
  const ProcTemplate& process_template(int pid) const { return templates_[pid_template_[pid]]; }

  int slot_count() const { return static_cast<int>(slots_.size()); }
  const SlotInfo& slot(int i) const { return slots_[i]; }
  const std::vector<SlotInfo>& slots() const { return slots_; }
  int pc_slot(int pid) const { return pid; }
  int data_slot(int decl, int element = 0) const { return decl_offset_[decl] + element; }
  /// Slot by display name (`pc[1]`, `flag[0]`, `ncrit`).
  std::optional<int> find_slot(std::string_view name) const;
  std::optional<int> find_decl(std::string_view name) const;
  /// Enum constant lookup by symbolic name: (enum id, value).
  std::optional<std::pair<int, Value>> find_enum_value(std::string_view name) const;

  const ProgramState& initial_state() const { return initial_; }
  bool is_valid(const ProgramState& s) const;

  /// Display form of a value of slot `i` (enum names are symbolic).
  std::string format_value(int slot, Value v) const;

 private:
  friend class ModelBuilder;

  std::vector<VarDecl> decls_;
  std::vector<EnumDecl> enums_;
  std::vector<ProcTemplate> templates_;
  std::vector<int> pid_template_;
  std::vector<int> decl_offset_;
  std::vector<SlotInfo> slots_;
  std::map<std::string, std::pair<int, Value>, std::less<>> enum_values_;
  ProgramState initial_;
};

/// Parses and type-checks a model. Throws Diagnostic.
std::shared_ptr<const ProgramModel> parse(std::string_view source);

/// Parses a Boolean condition over the model's state slots (used for
/// invariants given on the command line). Accepts `pc[i]`, `true`/`false`,
/// `->`, `<->`, and `=` as a synonym for `==`. Throws Diagnostic.
ExprPtr parse_condition(const ProgramModel& model, std::string_view text);

/// Source text that parses back to a structurally equal model.
std::string pretty_print(const ProgramModel& model);
std::string to_source(const ProgramModel& model, const Expr& e);

/// Equality of declarations, initial values and process bodies, ignoring
/// source locations.
bool structurally_equal(const ProgramModel& a, const ProgramModel& b);

/// Product of all slot domain sizes; nullopt if it does not fit 64 bits.
std::optional<std::uint64_t> state_space_size(const ProgramModel& model);

/// Evaluates `e` in state `s` on behalf of process `pid` (pid is only
/// consulted by `_pid`). Throws RuntimeDomainError on out-of-bounds reads.
std::int64_t evaluate(const ProgramModel& model, const Expr& e, const ProgramState& s, int pid,
                      int line = 0);

}  // namespace invmine
