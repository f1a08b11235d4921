#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "invmine/lang.hpp"
#include "invmine/state.hpp"

namespace invmine {

// ---------------------------------------------------------------------------
// Atoms

enum class AtomShape {
  LeqConst,   // x <= c
  GeqConst,   // x >= c
  EqConst,    // x == c
  NeqConst,   // x != c
  EqVarVar,   // x == y
  NeqVarVar,  // x != y
  LeqVarVar,  // x <= y
  True,
  False,
};

const char* shape_name(AtomShape shape);          // "LEQ_CONST", ...
std::optional<AtomShape> parse_shape(std::string_view name);

/// A parametric predicate. With no explicit slots the template applies to
/// every alphabet slot (or every compatible pair for var-var shapes).
struct AtomTemplate {
  AtomShape shape = AtomShape::LeqConst;
  std::vector<int> slots;
};

/// All seven template shapes, unrestricted.
std::vector<AtomTemplate> default_templates();

/// Reads a template file: one shape per line, optionally followed by the
/// slot names it is restricted to. `#` starts a comment. Throws
/// std::invalid_argument with a line number on bad input.
std::vector<AtomTemplate> parse_templates(const ProgramModel& m, std::string_view text);

struct Atom {
  AtomShape shape = AtomShape::True;
  int lhs = -1;  // slot
  int rhs = -1;  // slot, var-var shapes only
  Value constant = 0;

  bool holds(const ProgramState& s) const {
    switch (shape) {
      case AtomShape::LeqConst: return s[lhs] <= constant;
      case AtomShape::GeqConst: return s[lhs] >= constant;
      case AtomShape::EqConst: return s[lhs] == constant;
      case AtomShape::NeqConst: return s[lhs] != constant;
      case AtomShape::EqVarVar: return s[lhs] == s[rhs];
      case AtomShape::NeqVarVar: return s[lhs] != s[rhs];
      case AtomShape::LeqVarVar: return s[lhs] <= s[rhs];
      case AtomShape::True: return true;
      case AtomShape::False: return false;
    }
    return false;
  }

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

std::string to_string(const ProgramModel& m, const Atom& a);

/// Instantiates templates over the alphabet slots, drawing constants from
/// the values each slot takes in `positives` plus the slot's domain bounds.
/// Atoms are brought to a normal form (bounds collapse to equalities,
/// tautologies dropped) and deduplicated; the order is deterministic.
/// Throws std::invalid_argument on an empty alphabet.
std::vector<Atom> instantiate_atoms(const ProgramModel& m, const std::vector<ProgramState>& positives,
                                    const std::vector<AtomTemplate>& templates,
                                    const std::vector<int>& alphabet);

// ---------------------------------------------------------------------------
// Formulas

enum class FormulaOp { Atom, Not, And, Or, Implies, Iff };

/// Immutable Boolean formula over atoms; cheap to copy (shared nodes).
class Formula {
 public:
  static Formula atom(const Atom& a);
  static Formula constant(bool value);
  static Formula negate(const Formula& f);
  static Formula binary(FormulaOp op, const Formula& lhs, const Formula& rhs);

  FormulaOp op() const { return node_->op; }
  const Atom& atom() const { return node_->atom; }
  const Formula& lhs() const { return node_->children[0]; }
  const Formula& rhs() const { return node_->children[1]; }
  /// Number of AST nodes.
  int length() const { return node_->length; }
  bool is_constant(bool value) const;
  const void* identity() const { return node_.get(); }

  bool eval(const ProgramState& s) const;
  /// Canonical infix text, fully parenthesized; parseable by parse_condition.
  std::string to_string(const ProgramModel& m) const;

 private:
  struct Node {
    FormulaOp op = FormulaOp::Atom;
    Atom atom;
    std::vector<Formula> children;
    int length = 1;
  };
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

inline bool eval(const Formula& f, const ProgramState& s) { return f.eval(s); }

// ---------------------------------------------------------------------------
// Signatures

/// Fixed-length bit vector; bit i is the truth value on example i.
class Signature {
 public:
  Signature() = default;
  explicit Signature(std::size_t size, bool value = false);

  std::size_t size() const { return size_; }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v = true);
  /// Number of set bits in [begin, end).
  std::size_t count(std::size_t begin, std::size_t end) const;
  std::size_t count() const { return count(0, size_); }
  std::string to_string() const;  // "11100"

  std::size_t hash() const;
  friend bool operator==(const Signature&, const Signature&) = default;

  friend Signature bw_not(const Signature& a);
  friend Signature bw_and(const Signature& a, const Signature& b);
  friend Signature bw_or(const Signature& a, const Signature& b);
  friend Signature bw_xor(const Signature& a, const Signature& b);

 private:
  void clear_tail();
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

Signature bw_implies(const Signature& a, const Signature& b);
Signature bw_iff(const Signature& a, const Signature& b);

struct SignatureHash {
  std::size_t operator()(const Signature& s) const { return s.hash(); }
};

/// Ordered positive and negative examples; signatures index P then N.
struct ExampleSets {
  std::vector<ProgramState> positives;
  std::vector<ProgramState> negatives;

  std::size_t size() const { return positives.size() + negatives.size(); }
  const ProgramState& at(std::size_t i) const {
    return i < positives.size() ? positives[i] : negatives[i - positives.size()];
  }
};

Signature atom_signature(const Atom& a, const ExampleSets& ex);

/// Signatures memoized per formula node, valid for one ExampleSets value.
class SignatureCache {
 public:
  const Signature* find(const Formula& f) const;
  void insert(const Formula& f, Signature sig);
  std::size_t size() const { return map_.size(); }

 private:
  // Holding the formula keeps the node alive so its address stays unique.
  std::unordered_map<const void*, std::pair<Formula, Signature>> map_;
};

/// Signature via bitwise composition of cached sub-signatures.
Signature signature(const Formula& f, const ExampleSets& ex, SignatureCache& cache);

// ---------------------------------------------------------------------------
// Precision / recall

/// Exact non-negative rational. A zero denominator reads as 0.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double to_double() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
  std::string to_string() const;
  friend bool operator==(const Ratio& a, const Ratio& b);
  friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b);
};

/// Threshold as an exact rational (decimal with up to 9 fractional digits).
Ratio ratio_from_double(double x);

/// |{P satisfying}| / |{P ∪ N satisfying}|, 0 when nothing is satisfied.
Ratio precision(const Signature& sig, std::size_t positives);
/// |{P satisfying}| / |P|. Throws std::invalid_argument when P is empty.
Ratio recall(const Signature& sig, std::size_t positives);

Ratio precision(const Formula& f, const ExampleSets& ex);
Ratio recall(const Formula& f, const ExampleSets& ex);

}  // namespace invmine
