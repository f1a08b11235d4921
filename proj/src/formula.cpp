#include "invmine/formula.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <sstream>
#include <stdexcept>

namespace invmine {

// ---------------------------------------------------------------------------
// Templates

namespace {

struct ShapeName {
  AtomShape shape;
  const char* name;
};

constexpr ShapeName kShapeNames[] = {
    {AtomShape::LeqConst, "LEQ_CONST"},   {AtomShape::GeqConst, "GEQ_CONST"},
    {AtomShape::EqConst, "EQ_CONST"},     {AtomShape::NeqConst, "NEQ_CONST"},
    {AtomShape::EqVarVar, "EQ_VARVAR"},   {AtomShape::NeqVarVar, "NEQ_VARVAR"},
    {AtomShape::LeqVarVar, "LEQ_VARVAR"}, {AtomShape::True, "TRUE"},
    {AtomShape::False, "FALSE"},
};

bool is_var_var(AtomShape s) {
  return s == AtomShape::EqVarVar || s == AtomShape::NeqVarVar || s == AtomShape::LeqVarVar;
}

bool is_order_shape(AtomShape s) {
  return s == AtomShape::LeqConst || s == AtomShape::GeqConst || s == AtomShape::LeqVarVar;
}

}  // namespace

const char* shape_name(AtomShape shape) {
  for (const auto& s : kShapeNames)
    if (s.shape == shape) return s.name;
  return "?";
}

std::optional<AtomShape> parse_shape(std::string_view name) {
  for (const auto& s : kShapeNames)
    if (name == s.name && s.shape != AtomShape::True && s.shape != AtomShape::False) return s.shape;
  return std::nullopt;
}

std::vector<AtomTemplate> default_templates() {
  return {{AtomShape::LeqConst, {}},  {AtomShape::GeqConst, {}},  {AtomShape::EqConst, {}},
          {AtomShape::NeqConst, {}},  {AtomShape::EqVarVar, {}},  {AtomShape::NeqVarVar, {}},
          {AtomShape::LeqVarVar, {}}};
}

std::vector<AtomTemplate> parse_templates(const ProgramModel& m, std::string_view text) {
  std::vector<AtomTemplate> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string word;
    if (!(words >> word)) continue;
    auto shape = parse_shape(word);
    if (!shape)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": unknown atom template '" +
                                  word + "'");
    AtomTemplate t{*shape, {}};
    while (words >> word) {
      auto slot = m.find_slot(word);
      if (!slot)
        throw std::invalid_argument("line " + std::to_string(lineno) + ": unknown variable '" +
                                    word + "'");
      t.slots.push_back(*slot);
    }
    std::size_t arity = is_var_var(*shape) ? 2 : 1;
    if (!t.slots.empty() && t.slots.size() != arity)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + shape_name(*shape) + " takes " + std::to_string(arity) +
                                  " variable(s)");
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Atoms

std::string to_string(const ProgramModel& m, const Atom& a) {
  auto slot = [&](int s) { return m.slot(s).name; };
  auto value = [&](Value v) { return m.format_value(a.lhs, v); };
  switch (a.shape) {
    case AtomShape::LeqConst: return "(" + slot(a.lhs) + " <= " + value(a.constant) + ")";
    case AtomShape::GeqConst: return "(" + slot(a.lhs) + " >= " + value(a.constant) + ")";
    case AtomShape::EqConst: return "(" + slot(a.lhs) + " == " + value(a.constant) + ")";
    case AtomShape::NeqConst: return "(" + slot(a.lhs) + " != " + value(a.constant) + ")";
    case AtomShape::EqVarVar: return "(" + slot(a.lhs) + " == " + slot(a.rhs) + ")";
    case AtomShape::NeqVarVar: return "(" + slot(a.lhs) + " != " + slot(a.rhs) + ")";
    case AtomShape::LeqVarVar: return "(" + slot(a.lhs) + " <= " + slot(a.rhs) + ")";
    case AtomShape::True: return "true";
    case AtomShape::False: return "false";
  }
  return "?";
}

namespace {

// Rewrites a constant atom into its normal form over the slot's domain.
Atom normalize(const Domain& d, Atom a) {
  const bool binary_domain = d.size() == 2;
  switch (a.shape) {
    case AtomShape::LeqConst:
      if (a.constant >= d.max()) return Atom{AtomShape::True};
      if (a.constant < d.min()) return Atom{AtomShape::False};
      if (a.constant == d.min()) a.shape = AtomShape::EqConst;
      break;
    case AtomShape::GeqConst:
      if (a.constant <= d.min()) return Atom{AtomShape::True};
      if (a.constant > d.max()) return Atom{AtomShape::False};
      if (a.constant == d.max()) a.shape = AtomShape::EqConst;
      break;
    case AtomShape::NeqConst:
      if (!d.contains(a.constant)) return Atom{AtomShape::True};
      if (d.size() == 1) return Atom{AtomShape::False};
      if (binary_domain) {
        a.shape = AtomShape::EqConst;
        a.constant = a.constant == d.min() ? d.max() : d.min();
      }
      break;
    case AtomShape::EqConst:
      if (!d.contains(a.constant)) return Atom{AtomShape::False};
      if (d.size() == 1) return Atom{AtomShape::True};
      break;
    default:
      break;
  }
  return a;
}

}  // namespace

std::vector<Atom> instantiate_atoms(const ProgramModel& m, const std::vector<ProgramState>& positives,
                                    const std::vector<AtomTemplate>& templates,
                                    const std::vector<int>& alphabet) {
  if (alphabet.empty()) throw std::invalid_argument("empty learning alphabet");

  auto pool = [&](int slot) {
    std::set<Value> values{m.slot(slot).domain.min(), m.slot(slot).domain.max()};
    for (const ProgramState& s : positives) values.insert(s[slot]);
    return values;
  };

  std::vector<Atom> out;
  std::set<Atom> seen;
  auto emit = [&](const Atom& a) {
    if (a.shape == AtomShape::True || a.shape == AtomShape::False) return;
    if (seen.insert(a).second) out.push_back(a);
  };

  for (const AtomTemplate& t : templates) {
    if (is_var_var(t.shape)) {
      std::vector<std::pair<int, int>> pairs;
      if (!t.slots.empty()) {
        pairs.emplace_back(t.slots[0], t.slots[1]);
      } else {
        for (std::size_t i = 0; i < alphabet.size(); ++i)
          for (std::size_t j = 0; j < alphabet.size(); ++j) {
            if (i == j) continue;
            // Equality is symmetric: one orientation suffices.
            if (t.shape != AtomShape::LeqVarVar && j < i) continue;
            pairs.emplace_back(alphabet[i], alphabet[j]);
          }
      }
      for (auto [x, y] : pairs) {
        const SlotInfo& a = m.slot(x);
        const SlotInfo& b = m.slot(y);
        if (x == y || a.sort != b.sort) continue;
        if (is_order_shape(t.shape) && !a.ordered) continue;
        emit(Atom{t.shape, x, y, 0});
      }
    } else {
      std::vector<int> slots = t.slots.empty() ? alphabet : t.slots;
      for (int x : slots) {
        const SlotInfo& info = m.slot(x);
        if (is_order_shape(t.shape) && !info.ordered) continue;
        for (Value c : pool(x)) emit(normalize(info.domain, Atom{t.shape, x, -1, c}));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Formula

Formula Formula::atom(const Atom& a) {
  auto n = std::make_shared<Node>();
  n->op = FormulaOp::Atom;
  n->atom = a;
  return Formula(std::move(n));
}

Formula Formula::constant(bool value) {
  return atom(Atom{value ? AtomShape::True : AtomShape::False});
}

Formula Formula::negate(const Formula& f) {
  auto n = std::make_shared<Node>();
  n->op = FormulaOp::Not;
  n->children = {f};
  n->length = 1 + f.length();
  return Formula(std::move(n));
}

Formula Formula::binary(FormulaOp op, const Formula& lhs, const Formula& rhs) {
  if (op == FormulaOp::Atom || op == FormulaOp::Not)
    throw std::invalid_argument("not a binary operator");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->children = {lhs, rhs};
  n->length = 1 + lhs.length() + rhs.length();
  return Formula(std::move(n));
}

bool Formula::is_constant(bool value) const {
  return op() == FormulaOp::Atom && atom().shape == (value ? AtomShape::True : AtomShape::False);
}

bool Formula::eval(const ProgramState& s) const {
  switch (op()) {
    case FormulaOp::Atom: return atom().holds(s);
    case FormulaOp::Not: return !lhs().eval(s);
    case FormulaOp::And: return lhs().eval(s) && rhs().eval(s);
    case FormulaOp::Or: return lhs().eval(s) || rhs().eval(s);
    case FormulaOp::Implies: return !lhs().eval(s) || rhs().eval(s);
    case FormulaOp::Iff: return lhs().eval(s) == rhs().eval(s);
  }
  return false;
}

std::string Formula::to_string(const ProgramModel& m) const {
  auto bin = [&](const char* op) {
    return "(" + lhs().to_string(m) + " " + op + " " + rhs().to_string(m) + ")";
  };
  switch (op()) {
    case FormulaOp::Atom: return invmine::to_string(m, atom());
    case FormulaOp::Not: return "!" + lhs().to_string(m);
    case FormulaOp::And: return bin("&&");
    case FormulaOp::Or: return bin("||");
    case FormulaOp::Implies: return bin("->");
    case FormulaOp::Iff: return bin("<->");
  }
  return {};
}

// ---------------------------------------------------------------------------
// Signature

Signature::Signature(std::size_t size, bool value)
    : size_(size), words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0) {
  clear_tail();
}

void Signature::clear_tail() {
  if (size_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
}

void Signature::set(std::size_t i, bool v) {
  const std::uint64_t bit = std::uint64_t{1} << (i & 63);
  if (v)
    words_[i >> 6] |= bit;
  else
    words_[i >> 6] &= ~bit;
}

std::size_t Signature::count(std::size_t begin, std::size_t end) const {
  std::size_t total = 0;
  while (begin < end && (begin & 63) != 0) total += test(begin++);
  while (begin + 64 <= end) {
    total += std::popcount(words_[begin >> 6]);
    begin += 64;
  }
  while (begin < end) total += test(begin++);
  return total;
}

std::string Signature::to_string() const {
  std::string out(size_, '0');
  for (std::size_t i = 0; i < size_; ++i)
    if (test(i)) out[i] = '1';
  return out;
}

std::size_t Signature::hash() const {
  std::size_t h = size_ * 0x9e3779b97f4a7c15ull;
  for (std::uint64_t w : words_) {
    h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

Signature bw_not(const Signature& a) {
  Signature r = a;
  for (auto& w : r.words_) w = ~w;
  r.clear_tail();
  return r;
}

Signature bw_and(const Signature& a, const Signature& b) {
  Signature r = a;
  for (std::size_t i = 0; i < r.words_.size(); ++i) r.words_[i] &= b.words_[i];
  return r;
}

Signature bw_or(const Signature& a, const Signature& b) {
  Signature r = a;
  for (std::size_t i = 0; i < r.words_.size(); ++i) r.words_[i] |= b.words_[i];
  return r;
}

Signature bw_xor(const Signature& a, const Signature& b) {
  Signature r = a;
  for (std::size_t i = 0; i < r.words_.size(); ++i) r.words_[i] ^= b.words_[i];
  return r;
}

Signature bw_implies(const Signature& a, const Signature& b) { return bw_or(bw_not(a), b); }
Signature bw_iff(const Signature& a, const Signature& b) { return bw_not(bw_xor(a, b)); }

Signature atom_signature(const Atom& a, const ExampleSets& ex) {
  Signature sig(ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i)
    if (a.holds(ex.at(i))) sig.set(i);
  return sig;
}

const Signature* SignatureCache::find(const Formula& f) const {
  auto it = map_.find(f.identity());
  return it == map_.end() ? nullptr : &it->second.second;
}

void SignatureCache::insert(const Formula& f, Signature sig) {
  map_.insert_or_assign(f.identity(), std::make_pair(f, std::move(sig)));
}

Signature signature(const Formula& f, const ExampleSets& ex, SignatureCache& cache) {
  if (const Signature* hit = cache.find(f)) return *hit;
  Signature sig;
  switch (f.op()) {
    case FormulaOp::Atom: sig = atom_signature(f.atom(), ex); break;
    case FormulaOp::Not: sig = bw_not(signature(f.lhs(), ex, cache)); break;
    case FormulaOp::And:
      sig = bw_and(signature(f.lhs(), ex, cache), signature(f.rhs(), ex, cache));
      break;
    case FormulaOp::Or:
      sig = bw_or(signature(f.lhs(), ex, cache), signature(f.rhs(), ex, cache));
      break;
    case FormulaOp::Implies:
      sig = bw_implies(signature(f.lhs(), ex, cache), signature(f.rhs(), ex, cache));
      break;
    case FormulaOp::Iff:
      sig = bw_iff(signature(f.lhs(), ex, cache), signature(f.rhs(), ex, cache));
      break;
  }
  cache.insert(f, sig);
  return sig;
}

// ---------------------------------------------------------------------------
// Ratios

bool operator==(const Ratio& a, const Ratio& b) { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
  // A zero denominator reads as 0/1.
  const unsigned __int128 an = a.den == 0 ? 0 : a.num;
  const unsigned __int128 ad = a.den == 0 ? 1 : a.den;
  const unsigned __int128 bn = b.den == 0 ? 0 : b.num;
  const unsigned __int128 bd = b.den == 0 ? 1 : b.den;
  const unsigned __int128 lhs = an * bd;
  const unsigned __int128 rhs = bn * ad;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Ratio::to_string() const {
  if (den == 0) return "0";
  return std::to_string(num) + "/" + std::to_string(den);
}

Ratio ratio_from_double(double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("negative ratio");
  constexpr std::uint64_t scale = 1'000'000'000;
  return Ratio{static_cast<std::uint64_t>(x * scale + 0.5), scale};
}

Ratio precision(const Signature& sig, std::size_t positives) {
  const std::size_t tp = sig.count(0, positives);
  const std::size_t all = sig.count();
  if (all == 0) return Ratio{0, 1};
  return Ratio{tp, all};
}

Ratio recall(const Signature& sig, std::size_t positives) {
  if (positives == 0) throw std::invalid_argument("recall over an empty positive set");
  return Ratio{sig.count(0, positives), positives};
}

Ratio precision(const Formula& f, const ExampleSets& ex) {
  SignatureCache cache;
  return precision(signature(f, ex, cache), ex.positives.size());
}

Ratio recall(const Formula& f, const ExampleSets& ex) {
  SignatureCache cache;
  return recall(signature(f, ex, cache), ex.positives.size());
}

}  // namespace invmine
