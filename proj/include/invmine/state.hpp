#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace invmine {

using Value = std::int32_t;

/// A total valuation of a program: one slot per process counter followed by
/// every user variable, flattened in declaration order (arrays elementwise).
/// The slot layout is owned by the ProgramModel that produced the state.
class ProgramState {
 public:
  ProgramState() = default;
  explicit ProgramState(std::vector<Value> slots) : slots_(std::move(slots)) {}

  std::size_t size() const { return slots_.size(); }
  Value operator[](std::size_t i) const { return slots_[i]; }
  Value& operator[](std::size_t i) { return slots_[i]; }
  std::span<const Value> slots() const { return slots_; }

  friend bool operator==(const ProgramState&, const ProgramState&) = default;
  friend auto operator<=>(const ProgramState&, const ProgramState&) = default;

  std::size_t hash() const {
    std::size_t h = 0xcbf29ce484222325ull;
    for (Value v : slots_) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 0x100000001b3ull;
      h ^= h >> 29;
    }
    return h;
  }

  /// Tab-separated canonical tuple, the trace dump line format.
  std::string to_tsv() const;
  /// `<7,7,0,0,0,0>` style tuple.
  std::string to_tuple() const;

 private:
  std::vector<Value> slots_;
};

struct StateHash {
  std::size_t operator()(const ProgramState& s) const { return s.hash(); }
};

using StateSet = std::unordered_set<ProgramState, StateHash>;

/// Sorted copy of a state set, for deterministic iteration.
std::vector<ProgramState> sorted_states(const StateSet& set);

}  // namespace invmine
