#pragma once

// Execution of layout programs: a term interpreter, per-bit recompute
// routines with change detection and dirty propagation, and the
// from-scratch evaluator used as the reference.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spineless/tree.hpp"

namespace spineless {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interprets terms against one field store. Field reads are reported as
/// node touches to `touches` when it is given.
class Evaluator {
 public:
  Evaluator(const LayoutTree& tree, const FieldStore& store, LayoutTree* touches = nullptr)
      : tree_(tree), program_(tree.program()), store_(store), touches_(touches) {}

  Value eval(TermId term, NodeId node) const;

 private:
  NodeId neighbor(NodeId n, Neighbor which) const;
  [[noreturn]] void fail(const Term& t, NodeId n, const std::string& what) const;

  const LayoutTree& tree_;
  const Program& program_;
  const FieldStore& store_;
  LayoutTree* touches_;
};

enum class Propagation : std::uint8_t {
  All,
  None,
  External,  // only to prev, next and parent: the root of a subtree being initialized
};

/// The compiled routines: one per dirty bit, evaluating its fields in order
/// and firing each distinct (direction, target bit) rule at most once.
class RecomputeProgram {
 public:
  explicit RecomputeProgram(std::shared_ptr<const CompiledGrammar> grammar);

  /// Recomputes `bit` on `node` and returns whether any field changed. The
  /// first computation of a field counts as a change.
  bool recompute(LayoutTree& tree, NodeId node, BitId bit, DirtySink* sink, Propagation scope) const;

  struct BitRule {
    Direction direction = Direction::Self;
    BitId target_bit = 0;
    std::uint64_t any = 0;        // local field masks that trigger the rule
    std::uint64_t if_first = 0;
    std::uint64_t if_last = 0;
  };
  const std::vector<BitRule>& rules(BitId bit) const { return rules_[bit]; }
  const CompiledGrammar& grammar() const { return *grammar_; }

 private:
  std::shared_ptr<const CompiledGrammar> grammar_;
  std::vector<std::vector<FieldId>> fields_;  // per bit
  std::vector<std::vector<TermId>> terms_;    // per bit, parallel to fields_
  std::vector<std::vector<BitRule>> rules_;
};

/// Runs every pass over the attached tree into a fresh store. Dirty state
/// and the tree's own fields are left untouched.
FieldStore evaluate_from_scratch(const LayoutTree& tree);

struct FieldMismatch {
  std::uint64_t node_key = 0;
  std::string field;
  std::string expected;
  std::string actual;
};

/// First attached (node, field) whose value in the tree differs bitwise
/// from `expected`, in depth-first order.
std::optional<FieldMismatch> compare_fields(const LayoutTree& tree, const FieldStore& expected);

}  // namespace spineless
