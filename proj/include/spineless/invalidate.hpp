#pragma once

// Invalidation traversals: they record dirty (node, bit) pairs and later
// recompute them in from-scratch execution order.

#include <memory>
#include <optional>
#include <string_view>

#include "spineless/engine.hpp"
#include "spineless/tree.hpp"

namespace spineless {

enum class Algorithm { Naive, DoubleDirtyBit, Spineless };

const char* to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct TraversalOptions {
  bool queue_compression = true;
  bool om_deletion = false;
  bool branchless_compare = true;
};

class Traversal : public TreeListener {
 public:
  Traversal(LayoutTree& tree, const RecomputeProgram& program) : tree_(tree), program_(program) {}

  /// Schedules every field of the current tree for computation.
  virtual void on_first_layout() = 0;
  /// Recomputes every dirty bit; no attached node is dirty afterwards.
  virtual void clean() = 0;

 protected:
  LayoutTree& tree_;
  const RecomputeProgram& program_;
};

std::unique_ptr<Traversal> make_traversal(Algorithm algorithm, LayoutTree& tree, const RecomputeProgram& program,
                                          TraversalOptions options = {});

struct BitRef {
  NodeId node = kNoNode;
  BitId bit = 0;

  friend bool operator==(const BitRef&, const BitRef&) = default;
};

/// The (node, bit) computed right after `at` in from-scratch order.
std::optional<BitRef> schedule_successor(const LayoutTree& tree, BitRef at);
/// The (node, bit) computed right before `at` in from-scratch order.
std::optional<BitRef> schedule_predecessor(const LayoutTree& tree, BitRef at);

}  // namespace spineless
