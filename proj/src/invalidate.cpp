#include "spineless/invalidate.hpp"

#include <bit>

namespace spineless {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Naive: return "naive";
    case Algorithm::DoubleDirtyBit: return "ddb";
    case Algorithm::Spineless: return "spineless";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  if (name == "naive") return Algorithm::Naive;
  if (name == "ddb") return Algorithm::DoubleDirtyBit;
  if (name == "spineless") return Algorithm::Spineless;
  return std::nullopt;
}

std::optional<BitRef> schedule_successor(const LayoutTree& tree, BitRef at) {
  const Node& n = tree.node(at.node);
  std::uint32_t pass = DirtyBitLayout::pass_of(at.bit);
  if (!DirtyBitLayout::is_post(at.bit)) {
    if (n.first != kNoNode) return BitRef{n.first, at.bit};
    return BitRef{at.node, DirtyBitLayout::post_bit(pass)};
  }
  if (n.parent == kNoNode) {
    if (pass + 1 < tree.grammar().layout.pass_count) return BitRef{at.node, DirtyBitLayout::pre_bit(pass + 1)};
    return std::nullopt;
  }
  if (n.next != kNoNode) return BitRef{n.next, DirtyBitLayout::pre_bit(pass)};
  return BitRef{n.parent, at.bit};
}

std::optional<BitRef> schedule_predecessor(const LayoutTree& tree, BitRef at) {
  const Node& n = tree.node(at.node);
  std::uint32_t pass = DirtyBitLayout::pass_of(at.bit);
  if (DirtyBitLayout::is_post(at.bit)) {
    if (n.last != kNoNode) return BitRef{n.last, at.bit};
    return BitRef{at.node, DirtyBitLayout::pre_bit(pass)};
  }
  if (n.prev != kNoNode) return BitRef{n.prev, DirtyBitLayout::post_bit(pass)};
  if (n.parent != kNoNode) return BitRef{n.parent, at.bit};
  if (pass > 0) return BitRef{at.node, DirtyBitLayout::post_bit(pass - 1)};
  return std::nullopt;
}

namespace {

/// Walks the whole tree once per pass and recomputes whatever is dirty.
class NaiveTraversal : public Traversal {
 public:
  using Traversal::Traversal;

  void dirty(NodeId n, BitId b) override {
    ++tree_.counters().dirty_calls;
    tree_.node(n).dirty |= BitMask{1} << b;
  }

  void on_subtree_inserted(NodeId root) override {
    for (NodeId n : tree_.preorder(root)) tree_.node(n).dirty |= tree_.live_bits();
  }

  void on_subtree_removing(NodeId) override {}

  void on_first_layout() override { on_subtree_inserted(tree_.root()); }

  void clean() override {
    std::vector<std::pair<NodeId, bool>> stack;
    for (std::uint32_t p = 0; p < tree_.grammar().layout.pass_count; ++p) {
      stack.push_back({tree_.root(), false});
      while (!stack.empty()) {
        auto [n, post] = stack.back();
        stack.pop_back();
        BitId b = post ? DirtyBitLayout::post_bit(p) : DirtyBitLayout::pre_bit(p);
        if (!post) tree_.visit(n);
        recompute_if_dirty(n, b);
        if (post) continue;
        stack.push_back({n, true});
        for (NodeId c = tree_.node(n).last; c != kNoNode; c = tree_.node(c).prev) stack.push_back({c, false});
      }
    }
  }

 protected:
  void recompute_if_dirty(NodeId n, BitId b) {
    BitMask bit = BitMask{1} << b;
    if (!(tree_.node(n).dirty & bit)) return;
    program_.recompute(tree_, n, b, this, Propagation::All);
    tree_.node(n).dirty &= ~bit;
  }
};

/// A node's summary bits say some descendant is dirty, so the walk skips
/// clean subtrees.
class DoubleDirtyBit : public NaiveTraversal {
 public:
  using NaiveTraversal::NaiveTraversal;

  void dirty(NodeId n, BitId b) override {
    ++tree_.counters().dirty_calls;
    BitMask bit = BitMask{1} << b;
    Node& node = tree_.node(n);
    if (node.dirty & bit) return;
    node.dirty |= bit;
    set_summary(node.parent, bit);
  }

  void on_subtree_inserted(NodeId root) override {
    BitMask live = tree_.live_bits();
    for (NodeId n : tree_.preorder(root)) {
      tree_.node(n).dirty |= live;
      if (tree_.node(n).first != kNoNode) tree_.node(n).summary |= live;
    }
    if (tree_.node(root).parent != kNoNode) set_summary(tree_.node(root).parent, live);
  }

  void clean() override {
    struct Frame {
      NodeId node;
      NodeId next_child;
      bool entered;
    };
    std::vector<Frame> stack;
    for (std::uint32_t p = 0; p < tree_.grammar().layout.pass_count; ++p) {
      BitId pre = DirtyBitLayout::pre_bit(p), post = DirtyBitLayout::post_bit(p);
      BitMask pass_mask = (BitMask{1} << pre) | (BitMask{1} << post);
      stack.push_back({tree_.root(), kNoNode, false});
      while (!stack.empty()) {
        Frame& f = stack.back();
        NodeId n = f.node;
        if (!f.entered) {
          f.entered = true;
          tree_.visit(n);
          recompute_if_dirty(n, pre);
          f.next_child = (tree_.node(n).summary & pass_mask) ? tree_.node(n).first : kNoNode;
        }
        if (f.next_child != kNoNode) {
          NodeId c = f.next_child;
          f.next_child = tree_.node(c).next;
          stack.push_back({c, kNoNode, false});
          continue;
        }
        recompute_if_dirty(n, post);
        tree_.node(n).summary &= ~pass_mask;
        stack.pop_back();
      }
    }
  }

 private:
  // Sets `mask` on n and its ancestors, each bit stopping at the first
  // node that already has it.
  void set_summary(NodeId n, BitMask mask) {
    while (n != kNoNode && mask) {
      Node& node = tree_.node(n);
      BitMask fresh = mask & ~node.summary;
      node.summary |= mask;
      mask = fresh;
      n = node.parent;
    }
  }
};

}  // namespace

std::unique_ptr<Traversal> make_spineless(LayoutTree& tree, const RecomputeProgram& program, TraversalOptions options);

std::unique_ptr<Traversal> make_traversal(Algorithm algorithm, LayoutTree& tree, const RecomputeProgram& program,
                                          TraversalOptions options) {
  switch (algorithm) {
    case Algorithm::Naive: return std::make_unique<NaiveTraversal>(tree, program);
    case Algorithm::DoubleDirtyBit: return std::make_unique<DoubleDirtyBit>(tree, program);
    case Algorithm::Spineless: return make_spineless(tree, program, options);
  }
  return nullptr;
}

}  // namespace spineless
