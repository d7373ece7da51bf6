#include <bit>

#include "spineless/heap.hpp"
#include "spineless/invalidate.hpp"
#include "spineless/om.hpp"

namespace spineless {

namespace {

struct QueueElement {
  OMHandle timestamp;
  NodeId node = kNoNode;
  std::uint16_t slot = 0;  // dirty bit, or pass for an init element
  bool init = false;
};

struct ByTimestamp {
  const OrderMaintenance* om = nullptr;
  bool branchless = true;

  bool operator()(const QueueElement& a, const QueueElement& b) const {
    return branchless ? om->less_branchless(a.timestamp, b.timestamp) : om->less(a.timestamp, b.timestamp);
  }
};

/// Dirty bits queued by timestamp. A bit whose schedule predecessor is
/// already dirty is not queued; the predecessor's `chained` flag tells the
/// clean loop to continue into its successor instead.
class SpinelessTraversal : public Traversal {
 public:
  SpinelessTraversal(LayoutTree& tree, const RecomputeProgram& program, TraversalOptions options)
      : Traversal(tree, program),
        options_(options),
        om_(OMOptions{options.om_deletion}),
        heap_(ByTimestamp{&om_, options.branchless_compare}) {
    passes_ = tree.grammar().layout.pass_count;
  }

  void dirty(NodeId n, BitId b) override {
    ++tree_.counters().dirty_calls;
    Node& node = tree_.node(n);
    BitMask bit = BitMask{1} << b;
    if (node.deleted || node.init_passes <= DirtyBitLayout::pass_of(b) || (node.dirty & bit)) return;
    node.dirty |= bit;
    if (options_.queue_compression) {
      if (auto pred = schedule_predecessor(tree_, {n, b})) {
        Node& pn = tree_.node(pred->node);
        BitMask pbit = BitMask{1} << pred->bit;
        if (pn.dirty & pbit) {
          pn.chained |= pbit;
          return;
        }
      }
    }
    push({tree_.timestamp(n, b), n, static_cast<std::uint16_t>(b), false});
  }

  void on_first_layout() override {
    NodeId root = tree_.root();
    OMHandle anchor = om_.head();
    for (std::uint32_t p = 0; p < passes_; ++p) anchor = queue_init(p, root, anchor);
  }

  void on_subtree_inserted(NodeId r) override {
    const Node& node = tree_.node(r);
    const Node& parent = tree_.node(node.parent);
    for (std::uint32_t p = 0; p < passes_; ++p) {
      // Inside a subtree that is itself waiting for this pass.
      if (parent.init_passes <= p) continue;
      BitId pre = DirtyBitLayout::pre_bit(p), post = DirtyBitLayout::post_bit(p);
      BitRef pred = node.prev != kNoNode ? BitRef{node.prev, post} : BitRef{node.parent, pre};
      // The predecessor's chain used to lead to what now follows r.
      Node& pn = tree_.node(pred.node);
      BitMask pbit = BitMask{1} << pred.bit;
      if (pn.chained & pbit) {
        pn.chained &= ~pbit;
        materialize(schedule_successor(tree_, {r, post}));
      }
      queue_init(p, r, tree_.timestamp(pred.node, pred.bit));
    }
  }

  void on_subtree_removing(NodeId r) override {
    const Node& node = tree_.node(r);
    for (std::uint32_t p = 0; p < passes_ && p < node.init_passes; ++p) {
      BitId pre = DirtyBitLayout::pre_bit(p), post = DirtyBitLayout::post_bit(p);
      if (auto pred = schedule_predecessor(tree_, {r, pre})) tree_.node(pred->node).chained &= ~(BitMask{1} << pred->bit);
      BitMask pbit = BitMask{1} << post;
      if (tree_.node(r).chained & pbit) {
        tree_.node(r).chained &= ~pbit;
        materialize(schedule_successor(tree_, {r, post}));
      }
    }
    removed_.push_back(r);
  }

  void clean() override {
    in_clean_ = true;
    last_ = OMHandle{};
    while (!heap_.empty()) {
      QueueElement e = heap_.pop();
      ++tree_.counters().heap_pops;
      advance(e.timestamp);
      if (tree_.node(e.node).deleted) {
        ++tree_.counters().deleted_skips;
        tree_.visit(e.node);
        if (e.init) om_.erase(e.timestamp);
        continue;
      }
      if (e.init) {
        init_pass(e.slot, e.node, e.timestamp);
      } else {
        run_chain(e.node, e.slot);
      }
    }
    in_clean_ = false;
    release_removed();
    const OMCounters& c = om_.counters();
    tree_.counters().om_creates += c.creates - seen_creates_;
    tree_.counters().om_rebalances += c.rebalances - seen_rebalances_;
    seen_creates_ = c.creates;
    seen_rebalances_ = c.rebalances;
  }

  const OrderMaintenance& om() const { return om_; }

 private:
  void push(QueueElement e) {
    if (in_clean_ && !last_.is_nil() && !om_.less(last_, e.timestamp)) ++tree_.counters().timestamp_violations;
    heap_.push(e);
    auto& c = tree_.counters();
    ++c.heap_pushes;
    if (heap_.size() > c.heap_max_len) c.heap_max_len = heap_.size();
  }

  // Processing must move strictly forward in time.
  void advance(OMHandle ts) {
    if (!last_.is_nil() && !om_.less(last_, ts)) ++tree_.counters().timestamp_violations;
    last_ = ts;
  }

  void materialize(std::optional<BitRef> at) {
    if (!at) return;
    if (!(tree_.node(at->node).dirty & (BitMask{1} << at->bit))) return;
    push({tree_.timestamp(at->node, at->bit), at->node, static_cast<std::uint16_t>(at->bit), false});
  }

  OMHandle queue_init(std::uint32_t pass, NodeId r, OMHandle anchor) {
    OMHandle ts = om_.create_after(anchor);
    tree_.timestamp(r, DirtyBitLayout::pre_bit(pass)) = ts;
    tree_.timestamp(r, DirtyBitLayout::post_bit(pass)) = ts;
    push({ts, r, static_cast<std::uint16_t>(pass), true});
    return ts;
  }

  void run_chain(NodeId n, BitId b) {
    for (;;) {
      tree_.visit(n);
      program_.recompute(tree_, n, b, this, Propagation::All);
      Node& node = tree_.node(n);
      BitMask bit = BitMask{1} << b;
      node.dirty &= ~bit;
      if (!(node.chained & bit)) return;
      node.chained &= ~bit;
      auto next = schedule_successor(tree_, {n, b});
      if (!next || !(tree_.node(next->node).dirty & (BitMask{1} << next->bit))) {
        ++tree_.counters().timestamp_violations;
        return;
      }
      n = next->node;
      b = next->bit;
      advance(tree_.timestamp(n, b));
    }
  }

  // Computes pass `pass` on the whole subtree in schedule order, creating
  // its timestamps right after the element's own.
  void init_pass(std::uint32_t pass, NodeId r, OMHandle element) {
    BitId pre = DirtyBitLayout::pre_bit(pass), post = DirtyBitLayout::post_bit(pass);
    BitMask live = tree_.live_bits();
    OMHandle prev = element;
    auto step = [&](NodeId n, BitId b) {
      prev = om_.create_after(prev);
      tree_.timestamp(n, b) = prev;
      last_ = prev;
      if (live & (BitMask{1} << b)) {
        program_.recompute(tree_, n, b, this, n == r ? Propagation::External : Propagation::None);
      }
    };
    std::vector<std::pair<NodeId, bool>> stack{{r, false}};
    while (!stack.empty()) {
      auto [n, is_post] = stack.back();
      stack.pop_back();
      if (is_post) {
        step(n, post);
        tree_.node(n).init_passes = pass + 1;
        continue;
      }
      tree_.visit(n);
      step(n, pre);
      stack.push_back({n, true});
      for (NodeId c = tree_.node(n).last; c != kNoNode; c = tree_.node(c).prev) stack.push_back({c, false});
    }
    om_.erase(element);
  }

  void release_removed() {
    if (options_.om_deletion) {
      for (NodeId r : removed_) {
        for (NodeId n : tree_.preorder(r)) {
          const Node& node = tree_.node(n);
          for (std::uint32_t p = 0; p < node.init_passes; ++p) {
            om_.erase(tree_.timestamp(n, DirtyBitLayout::pre_bit(p)));
            om_.erase(tree_.timestamp(n, DirtyBitLayout::post_bit(p)));
            tree_.timestamp(n, DirtyBitLayout::pre_bit(p)) = OMHandle{};
            tree_.timestamp(n, DirtyBitLayout::post_bit(p)) = OMHandle{};
          }
        }
      }
    }
    removed_.clear();
  }

  TraversalOptions options_;
  OrderMaintenance om_;
  MinHeap<QueueElement, ByTimestamp> heap_;
  std::uint32_t passes_ = 0;
  bool in_clean_ = false;
  OMHandle last_;
  std::vector<NodeId> removed_;
  std::uint64_t seen_creates_ = 0;
  std::uint64_t seen_rebalances_ = 0;
};

}  // namespace

std::unique_ptr<Traversal> make_spineless(LayoutTree& tree, const RecomputeProgram& program, TraversalOptions options) {
  return std::make_unique<SpinelessTraversal>(tree, program, options);
}

}  // namespace spineless
