#pragma once

// The mutable layout tree. Nodes live in one pool and keep their slot after
// removal, so queued work can still refer to them. Structural mutations and
// attribute writes fire the program's dirty rules through a TreeListener.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spineless/counters.hpp"
#include "spineless/grammar.hpp"
#include "spineless/om.hpp"

namespace spineless {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

class TreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  NodeId parent = kNoNode;
  NodeId first = kNoNode;
  NodeId last = kNoNode;
  NodeId prev = kNoNode;
  NodeId next = kNoNode;
  BitMask dirty = 0;
  BitMask summary = 0;  // Double Dirty Bit
  BitMask chained = 0;  // Spineless: schedule successor was dirtied after this bit
  std::uint32_t init_passes = 0;  // passes whose fields have been computed here
  std::uint32_t touch_epoch = 0;
  std::uint32_t visit_epoch = 0;
  std::uint32_t recompute_epoch = 0;
  std::uint64_t key = 0;  // identity assigned by the trace
  bool deleted = false;
  bool attached = false;  // linked under a parent, or the root
};

class DirtySink {
 public:
  virtual ~DirtySink() = default;
  virtual void dirty(NodeId node, BitId bit) = 0;
};

class TreeListener : public DirtySink {
 public:
  /// Called after `root` has been linked in.
  virtual void on_subtree_inserted(NodeId root) = 0;
  /// Called before `root` is unlinked.
  virtual void on_subtree_removing(NodeId root) = 0;
};

/// Field values for every node; the tree keeps one, the oracle another.
struct FieldStore {
  std::uint32_t field_count = 0;
  std::vector<Value> values;
  std::vector<std::uint8_t> written;

  void resize(std::size_t nodes) {
    values.resize(nodes * field_count);
    written.resize(nodes * field_count);
  }
  std::size_t slot(NodeId n, FieldId f) const { return static_cast<std::size_t>(n) * field_count + f; }
};

/// Strings seen by one tree: the program's literals first, so ids agree with
/// the program, then any value arriving from a trace.
class StringTable {
 public:
  explicit StringTable(const std::vector<std::string>& seed);
  std::uint32_t intern(std::string_view text);
  const std::string& text(std::uint32_t id) const { return strings_.at(id); }

 private:
  std::vector<std::string> strings_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

class LayoutTree {
 public:
  explicit LayoutTree(std::shared_ptr<const CompiledGrammar> grammar);

  const CompiledGrammar& grammar() const { return *grammar_; }
  std::shared_ptr<const CompiledGrammar> grammar_ptr() const { return grammar_; }
  const Program& program() const { return grammar_->program; }
  std::uint32_t bit_count() const { return bit_count_; }
  /// Bits that cover at least one field.
  BitMask live_bits() const { return live_bits_; }

  /// A detached node carrying the declared default attributes and
  /// properties. Keys must be unique.
  NodeId create_node(std::uint64_t key);
  /// Appends `child` under `parent` without notifying anyone. Both must be
  /// outside the attached tree; used to build literals and the initial tree.
  void append_detached(NodeId parent, NodeId child);
  void set_root(NodeId root);
  NodeId root() const { return root_; }

  void set_listener(TreeListener* listener) { listener_ = listener; }

  /// Links the detached subtree `sub` under `parent`, after `after` (or as
  /// the first child when `after` is kNoNode).
  void insert_subtree(NodeId parent, NodeId after, NodeId sub);
  void remove_subtree(NodeId node);
  /// Writes on detached nodes fire no rules; the node is laid out in full
  /// once attached.
  void set_attribute(NodeId node, std::uint32_t attribute, Value value);
  void set_property(NodeId node, std::uint32_t property, Value value);

  const Node& node(NodeId n) const { return nodes_[n]; }
  Node& node(NodeId n) { return nodes_[n]; }
  std::size_t node_slots() const { return nodes_.size(); }
  std::size_t live_count() const { return live_count_; }
  NodeId find(std::uint64_t key) const;

  Value attribute(NodeId n, std::uint32_t a) const { return attributes_[n * attribute_count_ + a]; }
  Value property(NodeId n, std::uint32_t p) const { return properties_[n * property_count_ + p]; }

  FieldStore& fields() { return fields_; }
  const FieldStore& fields() const { return fields_; }
  /// Reads a computed field; throws TreeError when it was never computed.
  Value field(NodeId n, FieldId f) const;

  OMHandle& timestamp(NodeId n, BitId b) { return timestamps_[static_cast<std::size_t>(n) * bit_count_ + b]; }

  StringTable& strings() { return strings_; }
  const StringTable& strings() const { return strings_; }

  FrameCounters& counters() { return counters_; }
  const FrameCounters& counters() const { return counters_; }

  /// Starts a new frame: resets counters and the per-frame touch and
  /// recompute stamps.
  void begin_frame();
  std::uint32_t epoch() const { return epoch_; }
  void touch(NodeId n) {
    if (nodes_[n].touch_epoch != epoch_) {
      nodes_[n].touch_epoch = epoch_;
      ++counters_.nodes_accessed;
    }
  }
  /// Records a recomputation of (n, b); counts a duplicate if it already
  /// happened this frame.
  void note_recompute(NodeId n, BitId b);
  /// A node reached by an invalidation traversal.
  void visit(NodeId n) {
    touch(n);
    if (nodes_[n].visit_epoch != epoch_) {
      nodes_[n].visit_epoch = epoch_;
      visited_.push_back(n);
    }
  }
  /// Counts the frame's visited nodes that recomputed nothing.
  void finish_frame();

  /// Attached nodes in depth-first pre-order.
  std::vector<NodeId> preorder() const;
  std::vector<NodeId> preorder(NodeId from) const;

  /// Throws TreeError on the first broken parent/sibling link.
  void check_links() const;

  /// One line per attached node, depth-first, with attributes, properties
  /// and computed fields from `store` (the tree's own when null).
  void dump(std::ostream& os, const FieldStore* store = nullptr) const;
  std::string format(ValueType type, const Value& v) const;

 private:
  void fire_structural(NodeId x, NodeId prev, NodeId next, NodeId parent, bool was_first, bool was_last);
  void fire_rules(NodeId n, const std::vector<DirtyRule>& rules);
  void require_live(NodeId n, const char* what) const;

  std::shared_ptr<const CompiledGrammar> grammar_;
  std::uint32_t bit_count_ = 0;
  BitMask live_bits_ = 0;
  std::uint32_t attribute_count_ = 0;
  std::uint32_t property_count_ = 0;
  std::vector<Node> nodes_;
  std::vector<Value> attributes_;
  std::vector<Value> properties_;
  FieldStore fields_;
  std::vector<OMHandle> timestamps_;
  std::vector<std::uint32_t> recompute_epoch_;
  std::vector<NodeId> visited_;
  std::unordered_map<std::uint64_t, NodeId> by_key_;
  StringTable strings_;
  NodeId root_ = kNoNode;
  std::size_t live_count_ = 0;
  TreeListener* listener_ = nullptr;
  FrameCounters counters_;
  std::uint32_t epoch_ = 1;
};

}  // namespace spineless
