#include "spineless/tree.hpp"

#include <bit>
#include <ostream>
#include <sstream>

namespace spineless {

StringTable::StringTable(const std::vector<std::string>& seed) {
  for (const auto& s : seed) intern(s);
  if (strings_.empty()) intern("");
}

std::uint32_t StringTable::intern(std::string_view text) {
  auto it = ids_.find(std::string(text));
  if (it != ids_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(strings_.size());
  strings_.emplace_back(text);
  ids_.emplace(strings_.back(), id);
  return id;
}

LayoutTree::LayoutTree(std::shared_ptr<const CompiledGrammar> grammar)
    : grammar_(std::move(grammar)), strings_(grammar_->program.strings) {
  const auto& layout = grammar_->layout;
  bit_count_ = layout.bit_count();
  for (BitId b = 0; b < bit_count_; ++b) {
    if (!layout.bit_fields[b].empty()) live_bits_ |= BitMask{1} << b;
  }
  attribute_count_ = static_cast<std::uint32_t>(grammar_->program.attributes.size());
  property_count_ = static_cast<std::uint32_t>(grammar_->program.properties.size());
  fields_.field_count = static_cast<std::uint32_t>(grammar_->program.fields.size());
}

NodeId LayoutTree::create_node(std::uint64_t key) {
  if (by_key_.count(key)) throw TreeError("duplicate node id " + std::to_string(key));
  if (nodes_.size() >= kNoNode) throw TreeError("node pool exhausted");
  auto id = static_cast<NodeId>(nodes_.size());
  Node n;
  n.key = key;
  nodes_.push_back(n);
  by_key_.emplace(key, id);
  for (const auto& d : grammar_->program.attributes) attributes_.push_back(d.initial);
  for (const auto& d : grammar_->program.properties) properties_.push_back(d.initial);
  fields_.resize(nodes_.size());
  timestamps_.resize(nodes_.size() * bit_count_);
  recompute_epoch_.resize(nodes_.size() * bit_count_);
  return id;
}

void LayoutTree::append_detached(NodeId parent, NodeId child) {
  Node& p = nodes_.at(parent);
  Node& c = nodes_.at(child);
  if (p.attached || c.attached || c.parent != kNoNode || child == root_) {
    throw TreeError("append_detached needs two detached nodes");
  }
  c.parent = parent;
  c.prev = p.last;
  c.next = kNoNode;
  if (p.last != kNoNode) nodes_[p.last].next = child;
  else p.first = child;
  p.last = child;
}

void LayoutTree::set_root(NodeId root) {
  if (root_ != kNoNode) throw TreeError("the tree already has a root");
  if (nodes_.at(root).parent != kNoNode) throw TreeError("the root cannot have a parent");
  root_ = root;
  for (NodeId n : preorder(root)) {
    nodes_[n].attached = true;
    ++live_count_;
  }
}

NodeId LayoutTree::find(std::uint64_t key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? kNoNode : it->second;
}

void LayoutTree::require_live(NodeId n, const char* what) const {
  if (n >= nodes_.size()) throw TreeError(std::string(what) + ": no such node");
  const Node& node = nodes_[n];
  if (node.deleted) throw TreeError(std::string(what) + ": node " + std::to_string(node.key) + " was removed");
  if (!node.attached) {
    throw TreeError(std::string(what) + ": node " + std::to_string(node.key) + " is not in the tree");
  }
}

void LayoutTree::insert_subtree(NodeId parent, NodeId after, NodeId sub) {
  require_live(parent, "insert");
  if (sub >= nodes_.size()) throw TreeError("insert: no such node");
  Node& s = nodes_[sub];
  if (s.deleted || s.attached || s.parent != kNoNode || sub == root_) {
    throw TreeError("insert: node " + std::to_string(s.key) + " is already attached or removed");
  }
  if (after != kNoNode && (after >= nodes_.size() || nodes_[after].parent != parent || nodes_[after].deleted)) {
    throw TreeError("insert: the anchor is not a child of the parent");
  }
  Node& p = nodes_[parent];
  NodeId next = after == kNoNode ? p.first : nodes_[after].next;
  s.parent = parent;
  s.prev = after;
  s.next = next;
  if (after != kNoNode) nodes_[after].next = sub;
  else p.first = sub;
  if (next != kNoNode) nodes_[next].prev = sub;
  else p.last = sub;
  for (NodeId n : preorder(sub)) {
    nodes_[n].attached = true;
    ++live_count_;
  }
  if (!listener_) return;
  listener_->on_subtree_inserted(sub);
  fire_structural(sub, after, next, parent, after == kNoNode, next == kNoNode);
}

void LayoutTree::remove_subtree(NodeId n) {
  require_live(n, "remove");
  if (n == root_) throw TreeError("remove: cannot remove the root");
  if (listener_) listener_->on_subtree_removing(n);
  Node& x = nodes_[n];
  NodeId parent = x.parent, prev = x.prev, next = x.next;
  if (prev != kNoNode) nodes_[prev].next = next;
  else nodes_[parent].first = next;
  if (next != kNoNode) nodes_[next].prev = prev;
  else nodes_[parent].last = prev;
  for (NodeId d : preorder(n)) {
    nodes_[d].deleted = true;
    nodes_[d].attached = false;
    --live_count_;
  }
  if (listener_) fire_structural(n, prev, next, parent, prev == kNoNode, next == kNoNode);
}

void LayoutTree::set_attribute(NodeId n, std::uint32_t a, Value value) {
  if (n >= nodes_.size() || nodes_[n].deleted) throw TreeError("set_attr: no such node, or it was removed");
  if (a >= attribute_count_) throw TreeError("set_attr: no such attribute");
  attributes_[n * attribute_count_ + a] = value;
  if (listener_ && nodes_[n].attached) fire_rules(n, grammar_->dependencies.on_attribute[a]);
}

void LayoutTree::set_property(NodeId n, std::uint32_t p, Value value) {
  if (n >= nodes_.size() || nodes_[n].deleted) throw TreeError("set_prop: no such node, or it was removed");
  if (p >= property_count_) throw TreeError("set_prop: no such property");
  properties_[n * property_count_ + p] = value;
  if (listener_ && nodes_[n].attached) fire_rules(n, grammar_->dependencies.on_property[p]);
}

namespace {

void dirty_mask(DirtySink& sink, NodeId n, BitMask mask) {
  while (mask) {
    auto b = static_cast<BitId>(std::countr_zero(mask));
    mask &= mask - 1;
    sink.dirty(n, b);
  }
}

}  // namespace

void LayoutTree::fire_rules(NodeId n, const std::vector<DirtyRule>& rules) {
  // Attribute and property rules only ever target the node itself; packing
  // several targets into one bit must still dirty it once.
  BitMask self = 0;
  for (const auto& r : rules) self |= BitMask{1} << r.target_bit;
  dirty_mask(*listener_, n, self);
}

void LayoutTree::fire_structural(NodeId, NodeId prev, NodeId next, NodeId parent, bool was_first,
                                 bool was_last) {
  BitMask prev_mask = 0, next_mask = 0, parent_mask = 0;
  for (const auto& r : grammar_->dependencies.structural) {
    BitMask bit = BitMask{1} << r.target_bit;
    switch (r.direction) {
      case Direction::Prev: prev_mask |= bit; break;
      case Direction::Next: next_mask |= bit; break;
      case Direction::Parent:
        if ((r.guard == Guard::IfFirstChild && was_first) || (r.guard == Guard::IfLastChild && was_last)) {
          parent_mask |= bit;
        }
        break;
      default: break;
    }
  }
  if (prev != kNoNode) dirty_mask(*listener_, prev, prev_mask);
  if (next != kNoNode) dirty_mask(*listener_, next, next_mask);
  dirty_mask(*listener_, parent, parent_mask);
}

Value LayoutTree::field(NodeId n, FieldId f) const {
  std::size_t s = fields_.slot(n, f);
  if (!fields_.written[s]) {
    throw TreeError("field '" + program().fields[f].name + "' of node " + std::to_string(nodes_[n].key) +
                    " has not been computed");
  }
  return fields_.values[s];
}

void LayoutTree::begin_frame() {
  counters_ = {};
  visited_.clear();
  ++epoch_;
}

void LayoutTree::finish_frame() {
  for (NodeId n : visited_) {
    if (nodes_[n].recompute_epoch != epoch_) ++counters_.aux_accesses;
  }
  visited_.clear();
}

void LayoutTree::note_recompute(NodeId n, BitId b) {
  ++counters_.recomputed_bits;
  if (nodes_[n].deleted) ++counters_.deleted_recomputes;
  nodes_[n].recompute_epoch = epoch_;
  auto& stamp = recompute_epoch_[static_cast<std::size_t>(n) * bit_count_ + b];
  if (stamp == epoch_) ++counters_.duplicate_recomputes;
  stamp = epoch_;
}

std::vector<NodeId> LayoutTree::preorder() const {
  if (root_ == kNoNode) return {};
  return preorder(root_);
}

std::vector<NodeId> LayoutTree::preorder(NodeId from) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    out.push_back(n);
    for (NodeId c = nodes_[n].last; c != kNoNode; c = nodes_[c].prev) stack.push_back(c);
  }
  return out;
}

void LayoutTree::check_links() const {
  if (root_ == kNoNode) return;
  if (nodes_[root_].parent != kNoNode) throw TreeError("root has a parent");
  std::size_t count = 0;
  for (NodeId n : preorder()) {
    ++count;
    const Node& node = nodes_[n];
    auto fail = [&](const std::string& what) {
      throw TreeError("broken links at node " + std::to_string(node.key) + ": " + what);
    };
    if (node.deleted || !node.attached) fail("removed node is reachable");
    NodeId prev = kNoNode;
    for (NodeId c = node.first; c != kNoNode; c = nodes_[c].next) {
      if (nodes_[c].parent != n) fail("child with another parent");
      if (nodes_[c].prev != prev) fail("prev does not match sibling order");
      prev = c;
    }
    if (node.last != prev) fail("last is not the final child");
  }
  if (count != live_count_) throw TreeError("live node count is out of date");
}

std::string LayoutTree::format(ValueType type, const Value& v) const {
  if (type == ValueType::String) return "\"" + strings_.text(v.tag) + "\"";
  return format_value(program(), type, v);
}

void LayoutTree::dump(std::ostream& os, const FieldStore* store) const {
  if (!store) store = &fields_;
  const Program& p = program();
  std::vector<std::pair<NodeId, int>> stack;
  if (root_ != kNoNode) stack.push_back({root_, 0});
  while (!stack.empty()) {
    auto [n, depth] = stack.back();
    stack.pop_back();
    os << std::string(2 * depth, ' ') << "node " << nodes_[n].key;
    for (std::uint32_t a = 0; a < attribute_count_; ++a) {
      os << " @" << p.attributes[a].name << "=" << format(p.attributes[a].type, attribute(n, a));
    }
    for (std::uint32_t q = 0; q < property_count_; ++q) {
      os << " %" << p.properties[q].name << "=" << format(p.properties[q].type, property(n, q));
    }
    os << " |";
    for (FieldId f = 0; f < p.fields.size(); ++f) {
      std::size_t s = store->slot(n, f);
      os << " " << p.fields[f].name << "=" << (store->written[s] ? format(p.fields[f].type, store->values[s]) : "-");
    }
    os << "\n";
    for (NodeId c = nodes_[n].last; c != kNoNode; c = nodes_[c].prev) stack.push_back({c, depth + 1});
  }
}

}  // namespace spineless
