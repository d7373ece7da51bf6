#include "spineless/engine.hpp"

#include <algorithm>
#include <bit>
#include <chrono>

namespace spineless {

NodeId Evaluator::neighbor(NodeId n, Neighbor which) const {
  const Node& node = tree_.node(n);
  switch (which) {
    case Neighbor::Self: return n;
    case Neighbor::Prev: return node.prev;
    case Neighbor::Next: return node.next;
    case Neighbor::Parent: return node.parent;
    case Neighbor::First: return node.first;
    case Neighbor::Last: return node.last;
  }
  return kNoNode;
}

void Evaluator::fail(const Term& t, NodeId n, const std::string& what) const {
  throw EvalError(to_string(t.loc) + ": node " + std::to_string(tree_.node(n).key) + ": " + what);
}

Value Evaluator::eval(TermId id, NodeId n) const {
  const Term& t = program_.terms[id];
  switch (t.kind) {
    case Term::Kind::Literal: return program_.literals[t.index];
    case Term::Kind::Attribute: return tree_.attribute(n, t.index);
    case Term::Kind::Property: return tree_.property(n, t.index);
    case Term::Kind::HasNeighbor: return Value::of_bool(neighbor(n, t.neighbor) != kNoNode);
    case Term::Kind::Field: {
      NodeId m = neighbor(n, t.neighbor);
      const std::string& name = program_.fields[t.index].name;
      if (m == kNoNode) {
        fail(t, n, std::string("reads ") + to_string(t.neighbor) + "." + name + " but has no " +
                       to_string(t.neighbor));
      }
      if (touches_) touches_->touch(m);
      std::size_t s = store_.slot(m, t.index);
      if (!store_.written[s]) {
        fail(t, n, std::string("reads ") + to_string(t.neighbor) + "." + name + " before it is computed");
      }
      return store_.values[s];
    }
    case Term::Kind::If: {
      auto kids = program_.children(t);
      return eval(kids[0], n).as_bool() ? eval(kids[1], n) : eval(kids[2], n);
    }
    case Term::Kind::Call: break;
  }

  auto kids = program_.children(t);
  auto arg = [&](std::size_t i) { return eval(kids[i], n); };
  switch (t.function) {
    case Function::And: return Value::of_bool(arg(0).as_bool() && arg(1).as_bool());
    case Function::Or: return Value::of_bool(arg(0).as_bool() || arg(1).as_bool());
    case Function::Not: return Value::of_bool(!arg(0).as_bool());
    case Function::Add: return Value::of_number(arg(0).number + arg(1).number);
    case Function::Sub: return Value::of_number(arg(0).number - arg(1).number);
    case Function::Mul: return Value::of_number(arg(0).number * arg(1).number);
    case Function::Neg: return Value::of_number(-arg(0).number);
    case Function::Max: return Value::of_number(std::max(arg(0).number, arg(1).number));
    case Function::Min: return Value::of_number(std::min(arg(0).number, arg(1).number));
    case Function::Lt: return Value::of_bool(arg(0).number < arg(1).number);
    case Function::Le: return Value::of_bool(arg(0).number <= arg(1).number);
    case Function::Gt: return Value::of_bool(arg(0).number > arg(1).number);
    case Function::Ge: return Value::of_bool(arg(0).number >= arg(1).number);
    case Function::Eq:
    case Function::Ne: {
      Value a = arg(0), b = arg(1);
      bool eq = a.number == b.number && a.tag == b.tag;
      return Value::of_bool(t.function == Function::Eq ? eq : !eq);
    }
    case Function::Px: return Value::of_length(arg(0).number, false);
    case Function::Pct: return Value::of_length(arg(0).number, true);
    case Function::IsPct: return Value::of_bool(arg(0).is_percent());
    case Function::Magnitude: return Value::of_number(arg(0).number);
  }
  fail(t, n, "unknown function");
}

RecomputeProgram::RecomputeProgram(std::shared_ptr<const CompiledGrammar> grammar) : grammar_(std::move(grammar)) {
  const Program& p = grammar_->program;
  const auto& layout = grammar_->layout;
  std::uint32_t bits = layout.bit_count();
  fields_.resize(bits);
  terms_.resize(bits);
  rules_.resize(bits);

  std::vector<TermId> term_of(p.fields.size());
  for (const auto& pass : p.passes) {
    for (const auto* section : {&pass.pre, &pass.post}) {
      for (const auto& a : *section) term_of[a.target] = a.term;
    }
  }
  for (BitId b = 0; b < bits; ++b) {
    const auto& fs = layout.bit_fields[b];
    if (fs.size() > 64) throw std::length_error("more than 64 fields share one dirty bit");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      fields_[b].push_back(fs[i]);
      terms_[b].push_back(term_of[fs[i]]);
      for (const DirtyRule& r : grammar_->dependencies.on_field[fs[i]]) {
        // Later fields of the same bit are recomputed by this very routine.
        if (r.direction == Direction::Self && r.target_bit == b) continue;
        auto it = std::find_if(rules_[b].begin(), rules_[b].end(), [&](const BitRule& br) {
          return br.direction == r.direction && br.target_bit == r.target_bit;
        });
        if (it == rules_[b].end()) {
          rules_[b].push_back({r.direction, r.target_bit, 0, 0, 0});
          it = rules_[b].end() - 1;
        }
        std::uint64_t mask = std::uint64_t{1} << i;
        switch (r.guard) {
          case Guard::None: it->any |= mask; break;
          case Guard::IfFirstChild: it->if_first |= mask; break;
          case Guard::IfLastChild: it->if_last |= mask; break;
        }
      }
    }
  }
}

bool RecomputeProgram::recompute(LayoutTree& tree, NodeId n, BitId b, DirtySink* sink, Propagation scope) const {
  using Clock = std::chrono::steady_clock;
  tree.note_recompute(n, b);
  tree.touch(n);

  auto start = Clock::now();
  FieldStore& store = tree.fields();
  Evaluator ev(tree, store, &tree);
  const auto& fs = fields_[b];
  const auto& ts = terms_[b];
  std::uint64_t changed = 0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    Value v = ev.eval(ts[i], n);
    std::size_t s = store.slot(n, fs[i]);
    if (!store.written[s] || !identical(store.values[s], v)) {
      changed |= std::uint64_t{1} << i;
      store.values[s] = v;
      store.written[s] = 1;
    }
  }
  tree.counters().evaluate_ticks += static_cast<std::uint64_t>((Clock::now() - start).count());

  if (!changed || !sink || scope == Propagation::None) return changed != 0;
  const Node& node = tree.node(n);
  BitMask children = 0;
  for (const BitRule& r : rules_[b]) {
    switch (r.direction) {
      case Direction::Self:
        if (scope == Propagation::All && (changed & r.any)) sink->dirty(n, r.target_bit);
        break;
      case Direction::Prev:
        if ((changed & r.any) && node.prev != kNoNode) sink->dirty(node.prev, r.target_bit);
        break;
      case Direction::Next:
        if ((changed & r.any) && node.next != kNoNode) sink->dirty(node.next, r.target_bit);
        break;
      case Direction::Parent:
        if (node.parent != kNoNode &&
            ((changed & r.any) || ((changed & r.if_first) && node.prev == kNoNode) ||
             ((changed & r.if_last) && node.next == kNoNode))) {
          sink->dirty(node.parent, r.target_bit);
        }
        break;
      case Direction::Children:
        if (scope == Propagation::All && (changed & r.any)) children |= BitMask{1} << r.target_bit;
        break;
    }
  }
  // Child by child in schedule order, so runs of dirty bits stay adjacent.
  for (NodeId c = children ? node.first : kNoNode; c != kNoNode; c = tree.node(c).next) {
    for (BitMask m = children; m; m &= m - 1) sink->dirty(c, static_cast<BitId>(std::countr_zero(m)));
  }
  return true;
}

FieldStore evaluate_from_scratch(const LayoutTree& tree) {
  const Program& p = tree.program();
  FieldStore store;
  store.field_count = static_cast<std::uint32_t>(p.fields.size());
  store.resize(tree.node_slots());
  if (tree.root() == kNoNode) return store;
  Evaluator ev(tree, store);

  auto run = [&](const std::vector<Assignment>& section, NodeId n) {
    for (const auto& a : section) {
      std::size_t s = store.slot(n, a.target);
      store.values[s] = ev.eval(a.term, n);
      store.written[s] = 1;
    }
  };
  std::vector<std::pair<NodeId, bool>> stack;
  for (const auto& pass : p.passes) {
    stack.push_back({tree.root(), false});
    while (!stack.empty()) {
      auto [n, post] = stack.back();
      stack.pop_back();
      if (post) {
        run(pass.post, n);
        continue;
      }
      run(pass.pre, n);
      stack.push_back({n, true});
      for (NodeId c = tree.node(n).last; c != kNoNode; c = tree.node(c).prev) stack.push_back({c, false});
    }
  }
  return store;
}

std::optional<FieldMismatch> compare_fields(const LayoutTree& tree, const FieldStore& expected) {
  const Program& p = tree.program();
  const FieldStore& actual = tree.fields();
  for (NodeId n : tree.preorder()) {
    for (FieldId f = 0; f < p.fields.size(); ++f) {
      std::size_t s = actual.slot(n, f);
      bool same = actual.written[s] == expected.written[s] &&
                  (!actual.written[s] || identical(actual.values[s], expected.values[s]));
      if (same) continue;
      auto show = [&](const FieldStore& st) {
        return st.written[s] ? tree.format(p.fields[f].type, st.values[s]) : std::string("(unset)");
      };
      return FieldMismatch{tree.node(n).key, p.fields[f].name, show(expected), show(actual)};
    }
  }
  return std::nullopt;
}

}  // namespace spineless
