#include <algorithm>

#include "spineless/grammar.hpp"

namespace spineless {

namespace {

void add_unique(std::vector<DirtyRule>& rules, const DirtyRule& r) {
  if (std::find(rules.begin(), rules.end(), r) == rules.end()) rules.push_back(r);
}

// Inverse of a read: if V on node x reads n.U, then a change of U on node y
// must dirty V on the node(s) that reach y through n.
std::pair<Direction, Guard> invert(Neighbor n) {
  switch (n) {
    case Neighbor::Self: return {Direction::Self, Guard::None};
    case Neighbor::Prev: return {Direction::Next, Guard::None};
    case Neighbor::Next: return {Direction::Prev, Guard::None};
    case Neighbor::Parent: return {Direction::Children, Guard::None};
    case Neighbor::First: return {Direction::Parent, Guard::IfFirstChild};
    case Neighbor::Last: return {Direction::Parent, Guard::IfLastChild};
  }
  return {Direction::Self, Guard::None};
}

void scan(const Program& p, TermId id, FieldId target, BitId bit, DependencyTable& table,
          std::array<bool, 6>& pointers) {
  const Term& t = p.terms[id];
  switch (t.kind) {
    case Term::Kind::Field: {
      auto [dir, guard] = invert(t.neighbor);
      add_unique(table.on_field[t.index], {dir, guard, bit, target});
      pointers[static_cast<int>(t.neighbor)] = true;
      break;
    }
    case Term::Kind::HasNeighbor:
      pointers[static_cast<int>(t.neighbor)] = true;
      break;
    case Term::Kind::Attribute:
      add_unique(table.on_attribute[t.index], {Direction::Self, Guard::None, bit, target});
      break;
    case Term::Kind::Property:
      add_unique(table.on_property[t.index], {Direction::Self, Guard::None, bit, target});
      break;
    default:
      break;
  }
  for (TermId k : p.children(t)) scan(p, k, target, bit, table, pointers);
}

}  // namespace

std::size_t DependencyTable::rule_count() const {
  std::size_t n = 0;
  for (const auto* group : {&on_field, &on_attribute, &on_property}) {
    for (const auto& rules : *group) n += rules.size();
  }
  return n;
}

DependencyTable analyze_dependencies(const Program& program) {
  DependencyTable table;
  table.on_field.resize(program.fields.size());
  table.on_attribute.resize(program.attributes.size());
  table.on_property.resize(program.properties.size());

  for (std::uint32_t pass = 0; pass < program.passes.size(); ++pass) {
    for (Position pos : {Position::Pre, Position::Post}) {
      const auto& section = pos == Position::Pre ? program.passes[pass].pre : program.passes[pass].post;
      BitId bit = pos == Position::Pre ? DirtyBitLayout::pre_bit(pass) : DirtyBitLayout::post_bit(pass);
      for (const auto& a : section) {
        std::array<bool, 6> pointers{};
        scan(program, a.term, a.target, bit, table, pointers);

        // Insertions and removals re-point prev/next of the neighbors and
        // first/last of the parent; the parent pointer of a live node never
        // changes.
        auto structural = [&](Direction d, Guard g) {
          DirtyRule r{d, g, bit, a.target};
          auto same_bit = [&](const DirtyRule& o) {
            return o.direction == d && o.guard == g && o.target_bit == bit;
          };
          if (std::none_of(table.structural.begin(), table.structural.end(), same_bit)) {
            table.structural.push_back(r);
          }
        };
        if (pointers[static_cast<int>(Neighbor::Prev)]) structural(Direction::Next, Guard::None);
        if (pointers[static_cast<int>(Neighbor::Next)]) structural(Direction::Prev, Guard::None);
        if (pointers[static_cast<int>(Neighbor::First)]) structural(Direction::Parent, Guard::IfFirstChild);
        if (pointers[static_cast<int>(Neighbor::Last)]) structural(Direction::Parent, Guard::IfLastChild);
      }
    }
  }
  return table;
}

DirtyBitLayout pack_fields(const Program& program) {
  DirtyBitLayout layout;
  layout.pass_count = static_cast<std::uint32_t>(program.passes.size());
  layout.field_bit.resize(program.fields.size());
  layout.bit_fields.resize(layout.bit_count());
  for (std::uint32_t pass = 0; pass < layout.pass_count; ++pass) {
    for (const auto& a : program.passes[pass].pre) {
      layout.field_bit[a.target] = DirtyBitLayout::pre_bit(pass);
      layout.bit_fields[DirtyBitLayout::pre_bit(pass)].push_back(a.target);
    }
    for (const auto& a : program.passes[pass].post) {
      layout.field_bit[a.target] = DirtyBitLayout::post_bit(pass);
      layout.bit_fields[DirtyBitLayout::post_bit(pass)].push_back(a.target);
    }
  }
  return layout;
}

}  // namespace spineless
