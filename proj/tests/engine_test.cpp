#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace testing;

namespace {

// Root with three leaves, every height 10.
struct Fixture {
  Session s;
  NodeId root, a, b, c;

  explicit Fixture(Algorithm algo = Algorithm::Spineless) : s(bundled("paragraph.mg"), algo) {
    root = s.make();
    a = s.make(root);
    b = s.make(root);
    c = s.make(root);
    for (NodeId n : {root, a, b, c}) s.tree.set_attribute(n, s.attr("height"), Value::of_number(10));
    s.start(root);
  }
};

}  // namespace

TEST_CASE("paragraph fixture evaluates by hand") {
  Fixture f;
  CHECK(f.s.num(f.root, "W") == 50);
  for (NodeId n : {f.a, f.b, f.c}) {
    CHECK(f.s.num(n, "W") == 40);
    CHECK(f.s.num(n, "H") == 10);
  }
  CHECK(f.s.num(f.a, "HA") == 10);
  CHECK(f.s.num(f.b, "HA") == 25);
  CHECK(f.s.num(f.c, "HA") == 40);
  CHECK(f.s.num(f.root, "H") == 50);
}

TEST_CASE("from-scratch evaluation matches the hand values and leaves the tree alone") {
  Fixture f;
  FieldStore oracle = evaluate_from_scratch(f.s.tree);
  FieldId W = f.s.field("W"), H = f.s.field("H"), HA = f.s.field("HA");
  CHECK(oracle.values[oracle.slot(f.root, W)].number == 50);
  CHECK(oracle.values[oracle.slot(f.c, W)].number == 40);
  CHECK(oracle.values[oracle.slot(f.root, H)].number == 50);
  CHECK(oracle.values[oracle.slot(f.b, HA)].number == 25);
  CHECK_FALSE(compare_fields(f.s.tree, oracle).has_value());
}

TEST_CASE("root-only paragraph takes its height from the attribute") {
  Session s(bundled("paragraph.mg"), Algorithm::Naive);
  NodeId root = s.make();
  s.tree.set_attribute(root, s.attr("height"), Value::of_number(7));
  s.start(root);
  CHECK(s.num(root, "H") == 7);
  FieldStore oracle = evaluate_from_scratch(s.tree);
  CHECK(oracle.values[oracle.slot(root, s.field("H"))].number == 7);
}

TEST_CASE("unchanged recomputation propagates nothing") {
  Fixture f;
  auto& c = f.s.frame([&] { f.s.tree.set_attribute(f.b, f.s.attr("height"), Value::of_number(10)); });
  CHECK(c.recomputed_bits == 1);
  CHECK(c.dirty_calls == 1);
}

TEST_CASE("changed height recomputes the chain once each") {
  Fixture f;
  auto& c = f.s.frame([&] { f.s.tree.set_attribute(f.a, f.s.attr("height"), Value::of_number(20)); });
  // a, b, c (HA chain) then the root's H.
  CHECK(c.recomputed_bits == 4);
  CHECK(c.duplicate_recomputes == 0);
  CHECK(f.s.num(f.c, "HA") == 50);
  CHECK(f.s.num(f.root, "H") == 60);
}

TEST_CASE("recompute routines fire each distinct rule once") {
  auto g = bundled("paragraph.mg");
  RecomputeProgram rp(g);
  // POST covers H and HA: H's self rule stays inside the bit, HA feeds the
  // parent (when last) and the next sibling.
  const auto& post = rp.rules(DirtyBitLayout::post_bit(0));
  REQUIRE(post.size() == 2);
  CHECK(post[0].direction == Direction::Parent);
  CHECK(post[0].if_last != 0);
  CHECK(post[1].direction == Direction::Next);
  const auto& pre = rp.rules(DirtyBitLayout::pre_bit(0));
  REQUIRE(pre.size() == 1);
  CHECK(pre[0].direction == Direction::Children);
}

TEST_CASE("guarded reads never dereference a missing neighbor") {
  Fixture f;
  // a has no prev: HA took the else branch.
  CHECK(f.s.num(f.a, "HA") == f.s.num(f.a, "H"));
}

TEST_CASE("unguarded absent-neighbor reads are runtime errors") {
  auto g = compile_grammar("def A() { pre: self.x = parent.x + 1; recurse; } schedule A;");
  LayoutTree tree(g);
  NodeId root = tree.create_node(1);
  tree.set_root(root);
  CHECK_THROWS_AS(evaluate_from_scratch(tree), EvalError);
  try {
    evaluate_from_scratch(tree);
  } catch (const EvalError& e) {
    CHECK(std::string(e.what()).find("parent.x") != std::string::npos);
  }
}

TEST_CASE("term evaluation") {
  auto g = compile_grammar(R"(
attribute height : number = 10;
property display : string = "block";
property width : length = 50%;
def A() {
  pre:
  self.m = max(0, 50 - 10);
  self.hp = parent?;
  self.h = self.attribute[height];
  self.none = self.property[display] == "none";
  self.pct = is_pct(self.property[width]);
  self.mag = magnitude(self.property[width]) * 2;
  self.sc = false && (1 < 2);
  self.len = px(3);
  recurse;
}
schedule A;)");
  LayoutTree tree(g);
  NodeId root = tree.create_node(1);
  tree.set_root(root);
  FieldStore st = evaluate_from_scratch(tree);
  auto get = [&](const char* name) { return st.values[st.slot(root, g->program.find_field(name))]; };
  CHECK(get("m").number == 40);
  CHECK_FALSE(get("hp").as_bool());
  CHECK(get("h").number == 10);
  CHECK_FALSE(get("none").as_bool());
  CHECK(get("pct").as_bool());
  CHECK(get("mag").number == 100);
  CHECK_FALSE(get("sc").as_bool());
  CHECK(get("len").number == 3);
  CHECK_FALSE(get("len").is_percent());

  tree.set_property(root, g->program.find_property("display"), Value::of_string(tree.strings().intern("none")));
  st = evaluate_from_scratch(tree);
  CHECK(get("none").as_bool());
}

TEST_CASE("field dump is deterministic") {
  Fixture f;
  std::ostringstream a, b;
  f.s.tree.dump(a);
  f.s.tree.dump(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("node 0 @height=10 | W=50 H=50 HA=50\n  node 1", 0) == 0);
}
