#include <doctest.h>

#include <set>

#include "support.hpp"

using namespace testing;

namespace {

class RecordingListener : public TreeListener {
 public:
  std::vector<BitRef> calls;
  void dirty(NodeId n, BitId b) override { calls.push_back({n, b}); }
  void on_subtree_inserted(NodeId) override {}
  void on_subtree_removing(NodeId) override {}
};

// Chain of `depth` nodes with `extra` leaves under each of them.
NodeId comb(Session& s, int depth, int extra, std::vector<NodeId>& spine) {
  NodeId root = s.make();
  spine = {root};
  for (int d = 1; d < depth; ++d) {
    for (int i = 0; i < extra; ++i) s.make(spine.back());
    spine.push_back(s.make(spine.back()));
  }
  return root;
}

std::vector<BitRef> from_scratch_order(const LayoutTree& tree) {
  std::vector<BitRef> out;
  std::vector<std::pair<NodeId, bool>> stack;
  for (std::uint32_t p = 0; p < tree.grammar().layout.pass_count; ++p) {
    stack.push_back({tree.root(), false});
    while (!stack.empty()) {
      auto [n, post] = stack.back();
      stack.pop_back();
      if (post) {
        out.push_back({n, DirtyBitLayout::post_bit(p)});
        continue;
      }
      out.push_back({n, DirtyBitLayout::pre_bit(p)});
      stack.push_back({n, true});
      for (NodeId c = tree.node(n).last; c != kNoNode; c = tree.node(c).prev) stack.push_back({c, false});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("schedule successor walks from-scratch order exactly once") {
  Session s(compile_grammar(kTwoPassProgram), Algorithm::Naive);
  std::mt19937_64 rng(5);
  NodeId root = random_subtree(s, rng, 40);
  s.start(root);
  auto expected = from_scratch_order(s.tree);
  std::vector<BitRef> walked;
  std::optional<BitRef> at = BitRef{root, 0};
  while (at) {
    walked.push_back(*at);
    at = schedule_successor(s.tree, *at);
  }
  CHECK(walked == expected);
  for (std::size_t i = 1; i < expected.size(); ++i) {
    auto pred = schedule_predecessor(s.tree, expected[i]);
    REQUIRE(pred.has_value());
    CHECK(*pred == expected[i - 1]);
  }
  CHECK_FALSE(schedule_predecessor(s.tree, expected.front()).has_value());
}

TEST_CASE("schedule successor edge cases") {
  Session s(bundled("paragraph.mg"), Algorithm::Naive);
  NodeId root = s.make();
  NodeId leaf = s.make(root);
  s.start(root);
  CHECK(*schedule_successor(s.tree, {leaf, 0}) == BitRef{leaf, 1});
  CHECK_FALSE(schedule_successor(s.tree, {root, 1}).has_value());
}

TEST_CASE("structural rules on insertion and removal") {
  Session s(bundled("paragraph.mg"), Algorithm::Naive);
  NodeId root = s.make();
  NodeId a = s.make(root);
  NodeId b = s.make(root);
  NodeId c = s.make(root);
  s.start(root);
  RecordingListener rec;
  s.tree.set_listener(&rec);

  SUBCASE("removing a middle sibling dirties the next sibling's post bit") {
    s.tree.remove_subtree(b);
    REQUIRE(rec.calls.size() == 1);
    CHECK(rec.calls[0] == BitRef{c, 1});
  }
  SUBCASE("removing the last child dirties the parent's post bit") {
    s.tree.remove_subtree(c);
    REQUIRE(rec.calls.size() == 1);
    CHECK(rec.calls[0] == BitRef{root, 1});
  }
  SUBCASE("inserting a new last child dirties the parent") {
    NodeId x = s.make();
    s.tree.insert_subtree(root, c, x);
    REQUIRE(rec.calls.size() == 1);
    CHECK(rec.calls[0] == BitRef{root, 1});
  }
  SUBCASE("inserting in the middle dirties the next sibling") {
    NodeId x = s.make();
    s.tree.insert_subtree(root, a, x);
    REQUIRE(rec.calls.size() == 1);
    CHECK(rec.calls[0] == BitRef{b, 1});
  }
}

TEST_CASE("an only child dirties its parent once though first and last both move") {
  auto g = compile_grammar(R"(
def A() {
  recurse;
  self.f = if first? then first.f + 1 else 0;
  self.l = if last? then last.l + 1 else 0;
}
schedule A;)");
  Session s(g, Algorithm::Naive);
  NodeId root = s.make();
  s.start(root);
  RecordingListener rec;
  s.tree.set_listener(&rec);
  s.tree.insert_subtree(root, kNoNode, s.make());
  REQUIRE(rec.calls.size() == 1);
  CHECK(rec.calls[0] == BitRef{root, 1});
}

TEST_CASE("attribute writes dirty only their own bit") {
  Session s(bundled("paragraph.mg"), Algorithm::Naive);
  NodeId root = s.make();
  NodeId leaf = s.make(root);
  s.start(root);
  RecordingListener rec;
  s.tree.set_listener(&rec);
  s.tree.set_attribute(leaf, s.attr("height"), Value::of_number(10));
  REQUIRE(rec.calls.size() == 1);
  CHECK(rec.calls[0] == BitRef{leaf, 1});
}

TEST_CASE("mutations on removed nodes are rejected") {
  Session s(bundled("paragraph.mg"), Algorithm::Naive);
  NodeId root = s.make();
  NodeId leaf = s.make(root);
  s.start(root);
  s.frame([&] { s.tree.remove_subtree(leaf); });
  CHECK_THROWS_AS(s.tree.set_attribute(leaf, 0, Value::of_number(1)), TreeError);
  CHECK_THROWS_AS(s.tree.remove_subtree(leaf), TreeError);
  CHECK_THROWS_AS(s.tree.remove_subtree(root), TreeError);
  CHECK_THROWS_AS(s.tree.insert_subtree(leaf, kNoNode, s.make()), TreeError);
  CHECK_THROWS_AS(s.tree.insert_subtree(root, kNoNode, root), TreeError);
}

TEST_CASE("double dirty bit summary marking") {
  Session s(bundled("paragraph.mg"), Algorithm::DoubleDirtyBit);
  std::vector<NodeId> spine;
  NodeId root = comb(s, 18, 2, spine);
  s.start(root);
  auto summarized = [&] {
    int count = 0;
    for (NodeId n : s.tree.preorder()) count += s.tree.node(n).summary != 0;
    return count;
  };
  CHECK(summarized() == 0);
  s.traversal->dirty(spine.back(), 1);
  CHECK(summarized() == 17);
  s.traversal->clean();
  CHECK(summarized() == 0);

  s.traversal->dirty(root, 1);
  CHECK(summarized() == 0);
  s.traversal->clean();

  // A sibling of the deep node adds nothing: the shared parent already has the bit.
  NodeId parent = spine[spine.size() - 2];
  NodeId sibling = s.tree.node(parent).first;
  s.traversal->dirty(spine.back(), 1);
  CHECK(summarized() == 17);
  s.traversal->dirty(sibling, 1);
  CHECK(summarized() == 17);
  CHECK(s.tree.node(sibling).summary == 0);
  s.traversal->clean();
}

TEST_CASE("clean frames touch only the root under double dirty bit") {
  Session s(bundled("paragraph.mg"), Algorithm::DoubleDirtyBit);
  std::vector<NodeId> spine;
  s.start(comb(s, 5, 3, spine));
  auto& c = s.frame([] {});
  CHECK(c.nodes_accessed == 1);
  CHECK(c.recomputed_bits == 0);
}

TEST_CASE("naive traversal visits the whole tree") {
  Session s(bundled("paragraph.mg"), Algorithm::Naive);
  std::vector<NodeId> spine;
  s.start(comb(s, 5, 3, spine));
  auto& c = s.frame([&] { s.tree.set_attribute(spine.back(), s.attr("height"), Value::of_number(0)); });
  CHECK(c.recomputed_bits == 1);
  CHECK(c.nodes_accessed == s.tree.live_count());
}

TEST_CASE("spineless queue deduplicates and compresses") {
  Session s(bundled("paragraph.mg"), Algorithm::Spineless);
  NodeId root = s.make();
  NodeId a = s.make(root);
  NodeId b = s.make(root);
  s.start(root);
  s.tree.begin_frame();
  s.traversal->dirty(b, 1);
  s.traversal->dirty(b, 1);
  CHECK(s.tree.counters().heap_pushes == 1);
  // root's post directly follows b's post, which is dirty: no push.
  s.traversal->dirty(root, 1);
  CHECK(s.tree.counters().heap_pushes == 1);
  // a's post precedes b's pre, which is clean: queued.
  s.traversal->dirty(a, 1);
  CHECK(s.tree.counters().heap_pushes == 2);
  s.traversal->clean();
  s.tree.finish_frame();
  CHECK(s.tree.counters().recomputed_bits == 3);
  CHECK(s.tree.counters().timestamp_violations == 0);
}

TEST_CASE("compression can be switched off") {
  Session s(bundled("paragraph.mg"), Algorithm::Spineless, {.queue_compression = false});
  NodeId root = s.make();
  NodeId b = s.make(root);
  s.start(root);
  s.tree.begin_frame();
  s.traversal->dirty(b, 1);
  s.traversal->dirty(root, 1);
  CHECK(s.tree.counters().heap_pushes == 2);
  s.traversal->clean();
}

TEST_CASE("subtree insertion initializes without queueing its nodes") {
  Session s(bundled("paragraph.mg"), Algorithm::Spineless);
  NodeId root = s.make();
  NodeId a = s.make(root);
  NodeId b = s.make(root);
  s.start(root);
  std::mt19937_64 rng(3);
  NodeId sub = random_subtree(s, rng, 100);
  auto& c = s.frame([&] { s.tree.insert_subtree(root, a, sub); });
  // One init element plus b's post bit (its prev changed).
  CHECK(c.heap_pushes == 2);
  CHECK(c.recomputed_bits >= 200);
  CHECK(c.timestamp_violations == 0);
  CHECK_FALSE(compare_fields(s.tree, evaluate_from_scratch(s.tree)).has_value());
  (void)b;
}

TEST_CASE("inserting and removing within one frame is a no-op") {
  for (Algorithm algo : {Algorithm::Naive, Algorithm::DoubleDirtyBit, Algorithm::Spineless}) {
    CAPTURE(to_string(algo));
    Session s(compile_grammar(kTwoPassProgram), algo);
    std::mt19937_64 rng(11);
    NodeId root = random_subtree(s, rng, 30);
    s.start(root);
    std::ostringstream before, after;
    s.tree.dump(before);
    NodeId sub = random_subtree(s, rng, 12);
    NodeId parent = s.tree.node(root).first;
    auto& c = s.frame([&] {
      s.tree.insert_subtree(parent, kNoNode, sub);
      s.tree.remove_subtree(sub);
    });
    CHECK(c.deleted_recomputes == 0);
    CHECK(c.duplicate_recomputes == 0);
    s.tree.dump(after);
    CHECK(before.str() == after.str());
  }
}

namespace {

struct FrameLog {
  std::vector<std::uint64_t> recomputed;
  std::string final_dump;
};

// Random edits on a random tree, checked against the oracle every frame.
FrameLog random_run(std::shared_ptr<const CompiledGrammar> g, Algorithm algo, TraversalOptions opts,
                    std::uint64_t seed, int frames) {
  Session s(g, algo, opts);
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  NodeId root = random_subtree(s, rng, 25);
  s.start(root);
  FrameLog log;
  const Program& p = g->program;
  for (int f = 0; f < frames; ++f) {
    auto& c = s.frame([&] {
      int ops = 1 + static_cast<int>(pick(4));
      for (int i = 0; i < ops; ++i) {
        auto nodes = s.tree.preorder();
        NodeId n = nodes[pick(nodes.size())];
        switch (pick(4)) {
          case 0:
          case 1: {
            std::uint32_t a = static_cast<std::uint32_t>(pick(p.attributes.size()));
            Value v = p.attributes[a].type == ValueType::Bool ? Value::of_bool(pick(2))
                                                              : Value::of_number(static_cast<double>(pick(4)));
            s.tree.set_attribute(n, a, v);
            break;
          }
          case 2: {
            NodeId sub = random_subtree(s, rng, 1 + pick(6));
            NodeId after = kNoNode;
            if (pick(3) && s.tree.node(n).first != kNoNode) {
              after = s.tree.node(n).first;
              for (std::size_t k = pick(3); k > 0 && s.tree.node(after).next != kNoNode; --k) {
                after = s.tree.node(after).next;
              }
            }
            s.tree.insert_subtree(n, after, sub);
            break;
          }
          case 3:
            if (n != root && s.tree.live_count() > 8) s.tree.remove_subtree(n);
            break;
        }
      }
    });
    INFO("frame " << f);
    REQUIRE(c.duplicate_recomputes == 0);
    REQUIRE(c.timestamp_violations == 0);
    REQUIRE(c.deleted_recomputes == 0);
    auto mismatch = compare_fields(s.tree, evaluate_from_scratch(s.tree));
    if (mismatch) {
      FAIL("node " << mismatch->node_key << " field " << mismatch->field << ": expected " << mismatch->expected
                   << ", got " << mismatch->actual);
    }
    for (NodeId n : s.tree.preorder()) REQUIRE(s.tree.node(n).dirty == 0);
    s.tree.check_links();
    log.recomputed.push_back(c.recomputed_bits);
  }
  std::ostringstream os;
  s.tree.dump(os);
  log.final_dump = os.str();
  return log;
}

}  // namespace

TEST_CASE("random edits agree with the oracle under every traversal") {
  for (const char* which : {"paragraph", "two-pass"}) {
    auto g = std::string(which) == "paragraph" ? bundled("paragraph.mg") : compile_grammar(kTwoPassProgram);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      CAPTURE(which);
      CAPTURE(seed);
      FrameLog naive = random_run(g, Algorithm::Naive, {}, seed, 40);
      FrameLog ddb = random_run(g, Algorithm::DoubleDirtyBit, {}, seed, 40);
      FrameLog sp = random_run(g, Algorithm::Spineless, {}, seed, 40);
      FrameLog plain = random_run(g, Algorithm::Spineless,
                                  {.queue_compression = false, .om_deletion = true, .branchless_compare = false},
                                  seed, 40);
      CHECK(naive.recomputed == ddb.recomputed);
      CHECK(naive.recomputed == sp.recomputed);
      CHECK(naive.recomputed == plain.recomputed);
      CHECK(naive.final_dump == sp.final_dump);
      CHECK(naive.final_dump == plain.final_dump);
    }
  }
}
