#pragma once

#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "spineless/engine.hpp"
#include "spineless/invalidate.hpp"

namespace testing {

using namespace spineless;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::shared_ptr<const CompiledGrammar> bundled(const std::string& name) {
  return compile_grammar(read_file(std::string(SPINELESS_SOURCE_DIR) + "/programs/" + name));
}

// Exercises prev/next/first/last/parent reads across two passes.
inline const char* kTwoPassProgram = R"(
attribute a : number = 1;
attribute flag : bool = false;
def Sizes() {
  pre: self.depth = if parent? then parent.depth + 1 else 0;
  self.idx = if prev? then prev.idx + 1 else 0;
  recurse;
  post: self.sum = if last? then last.acc + self.attribute[a] else self.attribute[a];
  self.acc = if prev? then prev.acc + self.sum else self.sum;
  self.lead = if first? then first.sum else 0;
}
def Place() {
  pre: self.x = if prev? then prev.x + prev.sum else (if parent? then parent.x + 1 else 0);
  self.room = if next? then next.sum else 0;
  recurse;
  post: self.total = if self.attribute[flag] then self.x + self.room else self.depth * 2 + self.lead;
}
schedule Sizes, Place;
)";

/// A tree plus one traversal, laid out once.
struct Session {
  std::shared_ptr<const CompiledGrammar> grammar;
  RecomputeProgram program;
  LayoutTree tree;
  std::unique_ptr<Traversal> traversal;
  std::uint64_t next_key = 0;

  Session(std::shared_ptr<const CompiledGrammar> g, Algorithm algo, TraversalOptions opts = {})
      : grammar(g), program(g), tree(g) {
    traversal = make_traversal(algo, tree, program, opts);
  }

  NodeId make(NodeId parent = kNoNode) {
    NodeId n = tree.create_node(next_key++);
    if (parent != kNoNode) tree.append_detached(parent, n);
    return n;
  }

  void start(NodeId root) {
    tree.set_root(root);
    tree.set_listener(traversal.get());
    tree.begin_frame();
    traversal->on_first_layout();
    traversal->clean();
    tree.finish_frame();
  }

  template <typename F>
  const FrameCounters& frame(F&& commands) {
    tree.begin_frame();
    commands();
    traversal->clean();
    tree.finish_frame();
    return tree.counters();
  }

  std::uint32_t attr(const char* name) const { return static_cast<std::uint32_t>(grammar->program.find_attribute(name)); }
  FieldId field(const char* name) const { return static_cast<FieldId>(grammar->program.find_field(name)); }
  double num(NodeId n, const char* name) const { return tree.field(n, field(name)).number; }
};

/// Builds a random detached subtree of `size` nodes under a fresh root.
inline NodeId random_subtree(Session& s, std::mt19937_64& rng, std::size_t size) {
  std::vector<NodeId> nodes{s.make()};
  while (nodes.size() < size) {
    NodeId parent = nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)];
    nodes.push_back(s.make(parent));
  }
  return nodes.front();
}

}  // namespace testing
