#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "spineless/trace.hpp"

namespace spineless {

namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
int between(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

void check_shape(const TreeShape& s) {
  if (s.nodes == 0) throw std::invalid_argument("shape needs at least one node");
  if (s.depth + 1 > s.nodes) throw std::invalid_argument("depth " + std::to_string(s.depth) + " needs more than " + std::to_string(s.nodes) + " nodes");
  if (s.nodes > 1 && s.fanout == 0) throw std::invalid_argument("fanout 0 allows only a single node");
  // Capacity of a complete fanout-ary tree of this depth.
  double cap = 0, level = 1;
  for (std::size_t d = 0; d <= s.depth && cap < static_cast<double>(s.nodes); ++d, level *= static_cast<double>(s.fanout)) cap += level;
  if (cap < static_cast<double>(s.nodes)) {
    throw std::invalid_argument(std::to_string(s.nodes) + " nodes do not fit in fanout " + std::to_string(s.fanout) +
                                " and depth " + std::to_string(s.depth));
  }
}

TreeLiteral to_literal(std::size_t n, const std::vector<std::vector<std::size_t>>& kids, std::uint64_t first_id) {
  TreeLiteral t;
  t.id = first_id + n;
  for (std::size_t c : kids[n]) t.children.push_back(to_literal(c, kids, first_id));
  return t;
}

constexpr double kElementShare = 0.3;

TreeLiteral random_tree(const TreeShape& shape, Rng& rng, std::uint64_t first_id) {
  check_shape(shape);
  std::vector<std::vector<std::size_t>> kids(shape.nodes);
  std::vector<std::size_t> depth(shape.nodes, 0);
  std::vector<std::size_t> open;  // may still take a child
  auto attach = [&](std::size_t child, std::size_t parent) {
    kids[parent].push_back(child);
    depth[child] = depth[parent] + 1;
  };
  for (std::size_t i = 1; i <= shape.depth; ++i) attach(i, i - 1);
  for (std::size_t i = 0; i <= shape.depth; ++i) {
    if (depth[i] < shape.depth && kids[i].size() < shape.fanout) open.push_back(i);
  }
  // Like a document: most new nodes are text leaves, some are elements
  // that may take children later.
  std::vector<std::size_t> text;  // leaves that could still become elements
  for (std::size_t i = shape.depth + 1; i < shape.nodes; ++i) {
    if (open.empty()) {
      std::size_t t = pick(rng, text.size());
      open.push_back(text[t]);
      text[t] = text.back();
      text.pop_back();
    }
    std::size_t slot = pick(rng, open.size());
    std::size_t parent = open[slot];
    attach(i, parent);
    if (kids[parent].size() >= shape.fanout) {
      open[slot] = open.back();
      open.pop_back();
    }
    if (depth[i] < shape.depth) (chance(rng, kElementShare) ? open : text).push_back(i);
  }
  for (auto& k : kids) std::shuffle(k.begin(), k.end(), rng);
  return to_literal(0, kids, first_id);
}

/// The generator's own copy of the tree, kept in step with the commands it
/// emits so every command names a live node.
struct Model {
  struct Entry {
    std::uint64_t parent = kNone;
    std::vector<std::uint64_t> children;
    std::size_t depth = 0;
    bool alive = false;
    bool hidden = false;
  };
  static constexpr std::uint64_t kNone = ~std::uint64_t{0};

  std::vector<Entry> nodes;  // indexed by id
  std::uint64_t root = 0;
  std::size_t live = 0;

  std::uint64_t next_id() const { return nodes.size(); }

  void add(const TreeLiteral& t, std::uint64_t parent, std::optional<std::uint64_t> after) {
    if (nodes.size() <= t.id) nodes.resize(t.id + 1);
    Entry& e = nodes[t.id];
    e.parent = parent;
    e.alive = true;
    ++live;
    if (parent != kNone) {
      auto& k = nodes[parent].children;
      k.insert(after ? std::find(k.begin(), k.end(), *after) + 1 : k.begin(), t.id);
      nodes[t.id].depth = nodes[parent].depth + 1;
    }
    std::optional<std::uint64_t> prev;
    for (const auto& c : t.children) {
      add(c, t.id, prev);
      prev = c.id;
    }
  }

  void remove(std::uint64_t id) {
    auto& k = nodes[nodes[id].parent].children;
    k.erase(std::find(k.begin(), k.end(), id));
    std::vector<std::uint64_t> stack{id};
    while (!stack.empty()) {
      std::uint64_t n = stack.back();
      stack.pop_back();
      nodes[n].alive = false;
      --live;
      for (auto c : nodes[n].children) stack.push_back(c);
    }
  }

  std::size_t subtree_size(std::uint64_t id) const {
    std::size_t n = 1;
    for (auto c : nodes[id].children) n += subtree_size(c);
    return n;
  }

  std::vector<std::uint64_t> alive(bool include_root = true) const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].alive && (include_root || i != root)) out.push_back(i);
    }
    return out;
  }
};

class Generator {
 public:
  Generator(const Program& program, const GenerateOptions& opts) : program_(program), opts_(opts), rng_(opts.seed) {
    for (const auto& a : program.attributes) {
      if (!a.declared) continue;
      trace_.attributes.emplace_back(a.name, a.type);
      if (a.type == ValueType::Number && a.name != "viewport_width") content_.push_back(a.name);
    }
    for (const auto& p : program.properties) {
      if (p.declared) trace_.properties.emplace_back(p.name, p.type);
    }
    has_viewport_ = has_attribute("viewport_width", ValueType::Number);
    has_display_ = has_property("display", ValueType::String);
    trace_.program = opts.program;
  }

  Trace run() {
    trace_.initial = random_tree(opts_.shape, rng_, 0);
    paint(trace_.initial, true);
    model_.add(trace_.initial, Model::kNone, std::nullopt);
    model_.root = trace_.initial.id;
    setup();
    for (std::size_t f = 0; f < opts_.frames; ++f) {
      frame_ = &trace_.frames.emplace_back();
      step(f);
    }
    return std::move(trace_);
  }

 private:
  bool has_attribute(const char* name, ValueType t) const {
    auto i = program_.find_attribute(name);
    return i >= 0 && program_.attributes[i].declared && program_.attributes[i].type == t;
  }
  bool has_property(const char* name, ValueType t) const {
    auto i = program_.find_property(name);
    return i >= 0 && program_.properties[i].declared && program_.properties[i].type == t;
  }

  double content_value(const std::string& name) {
    if (name == "content_width") return chance(rng_, 0.4) ? 0 : between(rng_, 10, 400);
    if (name == "content_height") return between(rng_, 0, 60);
    return between(rng_, 5, 40);
  }

  void paint(TreeLiteral& t, bool is_root) {
    for (const auto& name : content_) t.attributes.emplace_back(name, TraceValue::of_number(content_value(name)));
    if (is_root && has_viewport_) t.attributes.emplace_back("viewport_width", TraceValue::of_number(800));
    for (const auto& [name, type] : trace_.properties) {
      std::optional<TraceValue> v;
      if (name == "display" && type == ValueType::String && !is_root && chance(rng_, 0.03)) {
        v = TraceValue::of_string("none");
      } else if (name == "position" && type == ValueType::String && !is_root && chance(rng_, 0.06)) {
        v = TraceValue::of_string("absolute");
      } else if (name == "sizing" && type == ValueType::String && chance(rng_, 0.15)) {
        v = TraceValue::of_string("fixed");
      } else if (type == ValueType::Length && chance(rng_, 0.5)) {
        v = chance(rng_, 0.5) ? TraceValue::of_length(25.0 * between(rng_, 1, 4), true)
                              : TraceValue::of_length(between(rng_, 40, 300), false);
      } else if (name == "padding" && type == ValueType::Number && chance(rng_, 0.3)) {
        v = TraceValue::of_number(between(rng_, 1, 3) * 4);
      } else if ((name == "left" || name == "top") && type == ValueType::Number && chance(rng_, 0.1)) {
        v = TraceValue::of_number(between(rng_, 0, 50));
      } else if (type == ValueType::Bool && chance(rng_, 0.2)) {
        v = TraceValue::of_bool(true);
      }
      if (v) t.properties.emplace_back(name, *v);
    }
    for (auto& c : t.children) paint(c, false);
  }

  // A fresh subtree of about `size` nodes to hang at `depth`.
  TreeLiteral fresh_subtree(std::size_t size, std::size_t depth) {
    TreeShape s;
    s.nodes = std::max<std::size_t>(size, 1);
    s.fanout = std::max<std::size_t>(opts_.shape.fanout, 2);
    s.depth = std::min(s.nodes - 1, opts_.shape.depth > depth ? opts_.shape.depth - depth : 1);
    // Grow the depth until the nodes fit.
    for (;;) {
      try {
        check_shape(s);
        break;
      } catch (const std::invalid_argument&) {
        ++s.depth;
      }
    }
    TreeLiteral t = random_tree(s, rng_, model_.next_id());
    paint(t, false);
    return t;
  }

  void set_attr(std::uint64_t node, const std::string& name, TraceValue v) {
    Command c;
    c.kind = Command::Kind::SetAttribute;
    c.node = node;
    c.name = name;
    c.value = std::move(v);
    frame_->commands.push_back(std::move(c));
  }

  void set_prop(std::uint64_t node, const std::string& name, TraceValue v) {
    Command c;
    c.kind = Command::Kind::SetProperty;
    c.node = node;
    c.name = name;
    c.value = std::move(v);
    frame_->commands.push_back(std::move(c));
  }

  void insert(std::uint64_t parent, std::optional<std::uint64_t> after, TreeLiteral t) {
    model_.add(t, parent, after);
    Command c;
    c.kind = Command::Kind::Insert;
    c.node = parent;
    c.after = after;
    c.tree = std::move(t);
    frame_->commands.push_back(std::move(c));
  }

  void remove(std::uint64_t node) {
    model_.remove(node);
    Command c;
    c.kind = Command::Kind::Remove;
    c.node = node;
    frame_->commands.push_back(std::move(c));
  }

  void touch_content(std::uint64_t node) {
    if (content_.empty()) return;
    const std::string& name = content_[pick(rng_, content_.size())];
    set_attr(node, name, TraceValue::of_number(content_value(name)));
  }

  std::uint64_t deepest_leaf() const {
    std::uint64_t best = model_.root;
    for (auto id : model_.alive()) {
      const auto& e = model_.nodes[id];
      if (e.children.empty() && e.depth > model_.nodes[best].depth) best = id;
    }
    return best;
  }

  // Toggles a small subtree in and out of view.
  void hover(std::uint64_t node) {
    auto& e = model_.nodes[node];
    e.hidden = !e.hidden;
    if (has_display_) {
      set_prop(node, "display", TraceValue::of_string(e.hidden ? "none" : "block"));
    } else if (!content_.empty()) {
      set_attr(node, content_.front(), TraceValue::of_number(e.hidden ? 0 : 20));
    }
  }

  std::uint64_t hover_target() {
    std::vector<std::uint64_t> fits;
    for (auto id : model_.alive(false)) {
      std::size_t n = model_.subtree_size(id);
      if (n >= 2 && n <= 30) fits.push_back(id);
    }
    if (fits.empty()) {
      auto all = model_.alive();
      return all[pick(rng_, all.size())];
    }
    return fits[pick(rng_, fits.size())];
  }

  std::uint64_t deep_node() {
    auto all = model_.alive();
    std::size_t max_depth = 0;
    for (auto id : all) max_depth = std::max(max_depth, model_.nodes[id].depth);
    std::vector<std::uint64_t> deep;
    for (auto id : all) {
      if (model_.nodes[id].depth * 5 >= max_depth * 3) deep.push_back(id);
    }
    return deep[pick(rng_, deep.size())];
  }

  void lazy_load(std::size_t max_size) {
    std::size_t size = static_cast<std::size_t>(between(rng_, static_cast<int>(std::min<std::size_t>(20, max_size)),
                                                        static_cast<int>(max_size)));
    while (!placeholders_.empty() && !model_.nodes[placeholders_.back()].alive) placeholders_.pop_back();
    if (!placeholders_.empty()) {
      std::uint64_t p = placeholders_.back();
      placeholders_.pop_back();
      std::uint64_t parent = model_.nodes[p].parent;
      insert(parent, p, fresh_subtree(size, model_.nodes[p].depth));
      remove(p);
      return;
    }
    auto all = model_.alive();
    std::uint64_t parent = all[pick(rng_, all.size())];
    const auto& kids = model_.nodes[parent].children;
    std::optional<std::uint64_t> after;
    if (!kids.empty()) after = kids.back();
    insert(parent, after, fresh_subtree(size, model_.nodes[parent].depth + 1));
  }

  void remove_some() {
    auto all = model_.alive(false);
    if (all.empty()) return;
    std::size_t limit = std::max<std::size_t>(1, model_.live / 20);
    for (int tries = 0; tries < 32; ++tries) {
      std::uint64_t id = all[pick(rng_, all.size())];
      if (model_.subtree_size(id) <= limit) {
        remove(id);
        return;
      }
    }
  }

  void setup() {
    switch (opts_.kind) {
      case WorkloadKind::Typing: typing_ = deepest_leaf(); break;
      case WorkloadKind::Hover:
        for (int i = 0; i < 3; ++i) hovers_.push_back(hover_target());
        break;
      case WorkloadKind::Animation: {
        auto all = model_.alive(false);
        for (int i = 0, n = between(rng_, 1, 3); i < n && !all.empty(); ++i) animated_.push_back(all[pick(rng_, all.size())]);
        break;
      }
      case WorkloadKind::LazyLoad:
      case WorkloadKind::Mixed: {
        std::vector<std::uint64_t> leaves;
        for (auto id : model_.alive(false)) {
          if (model_.nodes[id].children.empty()) leaves.push_back(id);
        }
        std::shuffle(leaves.begin(), leaves.end(), rng_);
        leaves.resize(std::min(leaves.size(), opts_.frames));
        placeholders_ = leaves;
        break;
      }
      default: break;
    }
  }

  void step(std::size_t f) {
    switch (opts_.kind) {
      case WorkloadKind::Typing:
        // Some keystrokes leave the size as it was.
        if (last_typed_ && chance(rng_, 0.2)) {
          set_attr(typing_, last_typed_->name, last_typed_->value);
        } else if (!content_.empty()) {
          touch_content(typing_);
          last_typed_ = frame_->commands.back();
        }
        break;
      case WorkloadKind::Hover: hover(hovers_[f % hovers_.size()]); break;
      case WorkloadKind::Animation:
        for (std::size_t i = 0; i < animated_.size(); ++i) {
          double phase = static_cast<double>(f) * 0.4 + static_cast<double>(i);
          double v = std::round(30 + 20 * std::sin(phase));
          if (has_property("top", ValueType::Number)) set_prop(animated_[i], "top", TraceValue::of_number(v));
          if (has_property("left", ValueType::Number)) set_prop(animated_[i], "left", TraceValue::of_number(v / 2));
          if (!content_.empty()) set_attr(animated_[i], content_.back(), TraceValue::of_number(v));
        }
        break;
      case WorkloadKind::LinkedFile:
        for (int i = 0, n = between(rng_, 1, 4); i < n; ++i) touch_content(deep_node());
        if (has_property("padding", ValueType::Number) && chance(rng_, 0.3)) {
          set_prop(deep_node(), "padding", TraceValue::of_number(between(rng_, 0, 3) * 4));
        }
        break;
      case WorkloadKind::LazyLoad: lazy_load(opts_.max_insert); break;
      case WorkloadKind::Removal:
        for (int i = 0, n = between(rng_, 1, 2); i < n; ++i) remove_some();
        break;
      case WorkloadKind::Resize:
        if (has_viewport_) {
          set_attr(model_.root, "viewport_width", TraceValue::of_number(between(rng_, 32, 160) * 10));
        } else {
          touch_content(model_.root);
        }
        break;
      case WorkloadKind::Mixed: mixed(); break;
    }
  }

  void mixed() {
    for (int i = 0, n = between(rng_, 2, 4); i < n; ++i) {
      switch (between(rng_, 0, 5)) {
        case 0: touch_content(deepest_leaf()); break;
        case 1: hover(hover_target()); break;
        case 2: lazy_load(std::max<std::size_t>(1, opts_.max_insert / 4)); break;
        case 3: remove_some(); break;
        case 4: touch_content(deep_node()); break;
        case 5: {
          // A subtree that appears and disappears before layout runs.
          auto all = model_.alive();
          std::uint64_t parent = all[pick(rng_, all.size())];
          TreeLiteral t = fresh_subtree(static_cast<std::size_t>(between(rng_, 1, 30)), model_.nodes[parent].depth + 1);
          std::uint64_t id = t.id;
          const auto& kids = model_.nodes[parent].children;
          std::optional<std::uint64_t> after;
          if (!kids.empty()) after = kids[pick(rng_, kids.size())];
          insert(parent, after, std::move(t));
          remove(id);
          break;
        }
      }
    }
  }

  const Program& program_;
  GenerateOptions opts_;
  Rng rng_;
  Trace trace_;
  Model model_;
  Frame* frame_ = nullptr;
  std::vector<std::string> content_;
  bool has_viewport_ = false;
  bool has_display_ = false;

  std::uint64_t typing_ = 0;
  std::optional<Command> last_typed_;
  std::vector<std::uint64_t> hovers_;
  std::vector<std::uint64_t> animated_;
  std::vector<std::uint64_t> placeholders_;
};

}  // namespace

TreeLiteral generate_tree(const TreeShape& shape, std::uint64_t seed, std::uint64_t first_id) {
  Rng rng(seed);
  return random_tree(shape, rng, first_id);
}

Trace generate_trace(const Program& program, const GenerateOptions& options) {
  return Generator(program, options).run();
}

}  // namespace spineless
