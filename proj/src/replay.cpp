#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "spineless/trace.hpp"

namespace spineless {

namespace {

using Clock = std::chrono::steady_clock;

struct CounterColumn {
  const char* name;
  std::uint64_t FrameCounters::*member;
};

constexpr CounterColumn kColumns[] = {
    {"recomputed_bits", &FrameCounters::recomputed_bits},
    {"dirty_calls", &FrameCounters::dirty_calls},
    {"heap_pushes", &FrameCounters::heap_pushes},
    {"heap_pops", &FrameCounters::heap_pops},
    {"heap_max_len", &FrameCounters::heap_max_len},
    {"nodes_accessed", &FrameCounters::nodes_accessed},
    {"aux_accesses", &FrameCounters::aux_accesses},
    {"om_creates", &FrameCounters::om_creates},
    {"om_rebalances", &FrameCounters::om_rebalances},
    {"overhead_ticks", &FrameCounters::overhead_ticks},
    {"evaluate_ticks", &FrameCounters::evaluate_ticks},
    {"duplicate_recomputes", &FrameCounters::duplicate_recomputes},
    {"timestamp_violations", &FrameCounters::timestamp_violations},
    {"deleted_recomputes", &FrameCounters::deleted_recomputes},
    {"deleted_skips", &FrameCounters::deleted_skips},
};

constexpr const char* kGeomeanMetrics[] = {"recomputed_bits", "nodes_accessed", "aux_accesses", "heap_max_len",
                                           "om_creates", "overhead_ticks", "evaluate_ticks"};

std::uint64_t FrameCounters::*member_of(std::string_view name) {
  for (const auto& c : kColumns) {
    if (name == c.name) return c.member;
  }
  return nullptr;
}

std::vector<double> series(const Report& r, std::uint64_t FrameCounters::*m) {
  std::vector<double> out;
  for (const auto& f : r.frames) {
    if (f.index > 0) out.push_back(static_cast<double>(f.counters.*m));
  }
  return out;
}

double tick_ns() {
  return 1e9 * static_cast<double>(Clock::period::num) / static_cast<double>(Clock::period::den);
}

}  // namespace

ReplayError::ReplayError(std::size_t frame, const std::string& message)
    : std::runtime_error("frame " + std::to_string(frame) + ": " + message), frame_(frame) {}

std::string describe(const ReplayConfig& config) {
  return config.from_scratch ? "oracle" : to_string(config.algorithm);
}

std::optional<ReplayConfig> parse_engine(std::string_view name) {
  ReplayConfig c;
  if (name == "oracle") {
    c.from_scratch = true;
    return c;
  }
  auto a = parse_algorithm(name);
  if (!a) return std::nullopt;
  c.algorithm = *a;
  return c;
}

std::string to_string(const Mismatch& m) {
  return "frame " + std::to_string(m.frame) + ": node " + std::to_string(m.node) + " field " + m.field + " is " +
         m.actual + ", expected " + m.expected;
}

Replayer::Replayer(const Trace& trace, std::shared_ptr<const CompiledGrammar> grammar, ReplayConfig config)
    : trace_(trace), grammar_(grammar), config_(config), program_(grammar), tree_(grammar) {
  check_schema(trace, grammar->program);
  if (!config.from_scratch) traversal_ = make_traversal(config.algorithm, tree_, program_, config.traversal);
}

Replayer::~Replayer() = default;

Value Replayer::convert(const TraceValue& v) {
  switch (v.type) {
    case ValueType::Number: return Value::of_number(v.number);
    case ValueType::Bool: return Value::of_bool(v.number != 0.0);
    case ValueType::String: return Value::of_string(tree_.strings().intern(v.text));
    case ValueType::Length: return Value::of_length(v.number, v.percent);
    case ValueType::Unknown: break;
  }
  return {};
}

NodeId Replayer::build(const TreeLiteral& literal) {
  const Program& p = grammar_->program;
  NodeId n = tree_.create_node(literal.id);
  for (const auto& [name, v] : literal.attributes) {
    tree_.set_attribute(n, static_cast<std::uint32_t>(p.find_attribute(name)), convert(v));
  }
  for (const auto& [name, v] : literal.properties) {
    tree_.set_property(n, static_cast<std::uint32_t>(p.find_property(name)), convert(v));
  }
  for (const auto& c : literal.children) tree_.append_detached(n, build(c));
  return n;
}

NodeId Replayer::lookup(std::uint64_t id) const {
  NodeId n = tree_.find(id);
  if (n == kNoNode || tree_.node(n).deleted) throw TreeError("node " + std::to_string(id) + " is not in the tree");
  return n;
}

void Replayer::apply(const Command& c) {
  const Program& p = grammar_->program;
  switch (c.kind) {
    case Command::Kind::Insert: {
      NodeId parent = lookup(c.node);
      NodeId after = c.after ? lookup(*c.after) : kNoNode;
      tree_.insert_subtree(parent, after, build(c.tree));
      break;
    }
    case Command::Kind::Remove: tree_.remove_subtree(lookup(c.node)); break;
    case Command::Kind::SetAttribute:
      tree_.set_attribute(lookup(c.node), static_cast<std::uint32_t>(p.find_attribute(c.name)), convert(c.value));
      break;
    case Command::Kind::SetProperty:
      tree_.set_property(lookup(c.node), static_cast<std::uint32_t>(p.find_property(c.name)), convert(c.value));
      break;
  }
}

FrameReport Replayer::finish(std::size_t index, std::size_t commands, std::uint64_t ticks) {
  tree_.finish_frame();
  FrameReport r;
  r.index = index;
  r.commands = commands;
  r.live_nodes = tree_.live_count();
  r.counters = tree_.counters();
  r.counters.overhead_ticks = ticks > r.counters.evaluate_ticks ? ticks - r.counters.evaluate_ticks : 0;
  return r;
}

FrameReport Replayer::initial() {
  try {
    tree_.set_root(build(trace_.initial));
    tree_.set_listener(traversal_.get());
    tree_.begin_frame();
    auto start = Clock::now();
    if (traversal_) {
      traversal_->on_first_layout();
      traversal_->clean();
    } else {
      tree_.fields() = evaluate_from_scratch(tree_);
      tree_.counters().evaluate_ticks = static_cast<std::uint64_t>((Clock::now() - start).count());
    }
    return finish(0, 0, static_cast<std::uint64_t>((Clock::now() - start).count()));
  } catch (const std::exception& e) {
    throw ReplayError(0, e.what());
  }
}

FrameReport Replayer::frame(std::size_t index, const Frame& frame) {
  try {
    tree_.begin_frame();
    auto start = Clock::now();
    for (const Command& c : frame.commands) apply(c);
    if (traversal_) {
      traversal_->clean();
    } else {
      auto eval = Clock::now();
      tree_.fields() = evaluate_from_scratch(tree_);
      tree_.counters().evaluate_ticks = static_cast<std::uint64_t>((Clock::now() - eval).count());
    }
    return finish(index, frame.commands.size(), static_cast<std::uint64_t>((Clock::now() - start).count()));
  } catch (const std::exception& e) {
    throw ReplayError(index, e.what());
  }
}

std::optional<Mismatch> Replayer::verify(std::size_t index) const {
  FieldStore expected;
  try {
    expected = evaluate_from_scratch(tree_);
  } catch (const std::exception& e) {
    throw ReplayError(index, e.what());
  }
  auto diff = compare_fields(tree_, expected);
  if (!diff) return std::nullopt;
  return Mismatch{index, diff->node_key, diff->field, diff->expected, diff->actual};
}

std::string Replayer::dump() const {
  std::ostringstream os;
  tree_.dump(os);
  return os.str();
}

Report replay(const Trace& trace, std::shared_ptr<const CompiledGrammar> grammar, const ReplayConfig& config) {
  Report report;
  report.engine = describe(config);
  report.verified = config.verify;
  Replayer r(trace, grammar, config);
  report.frames.push_back(r.initial());
  if (config.verify && (report.mismatch = r.verify(0))) return report;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    report.frames.push_back(r.frame(i + 1, trace.frames[i]));
    if (config.verify && (report.mismatch = r.verify(i + 1))) return report;
  }
  return report;
}

double shifted_geomean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0;
  for (double v : values) sum += std::log(v + 1.0);
  return std::exp(sum / static_cast<double>(values.size())) - 1.0;
}

ReportSummary summarize(const Report& report) {
  ReportSummary s;
  for (const auto& f : report.frames) {
    for (const auto& c : kColumns) {
      if (c.member == &FrameCounters::heap_max_len) {
        s.totals.*c.member = std::max(s.totals.*c.member, f.counters.*c.member);
      } else {
        s.totals.*c.member += f.counters.*c.member;
      }
    }
  }
  for (const char* m : kGeomeanMetrics) s.geomeans.emplace_back(m, shifted_geomean(series(report, member_of(m))));
  return s;
}

void write_csv(std::ostream& out, const Report& report) {
  out << "frame,commands,live_nodes";
  for (const auto& c : kColumns) out << ',' << c.name;
  out << '\n';
  for (const auto& f : report.frames) {
    out << f.index << ',' << f.commands << ',' << f.live_nodes;
    for (const auto& c : kColumns) out << ',' << f.counters.*c.member;
    out << '\n';
  }
}

namespace {

nlohmann::ordered_json summary_json(const Report& report) {
  ReportSummary s = summarize(report);
  nlohmann::ordered_json j;
  j["engine"] = report.engine;
  j["frames"] = report.frames.size();
  j["verified"] = report.verified;
  j["mismatch"] = report.mismatch ? nlohmann::ordered_json(to_string(*report.mismatch)) : nlohmann::ordered_json();
  j["tick_ns"] = tick_ns();
  for (const auto& c : kColumns) j["totals"][c.name] = s.totals.*c.member;
  for (const auto& [name, v] : s.geomeans) j["geomean"][name] = v;
  return j;
}

}  // namespace

void write_summary_json(std::ostream& out, const Report& report) { out << summary_json(report).dump(2) << '\n'; }

Comparison compare_engines(const Trace& trace, std::shared_ptr<const CompiledGrammar> grammar,
                           const TraversalOptions& options, bool verify) {
  Comparison c;
  for (Algorithm a : {Algorithm::Naive, Algorithm::DoubleDirtyBit, Algorithm::Spineless}) {
    ReplayConfig config;
    config.algorithm = a;
    config.traversal = options;
    config.verify = verify;
    c.reports.push_back(replay(trace, grammar, config));
  }
  return c;
}

namespace {

constexpr const char* kCompared[] = {"nodes_accessed", "overhead_ticks", "om_creates"};

const Report* find(const Comparison& c, const char* engine) {
  for (const auto& r : c.reports) {
    if (r.engine == engine) return &r;
  }
  return nullptr;
}

double ratio(std::uint64_t a, std::uint64_t b) { return (static_cast<double>(a) + 1.0) / (static_cast<double>(b) + 1.0); }

}  // namespace

void write_comparison_csv(std::ostream& out, const Comparison& c) {
  const Report* sp = find(c, "spineless");
  const Report* ddb = find(c, "ddb");
  out << "frame";
  for (const char* m : kCompared) {
    for (const auto& r : c.reports) out << ',' << r.engine << '_' << m;
  }
  if (sp && ddb) {
    for (const char* m : kCompared) out << ",spineless_vs_ddb_" << m;
  }
  out << '\n';
  std::size_t rows = c.reports.empty() ? 0 : c.reports.front().frames.size();
  for (const auto& r : c.reports) rows = std::min(rows, r.frames.size());
  for (std::size_t i = 0; i < rows; ++i) {
    out << i;
    for (const char* m : kCompared) {
      for (const auto& r : c.reports) out << ',' << r.frames[i].counters.*member_of(m);
    }
    if (sp && ddb) {
      for (const char* m : kCompared) {
        out << ',' << format_number(ratio(sp->frames[i].counters.*member_of(m), ddb->frames[i].counters.*member_of(m)));
      }
    }
    out << '\n';
  }
}

void write_comparison_json(std::ostream& out, const Comparison& c) {
  nlohmann::ordered_json j;
  for (const auto& r : c.reports) j["engines"].push_back(summary_json(r));
  const Report* sp = find(c, "spineless");
  const Report* ddb = find(c, "ddb");
  if (sp && ddb) {
    for (const char* m : kCompared) {
      double a = shifted_geomean(series(*sp, member_of(m)));
      double b = shifted_geomean(series(*ddb, member_of(m)));
      j["spineless_vs_ddb"][m] = (a + 1.0) / (b + 1.0);
    }
  }
  out << j.dump(2) << '\n';
}

}  // namespace spineless
