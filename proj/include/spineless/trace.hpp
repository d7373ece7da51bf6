#pragma once

// Frame traces: an initial tree followed by frames of edits, stored as JSON
// lines. Also the synthetic workload generators and the replay driver that
// measures each frame and can check it against from-scratch evaluation.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spineless/counters.hpp"
#include "spineless/engine.hpp"
#include "spineless/invalidate.hpp"

namespace spineless {

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A value as written in a trace; `type` comes from the trace header.
struct TraceValue {
  ValueType type = ValueType::Number;
  double number = 0.0;  // numbers, bools (0/1) and length magnitudes
  bool percent = false;
  std::string text;

  static TraceValue of_number(double n) { return {ValueType::Number, n, false, {}}; }
  static TraceValue of_bool(bool b) { return {ValueType::Bool, b ? 1.0 : 0.0, false, {}}; }
  static TraceValue of_string(std::string s) { return {ValueType::String, 0.0, false, std::move(s)}; }
  static TraceValue of_length(double n, bool percent) { return {ValueType::Length, n, percent, {}}; }

  bool operator==(const TraceValue&) const = default;
};

using NamedValues = std::vector<std::pair<std::string, TraceValue>>;

/// A subtree to create; ids are chosen by the trace and never reused.
struct TreeLiteral {
  std::uint64_t id = 0;
  NamedValues attributes;
  NamedValues properties;
  std::vector<TreeLiteral> children;

  std::size_t size() const;
  bool operator==(const TreeLiteral&) const = default;
};

struct Command {
  enum class Kind { Insert, Remove, SetAttribute, SetProperty };

  Kind kind = Kind::SetAttribute;
  std::uint64_t node = 0;  // the parent for Insert
  std::optional<std::uint64_t> after;  // Insert: sibling to follow; none means first
  std::string name;
  TraceValue value;
  TreeLiteral tree;  // Insert

  bool operator==(const Command&) const = default;
};

struct Frame {
  std::vector<Command> commands;
  bool operator==(const Frame&) const = default;
};

struct Trace {
  std::string program;  // informational name of the intended program
  std::vector<std::pair<std::string, ValueType>> attributes;
  std::vector<std::pair<std::string, ValueType>> properties;
  TreeLiteral initial;
  std::vector<Frame> frames;

  bool operator==(const Trace&) const = default;
};

/// Parses and validates the JSON-lines form. Every command must name live
/// nodes and declared attributes, and each frame ends with a frame marker.
Trace parse_trace(std::istream& in);
Trace parse_trace_text(std::string_view text);
void write_trace(std::ostream& out, const Trace& trace);
std::string trace_text(const Trace& trace);

/// Throws TraceError when the header disagrees with the program's
/// declarations (missing name or different type).
void check_schema(const Trace& trace, const Program& program);

enum class WorkloadKind { Typing, Hover, Animation, LinkedFile, LazyLoad, Removal, Resize, Mixed };

inline constexpr WorkloadKind kAllWorkloads[] = {
    WorkloadKind::Typing,  WorkloadKind::Hover,   WorkloadKind::Animation, WorkloadKind::LinkedFile,
    WorkloadKind::LazyLoad, WorkloadKind::Removal, WorkloadKind::Resize,    WorkloadKind::Mixed,
};

const char* to_string(WorkloadKind kind);
std::optional<WorkloadKind> parse_workload(std::string_view name);

struct TreeShape {
  std::size_t nodes = 842;
  std::size_t fanout = 16;
  std::size_t depth = 18;  // edges from the root to the deepest node
};

struct GenerateOptions {
  WorkloadKind kind = WorkloadKind::Typing;
  TreeShape shape;
  std::uint64_t seed = 1;
  std::size_t frames = 40;
  std::size_t max_insert = 787;  // largest lazy-loaded subtree
  std::string program;  // name recorded in the header
};

/// Random tree with exactly `shape.nodes` nodes, no node with more than
/// `shape.fanout` children and a deepest node at exactly `shape.depth`.
/// Ids count up from `first_id` in creation order, root-to-deepest spine
/// first. Throws std::invalid_argument for an infeasible shape.
TreeLiteral generate_tree(const TreeShape& shape, std::uint64_t seed, std::uint64_t first_id = 0);

/// Deterministic in (program, options). The generators follow the bundled
/// programs' conventions: a root `viewport_width` attribute is what a resize
/// changes, a string `display` property is what hover toggles, and other
/// number attributes are content sizes.
Trace generate_trace(const Program& program, const GenerateOptions& options);

struct ReplayConfig {
  Algorithm algorithm = Algorithm::Spineless;
  bool from_scratch = false;  // ignore `algorithm`; evaluate everything each frame
  TraversalOptions traversal;
  bool verify = false;
};

std::string describe(const ReplayConfig& config);
/// "naive", "ddb", "spineless" or "oracle".
std::optional<ReplayConfig> parse_engine(std::string_view name);

struct FrameReport {
  std::size_t index = 0;  // 0 is the initial layout
  std::size_t commands = 0;
  std::size_t live_nodes = 0;
  FrameCounters counters;
};

struct Mismatch {
  std::size_t frame = 0;
  std::uint64_t node = 0;  // trace id
  std::string field;
  std::string expected;
  std::string actual;
};

std::string to_string(const Mismatch& m);

struct Report {
  std::string engine;
  std::vector<FrameReport> frames;
  std::optional<Mismatch> mismatch;
  bool verified = false;
};

class ReplayError : public std::runtime_error {
 public:
  ReplayError(std::size_t frame, const std::string& message);
  std::size_t frame() const { return frame_; }

 private:
  std::size_t frame_;
};

/// Applies a trace frame by frame to one tree. Frame time covers applying
/// the commands plus cleaning; evaluate_ticks is the part spent computing
/// field values and overhead_ticks is the rest.
class Replayer {
 public:
  Replayer(const Trace& trace, std::shared_ptr<const CompiledGrammar> grammar, ReplayConfig config);
  ~Replayer();

  FrameReport initial();
  FrameReport frame(std::size_t index, const Frame& frame);
  /// Differences from a from-scratch evaluation of the current tree.
  std::optional<Mismatch> verify(std::size_t index) const;

  const LayoutTree& tree() const { return tree_; }
  std::string dump() const;

 private:
  NodeId build(const TreeLiteral& literal);
  void apply(const Command& c);
  NodeId lookup(std::uint64_t id) const;
  Value convert(const TraceValue& v);
  FrameReport finish(std::size_t index, std::size_t commands, std::uint64_t ticks);

  const Trace& trace_;
  std::shared_ptr<const CompiledGrammar> grammar_;
  ReplayConfig config_;
  RecomputeProgram program_;
  LayoutTree tree_;
  std::unique_ptr<Traversal> traversal_;
  std::vector<std::int64_t> attribute_index_;
  std::vector<std::int64_t> property_index_;
};

/// Runs the whole trace. In verify mode it stops at the first frame whose
/// fields differ from the oracle and records the difference.
Report replay(const Trace& trace, std::shared_ptr<const CompiledGrammar> grammar, const ReplayConfig& config);

/// Geometric mean of (x + 1) over the frames, minus one, so empty frames
/// count as zero rather than vanishing.
double shifted_geomean(const std::vector<double>& values);

struct ReportSummary {
  FrameCounters totals;
  std::vector<std::pair<std::string, double>> geomeans;
};

ReportSummary summarize(const Report& report);
void write_csv(std::ostream& out, const Report& report);
void write_summary_json(std::ostream& out, const Report& report);

/// Per-frame metrics of several engines over one trace.
struct Comparison {
  std::vector<Report> reports;  // naive, ddb, spineless
};

Comparison compare_engines(const Trace& trace, std::shared_ptr<const CompiledGrammar> grammar,
                           const TraversalOptions& options, bool verify);
/// Columns per engine for nodes_accessed, overhead_ticks and om_creates,
/// then spineless/ddb ratios of (x + 1).
void write_comparison_csv(std::ostream& out, const Comparison& c);
void write_comparison_json(std::ostream& out, const Comparison& c);

}  // namespace spineless
