#include <doctest.h>

#include <cstring>
#include <sstream>

#include "spineless/trace.hpp"
#include "support.hpp"

using namespace testing;

namespace {

const char* kHeader = R"({"format":"mgtrace","version":1,"program":"paragraph","attributes":{"height":"number"},"properties":{}})";

std::string with_header(const std::string& body) { return std::string(kHeader) + "\n" + body; }

std::size_t max_depth(const TreeLiteral& t) {
  std::size_t d = 0;
  for (const auto& c : t.children) d = std::max(d, 1 + max_depth(c));
  return d;
}

std::size_t max_fanout(const TreeLiteral& t) {
  std::size_t f = t.children.size();
  for (const auto& c : t.children) f = std::max(f, max_fanout(c));
  return f;
}

Trace small(const CompiledGrammar& g, WorkloadKind kind, std::uint64_t seed, std::size_t frames = 12) {
  GenerateOptions o;
  o.kind = kind;
  o.seed = seed;
  o.frames = frames;
  o.shape = {200, 8, 10};
  o.max_insert = 120;
  return generate_trace(g.program, o);
}

FrameCounters without_ticks(FrameCounters c) {
  c.overhead_ticks = c.evaluate_ticks = 0;
  return c;
}

bool same(const FrameCounters& a, const FrameCounters& b) {
  FrameCounters x = without_ticks(a), y = without_ticks(b);
  return std::memcmp(&x, &y, sizeof x) == 0;
}

}  // namespace

TEST_CASE("minimal trace: one frame setting one attribute") {
  Trace t = parse_trace_text(with_header(R"({"op":"init","tree":{"id":1,"children":[{"id":2}]}}
{"op":"set_attr","node":2,"name":"height","value":12}
{"op":"frame"}
)"));
  REQUIRE(t.frames.size() == 1);
  REQUIRE(t.frames[0].commands.size() == 1);
  const Command& c = t.frames[0].commands[0];
  CHECK(c.kind == Command::Kind::SetAttribute);
  CHECK(c.node == 2);
  CHECK(c.value == TraceValue::of_number(12));
  CHECK(t.initial.size() == 2);
}

TEST_CASE("commands on removed nodes fail at load time with their line") {
  std::string text = with_header(R"({"op":"init","tree":{"id":1,"children":[{"id":2,"children":[{"id":3}]}]}}
{"op":"remove","node":2}
{"op":"frame"}
{"op":"set_attr","node":3,"name":"height","value":1}
{"op":"frame"}
)");
  try {
    parse_trace_text(text);
    FAIL("expected a TraceError");
  } catch (const TraceError& e) {
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("removed") != std::string::npos);
  }
}

TEST_CASE("load-time validation") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_trace_text(text);
    } catch (const TraceError& e) {
      return e.line();
    }
    return 0;
  };
  const std::string init = R"({"op":"init","tree":{"id":1,"children":[{"id":2}]}})";
  CHECK(line_of(with_header(init + "\n{\"op\":\n")) == 3);
  CHECK(line_of(with_header(init + "\n{\"op\":\"remove\",\"node\":9}\n{\"op\":\"frame\"}\n")) == 3);
  CHECK(line_of(with_header(init + "\n{\"op\":\"remove\",\"node\":1}\n{\"op\":\"frame\"}\n")) == 3);
  CHECK(line_of(with_header(init + "\n{\"op\":\"insert\",\"parent\":1,\"tree\":{\"id\":2}}\n{\"op\":\"frame\"}\n")) == 3);
  CHECK(line_of(with_header(init + "\n{\"op\":\"insert\",\"parent\":2,\"after\":1,\"tree\":{\"id\":5}}\n{\"op\":\"frame\"}\n")) == 3);
  CHECK(line_of(with_header(init + "\n{\"op\":\"set_attr\",\"node\":2,\"name\":\"width\",\"value\":1}\n{\"op\":\"frame\"}\n")) == 3);
  CHECK(line_of(with_header(init + "\n{\"op\":\"set_attr\",\"node\":2,\"name\":\"height\",\"value\":\"x\"}\n{\"op\":\"frame\"}\n")) == 3);
  CHECK(line_of(with_header(init + "\n{\"op\":\"set_attr\",\"node\":2,\"name\":\"height\",\"value\":3}\n")) == 3);
  CHECK(line_of(with_header("{\"op\":\"frame\"}\n")) == 2);
  CHECK(line_of("{\"format\":\"other\"}\n") == 1);
  // Removed ids stay taken.
  CHECK(line_of(with_header(init + "\n{\"op\":\"remove\",\"node\":2}\n{\"op\":\"insert\",\"parent\":1,\"tree\":{\"id\":2}}\n{\"op\":\"frame\"}\n")) == 4);
}

TEST_CASE("lengths, strings and bools read and write in their trace form") {
  std::string text = R"({"format":"mgtrace","version":1,"program":"x","attributes":{"on":"bool"},"properties":{"w":"length","d":"string"}}
{"op":"init","tree":{"id":0,"attrs":{"on":true},"props":{"w":"50%","d":"none"}}}
{"op":"set_prop","node":0,"name":"w","value":"12.5px"}
{"op":"set_prop","node":0,"name":"w","value":7}
{"op":"frame"}
)";
  Trace t = parse_trace_text(text);
  CHECK(t.initial.attributes[0].second == TraceValue::of_bool(true));
  CHECK(t.initial.properties[0].second == TraceValue::of_length(50, true));
  CHECK(t.initial.properties[1].second == TraceValue::of_string("none"));
  CHECK(t.frames[0].commands[0].value == TraceValue::of_length(12.5, false));
  CHECK(t.frames[0].commands[1].value == TraceValue::of_length(7, false));
  CHECK(parse_trace_text(trace_text(t)) == t);
  CHECK(trace_text(t).find(R"("w":"50%")") != std::string::npos);
}

TEST_CASE("the header must agree with the program") {
  auto g = bundled("paragraph.mg");
  Trace t = parse_trace_text(with_header(R"({"op":"init","tree":{"id":1}}
)"));
  CHECK_NOTHROW(check_schema(t, g->program));
  t.attributes[0].second = ValueType::Length;
  CHECK_THROWS_AS(check_schema(t, g->program), TraceError);
  t.attributes[0] = {"weight", ValueType::Number};
  CHECK_THROWS_AS(check_schema(t, g->program), TraceError);
  CHECK_THROWS_AS(Replayer(t, g, {}), TraceError);
}

TEST_CASE("generated tree matches the requested profile") {
  TreeLiteral t = generate_tree({842, 16, 18}, 7);
  CHECK(t.size() == 842);
  CHECK(max_depth(t) == 18);
  CHECK(max_fanout(t) <= 16);
  CHECK(generate_tree({842, 16, 18}, 7) == t);
  CHECK_FALSE(generate_tree({842, 16, 18}, 8) == t);

  CHECK(generate_tree({1, 0, 0}, 1).size() == 1);
  CHECK(max_depth(generate_tree({5, 1, 4}, 1)) == 4);
  CHECK_THROWS_AS(generate_tree({5, 1, 5}, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_tree({6, 1, 4}, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_tree({8, 2, 2}, 1), std::invalid_argument);
  CHECK(generate_tree({7, 2, 2}, 1).size() == 7);
}

TEST_CASE("generators are deterministic and round-trip through text") {
  for (const char* name : {"paragraph.mg", "block.mg"}) {
    auto g = bundled(name);
    for (WorkloadKind k : kAllWorkloads) {
      CAPTURE(name);
      CAPTURE(to_string(k));
      Trace a = small(*g, k, 3);
      CHECK(a == small(*g, k, 3));
      CHECK(a.frames.size() == 12);
      CHECK(parse_trace_text(trace_text(a)) == a);
      CHECK_NOTHROW(check_schema(a, g->program));
    }
  }
}

TEST_CASE("workload names") {
  for (WorkloadKind k : kAllWorkloads) CHECK(parse_workload(to_string(k)) == k);
  CHECK_FALSE(parse_workload("scroll").has_value());
}

TEST_CASE("lazy-load inserts subtrees of up to several hundred nodes") {
  auto g = bundled("block.mg");
  GenerateOptions o;
  o.kind = WorkloadKind::LazyLoad;
  o.frames = 20;
  Trace t = generate_trace(g->program, o);
  std::size_t largest = 0;
  for (const auto& f : t.frames) {
    for (const auto& c : f.commands) {
      if (c.kind == Command::Kind::Insert) largest = std::max(largest, c.tree.size());
    }
  }
  CHECK(largest >= 200);
  CHECK(largest <= 787);
}

TEST_CASE("every engine matches the oracle on every workload") {
  for (const char* name : {"paragraph.mg", "block.mg"}) {
    auto g = bundled(name);
    for (WorkloadKind k : kAllWorkloads) {
      Trace t = small(*g, k, 11);
      for (const char* engine : {"naive", "ddb", "spineless", "oracle"}) {
        CAPTURE(name);
        CAPTURE(to_string(k));
        CAPTURE(engine);
        ReplayConfig c = *parse_engine(engine);
        c.verify = true;
        Report r = replay(t, g, c);
        CHECK_FALSE(r.mismatch.has_value());
        CHECK(r.frames.size() == t.frames.size() + 1);
        for (const auto& f : r.frames) {
          CHECK(f.counters.duplicate_recomputes == 0);
          CHECK(f.counters.timestamp_violations == 0);
          CHECK(f.counters.deleted_recomputes == 0);
        }
      }
    }
  }
}

TEST_CASE("a corrupted field is reported with its frame, node and name") {
  auto g = bundled("paragraph.mg");
  Trace t = small(*g, WorkloadKind::Typing, 2, 3);
  Replayer r(t, g, {});
  r.initial();
  CHECK_FALSE(r.verify(0).has_value());
  auto& tree = const_cast<LayoutTree&>(r.tree());
  NodeId n = tree.find(5);
  FieldId h = static_cast<FieldId>(g->program.find_field("H"));
  tree.fields().values[tree.fields().slot(n, h)].number += 1;
  auto m = r.verify(0);
  REQUIRE(m.has_value());
  CHECK(m->node == 5);
  CHECK(m->field == "H");
  CHECK(to_string(*m).find("frame 0: node 5 field H") == 0);
}

TEST_CASE("runtime errors carry the frame index") {
  auto g = compile_grammar(R"(
attribute a : number = 0;
def A() { pre: self.x = if self.attribute[a] > 0 then parent.x else 0; recurse; }
schedule A;)");
  Trace t = parse_trace_text(R"({"format":"mgtrace","version":1,"program":"p","attributes":{"a":"number"},"properties":{}}
{"op":"init","tree":{"id":0}}
{"op":"frame"}
{"op":"set_attr","node":0,"name":"a","value":1}
{"op":"frame"}
)");
  try {
    replay(t, g, {});
    FAIL("expected a ReplayError");
  } catch (const ReplayError& e) {
    CHECK(e.frame() == 2);
  }
}

TEST_CASE("replay counters are deterministic") {
  auto g = bundled("block.mg");
  Trace t = small(*g, WorkloadKind::Mixed, 5);
  for (Algorithm a : {Algorithm::Naive, Algorithm::DoubleDirtyBit, Algorithm::Spineless}) {
    ReplayConfig c;
    c.algorithm = a;
    Replayer x(t, g, c), y(t, g, c);
    CHECK(same(x.initial().counters, y.initial().counters));
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
      CHECK(same(x.frame(i + 1, t.frames[i]).counters, y.frame(i + 1, t.frames[i]).counters));
    }
    CHECK(x.dump() == y.dump());
  }
}

TEST_CASE("typing on a deep leaf: spineless touches fewer nodes than ddb") {
  auto g = bundled("paragraph.mg");
  GenerateOptions o;
  o.kind = WorkloadKind::Typing;
  o.frames = 30;
  Trace t = generate_trace(g->program, o);
  ReplayConfig ddb, sp;
  ddb.algorithm = Algorithm::DoubleDirtyBit;
  Report a = replay(t, g, ddb), b = replay(t, g, sp);
  for (std::size_t i = 1; i < a.frames.size(); ++i) {
    CHECK(b.frames[i].counters.nodes_accessed < a.frames[i].counters.nodes_accessed);
    CHECK(b.frames[i].counters.recomputed_bits == a.frames[i].counters.recomputed_bits);
  }
}

TEST_CASE("lazy-load creates one timestamp per inserted bit plus one per pass") {
  for (const char* name : {"paragraph.mg", "block.mg"}) {
    auto g = bundled(name);
    Trace t = small(*g, WorkloadKind::LazyLoad, 4);
    ReplayConfig ddb, sp;
    ddb.algorithm = Algorithm::DoubleDirtyBit;
    Report a = replay(t, g, ddb), b = replay(t, g, sp);
    std::uint64_t bits = g->layout.bit_count(), passes = g->layout.pass_count;
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
      std::uint64_t expected = 0;
      for (const auto& c : t.frames[i].commands) {
        if (c.kind == Command::Kind::Insert) expected += c.tree.size() * bits + passes;
      }
      CHECK(b.frames[i + 1].counters.om_creates == expected);
      CHECK(a.frames[i + 1].counters.om_creates == 0);
    }
  }
}

TEST_CASE("evaluation time is a part of frame time") {
  auto g = bundled("block.mg");
  Trace t = small(*g, WorkloadKind::Resize, 9);
  Report r = replay(t, g, {});
  std::uint64_t eval = 0;
  for (const auto& f : r.frames) eval += f.counters.evaluate_ticks;
  CHECK(eval > 0);
  ReportSummary s = summarize(r);
  CHECK(s.totals.evaluate_ticks == eval);
}

TEST_CASE("csv has one row per frame") {
  auto g = bundled("paragraph.mg");
  Trace t = small(*g, WorkloadKind::Typing, 1);
  ReplayConfig c;
  c.algorithm = Algorithm::DoubleDirtyBit;
  Report r = replay(t, g, c);
  std::ostringstream os;
  write_csv(os, r);
  std::istringstream in(os.str());
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  CHECK(line.rfind("frame,commands,live_nodes,recomputed_bits", 0) == 0);
  while (std::getline(in, line)) ++rows;
  CHECK(rows == t.frames.size() + 1);
  std::ostringstream js;
  write_summary_json(js, r);
  CHECK(js.str().find("\"engine\": \"ddb\"") != std::string::npos);
}

TEST_CASE("shifted geometric mean") {
  CHECK(shifted_geomean({}) == 0.0);
  CHECK(shifted_geomean({0, 0}) == doctest::Approx(0.0));
  CHECK(shifted_geomean({3, 15}) == doctest::Approx(7.0));
}

TEST_CASE("comparison ratios recompute from the per-engine columns") {
  auto g = bundled("paragraph.mg");
  Trace t = small(*g, WorkloadKind::LazyLoad, 6);
  Comparison c = compare_engines(t, g, {}, false);
  REQUIRE(c.reports.size() == 3);
  std::ostringstream os;
  write_comparison_csv(os, c);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> head;
  {
    std::istringstream h(line);
    for (std::string cell; std::getline(h, cell, ',');) head.push_back(cell);
  }
  auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(head.begin(), head.end(), name) - head.begin());
  };
  std::size_t rows = 0;
  bool spineless_creates = false;
  while (std::getline(in, line)) {
    std::vector<double> cells;
    std::istringstream l(line);
    for (std::string cell; std::getline(l, cell, ',');) cells.push_back(std::stod(cell));
    for (const char* m : {"nodes_accessed", "overhead_ticks", "om_creates"}) {
      double s = cells[col(std::string("spineless_") + m)], d = cells[col(std::string("ddb_") + m)];
      CHECK(cells[col(std::string("spineless_vs_ddb_") + m)] == doctest::Approx((s + 1) / (d + 1)));
    }
    CHECK(cells[col("ddb_om_creates")] == 0);
    if (rows > 0 && cells[col("spineless_om_creates")] > 0) spineless_creates = true;
    ++rows;
  }
  CHECK(rows == t.frames.size() + 1);
  CHECK(spineless_creates);
}
