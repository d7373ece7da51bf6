#include "spineless/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "spineless/trace.hpp"

namespace spineless {

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
void write_file(const std::string& path, F&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  body(out);
  if (!out) throw IoError("error writing " + path);
}

struct Toggles {
  bool no_compression = false;
  bool om_deletion = false;
  bool no_branchless = false;

  void add(CLI::App* app) {
    app->add_flag("--no-compression", no_compression, "Queue every dirty bit");
    app->add_flag("--om-deletion", om_deletion, "Erase timestamps of removed nodes");
    app->add_flag("--no-branchless", no_branchless, "Use the branchy timestamp compare");
  }

  TraversalOptions options() const {
    TraversalOptions o;
    o.queue_compression = !no_compression;
    o.om_deletion = om_deletion;
    o.branchless_compare = !no_branchless;
    return o;
  }
};

struct Shape {
  TreeShape shape;
  std::uint64_t seed = 1;
  std::size_t frames = 40;
  std::size_t max_insert = 787;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "Generator seed")->capture_default_str();
    app->add_option("--nodes", shape.nodes, "Initial tree size")->capture_default_str();
    app->add_option("--fanout", shape.fanout, "Most children per node")->capture_default_str();
    app->add_option("--depth", shape.depth, "Depth of the deepest node")->capture_default_str();
    app->add_option("--frames", frames, "Frames after the initial layout")->capture_default_str();
    app->add_option("--max-insert", max_insert, "Largest inserted subtree")->capture_default_str();
  }

  GenerateOptions options(WorkloadKind kind, const std::string& program) const {
    GenerateOptions o;
    o.kind = kind;
    o.shape = shape;
    o.seed = seed;
    o.frames = frames;
    o.max_insert = max_insert;
    o.program = program;
    return o;
  }
};

std::shared_ptr<const CompiledGrammar> load_program(const std::string& path) { return compile_grammar(read_file(path)); }

Trace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  try {
    return parse_trace(in);
  } catch (const TraceError& e) {
    throw TraceError(e.line(), path + ": " + e.what());
  }
}

std::string rule_target(const Program& p, const DirtyRule& r) {
  std::string s = std::string(to_string(r.direction)) + "." + p.fields[r.target_field].name;
  if (r.guard != Guard::None) s += std::string(" if ") + to_string(r.guard);
  return s;
}

void report_program(std::ostream& out, const std::string& path, const CompiledGrammar& g) {
  const Program& p = g.program;
  out << path << ": ok\n";
  out << p.fields.size() << " fields, " << g.layout.bit_count() << " dirty bits, " << g.dependencies.rule_count()
      << " dependency rules, " << g.dependencies.structural.size() << " structural rules\n";
  for (std::uint32_t pass = 0; pass < p.passes.size(); ++pass) {
    out << "pass " << p.passes[pass].name << '\n';
    for (BitId b : {DirtyBitLayout::pre_bit(pass), DirtyBitLayout::post_bit(pass)}) {
      out << (DirtyBitLayout::is_post(b) ? "  post bit " : "  pre  bit ") << b << ':';
      for (FieldId f : g.layout.bit_fields[b]) out << ' ' << p.fields[f].name << " : " << describe_type(p, p.fields[f].type);
      out << '\n';
    }
  }
  out << "rules\n";
  for (FieldId f = 0; f < p.fields.size(); ++f) {
    for (const auto& r : g.dependencies.on_field[f]) out << "  " << p.fields[f].name << " -> " << rule_target(p, r) << '\n';
  }
  for (std::size_t a = 0; a < p.attributes.size(); ++a) {
    for (const auto& r : g.dependencies.on_attribute[a]) {
      out << "  @" << p.attributes[a].name << " -> " << rule_target(p, r) << '\n';
    }
  }
  for (std::size_t i = 0; i < p.properties.size(); ++i) {
    for (const auto& r : g.dependencies.on_property[i]) {
      out << "  %" << p.properties[i].name << " -> " << rule_target(p, r) << '\n';
    }
  }
  for (const auto& r : g.dependencies.structural) {
    out << "  insert/remove -> " << to_string(r.direction) << " bit " << r.target_bit;
    if (r.guard != Guard::None) out << " if " << to_string(r.guard);
    out << '\n';
  }
}

void print_comparison(std::ostream& out, const Comparison& c) {
  out << std::left << std::setw(12) << "engine" << std::right << std::setw(16) << "nodes_accessed" << std::setw(16)
      << "aux_accesses" << std::setw(16) << "overhead_ticks" << std::setw(16) << "evaluate_ticks" << std::setw(12)
      << "om_creates" << '\n';
  auto geo = [](const ReportSummary& s, const char* name) {
    for (const auto& [n, v] : s.geomeans) {
      if (n == name) return v;
    }
    return 0.0;
  };
  std::vector<ReportSummary> sums;
  for (const auto& r : c.reports) {
    ReportSummary s = summarize(r);
    out << std::left << std::setw(12) << r.engine << std::right << std::fixed << std::setprecision(1);
    for (const char* m : {"nodes_accessed", "aux_accesses", "overhead_ticks", "evaluate_ticks"}) out << std::setw(16) << geo(s, m);
    out << std::setw(12) << geo(s, "om_creates") << '\n';
    sums.push_back(std::move(s));
  }
  if (sums.size() == 3) {
    out << "spineless/ddb" << std::setprecision(3);
    for (const char* m : {"nodes_accessed", "aux_accesses", "overhead_ticks", "evaluate_ticks"}) {
      out << std::setw(m == std::string("nodes_accessed") ? 15 : 16) << (geo(sums[2], m) + 1) / (geo(sums[1], m) + 1);
    }
    out << std::setw(12) << (geo(sums[2], "om_creates") + 1) / (geo(sums[1], "om_creates") + 1) << '\n';
  }
  out.unsetf(std::ios::floatfield);
  for (const auto& r : c.reports) {
    if (r.mismatch) out << r.engine << ": " << to_string(*r.mismatch) << '\n';
  }
}

bool any_mismatch(const Comparison& c) {
  for (const auto& r : c.reports) {
    if (r.mismatch) return true;
  }
  return false;
}

int run_check(const std::string& path, std::ostream& out) {
  auto g = load_program(path);
  report_program(out, path, *g);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Incremental layout with naive, double-dirty-bit and spineless invalidation", "spineless"};
  app.require_subcommand(1);

  std::string program_path, trace_path, output, csv_path, json_path, dump_path, algo = "spineless", kind;
  std::vector<std::string> kinds;
  bool verify = false;
  Toggles toggles;
  Shape shape;

  auto* check = app.add_subcommand("check", "Parse, type and analyze a layout program");
  check->add_option("program", program_path, "Program file")->required();

  auto* gen = app.add_subcommand("gen-trace", "Generate a synthetic trace");
  gen->add_option("--program", program_path, "Program the trace targets")->required();
  gen->add_option("--kind", kind, "Workload kind")->required();
  gen->add_option("-o,--output", output, "Trace file to write")->required();
  shape.add(gen);

  auto* run = app.add_subcommand("run", "Replay a trace with one engine");
  run->add_option("--program", program_path, "Program file")->required();
  run->add_option("--trace", trace_path, "Trace file")->required();
  run->add_option("--algo", algo, "naive, ddb, spineless or oracle")->capture_default_str();
  run->add_flag("--verify", verify, "Check every frame against from-scratch evaluation");
  run->add_option("--csv", csv_path, "Per-frame counters");
  run->add_option("--json", json_path, "Summary with geometric means");
  run->add_option("--dump", dump_path, "Final field dump");
  toggles.add(run);

  auto* cmp = app.add_subcommand("compare", "Replay a trace with every engine");
  cmp->add_option("--program", program_path, "Program file")->required();
  cmp->add_option("--trace", trace_path, "Trace file")->required();
  cmp->add_flag("--verify", verify, "Check every frame against from-scratch evaluation");
  cmp->add_option("--csv", csv_path, "Per-frame comparison");
  cmp->add_option("--json", json_path, "Per-engine summaries and ratios");
  toggles.add(cmp);

  auto* bench = app.add_subcommand("bench", "Generate and compare every workload kind");
  bench->add_option("--program", program_path, "Program file")->required();
  bench->add_option("--kinds", kinds, "Workload kinds (default: all)");
  bench->add_option("--csv", csv_path, "One row per kind and engine");
  bench->add_flag("--verify", verify, "Check every frame against from-scratch evaluation");
  shape.add(bench);
  toggles.add(bench);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*check) return run_check(program_path, out);

    if (*gen) {
      auto g = load_program(program_path);
      auto k = parse_workload(kind);
      if (!k) {
        err << "unknown workload kind " << kind << '\n';
        return kExitValidation;
      }
      std::string name = std::filesystem::path(program_path).stem().string();
      Trace t = generate_trace(g->program, shape.options(*k, name));
      write_file(output, [&](std::ostream& o) { write_trace(o, t); });
      out << "wrote " << output << ": " << t.frames.size() << " frames, " << t.initial.size() << " initial nodes\n";
      return kExitOk;
    }

    if (*run) {
      auto config = parse_engine(algo);
      if (!config) {
        err << "unknown algorithm " << algo << '\n';
        return kExitValidation;
      }
      config->traversal = toggles.options();
      config->verify = verify;
      auto g = load_program(program_path);
      Trace t = load_trace(trace_path);
      check_schema(t, g->program);
      Report r;
      r.engine = describe(*config);
      r.verified = verify;
      Replayer rp(t, g, *config);
      r.frames.push_back(rp.initial());
      if (verify) r.mismatch = rp.verify(0);
      for (std::size_t i = 0; i < t.frames.size() && !r.mismatch; ++i) {
        r.frames.push_back(rp.frame(i + 1, t.frames[i]));
        if (verify) r.mismatch = rp.verify(i + 1);
      }
      if (!csv_path.empty()) write_file(csv_path, [&](std::ostream& o) { write_csv(o, r); });
      if (!json_path.empty()) write_file(json_path, [&](std::ostream& o) { write_summary_json(o, r); });
      if (!dump_path.empty()) write_file(dump_path, [&](std::ostream& o) { o << rp.dump(); });
      if (r.mismatch) {
        err << "mismatch: " << to_string(*r.mismatch) << '\n';
        return kExitValidation;
      }
      ReportSummary s = summarize(r);
      out << r.engine << ": " << r.frames.size() << " frames" << (verify ? ", verified" : "") << ", "
          << s.totals.recomputed_bits << " recomputed bits, " << s.totals.nodes_accessed << " node accesses, max queue "
          << s.totals.heap_max_len << '\n';
      return kExitOk;
    }

    if (*cmp) {
      auto g = load_program(program_path);
      Trace t = load_trace(trace_path);
      Comparison c = compare_engines(t, g, toggles.options(), verify);
      if (!csv_path.empty()) write_file(csv_path, [&](std::ostream& o) { write_comparison_csv(o, c); });
      if (!json_path.empty()) write_file(json_path, [&](std::ostream& o) { write_comparison_json(o, c); });
      print_comparison(out, c);
      return any_mismatch(c) ? kExitValidation : kExitOk;
    }

    if (*bench) {
      auto g = load_program(program_path);
      std::vector<WorkloadKind> ks;
      if (kinds.empty()) ks.assign(std::begin(kAllWorkloads), std::end(kAllWorkloads));
      for (const auto& name : kinds) {
        auto k = parse_workload(name);
        if (!k) {
          err << "unknown workload kind " << name << '\n';
          return kExitValidation;
        }
        ks.push_back(*k);
      }
      std::string name = std::filesystem::path(program_path).stem().string();
      std::ostringstream rows;
      rows << "kind,engine,frames,recomputed_bits,nodes_accessed,aux_accesses,heap_max_len,om_creates,overhead_ticks,"
              "evaluate_ticks\n";
      bool bad = false;
      for (WorkloadKind k : ks) {
        Trace t = generate_trace(g->program, shape.options(k, name));
        Comparison c = compare_engines(t, g, toggles.options(), verify);
        out << "== " << to_string(k) << '\n';
        print_comparison(out, c);
        bad = bad || any_mismatch(c);
        for (const auto& r : c.reports) {
          rows << to_string(k) << ',' << r.engine << ',' << r.frames.size();
          for (const auto& [metric, v] : summarize(r).geomeans) rows << ',' << format_number(v);
          rows << '\n';
        }
      }
      if (!csv_path.empty()) write_file(csv_path, [&](std::ostream& o) { o << rows.str(); });
      return bad ? kExitValidation : kExitOk;
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const GrammarError& e) {
    err << program_path << ':' << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace spineless
