#include "spineless/trace.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace spineless {

using Json = nlohmann::ordered_json;

TraceError::TraceError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

std::size_t TreeLiteral::size() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.size();
  return n;
}

namespace {

std::optional<ValueType> parse_type(std::string_view s) {
  for (ValueType t : {ValueType::Number, ValueType::Bool, ValueType::String, ValueType::Length}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

using Schema = std::vector<std::pair<std::string, ValueType>>;

const ValueType* lookup(const Schema& schema, const std::string& name) {
  for (const auto& [n, t] : schema) {
    if (n == name) return &t;
  }
  return nullptr;
}

struct Reader {
  std::size_t line = 0;
  const Schema* attributes = nullptr;
  const Schema* properties = nullptr;

  [[noreturn]] void fail(const std::string& msg) const { throw TraceError(line, msg); }

  const Json& member(const Json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing \"") + key + "\"");
    return *it;
  }

  std::uint64_t id(const Json& j, const char* what) const {
    if (!j.is_number_unsigned()) fail(std::string(what) + " must be a non-negative integer");
    return j.get<std::uint64_t>();
  }

  TraceValue value(const Json& j, ValueType type, const std::string& name) const {
    auto bad = [&] { fail("value of " + name + " is not a " + to_string(type)); };
    switch (type) {
      case ValueType::Number:
        if (!j.is_number()) bad();
        return TraceValue::of_number(j.get<double>());
      case ValueType::Bool:
        if (!j.is_boolean()) bad();
        return TraceValue::of_bool(j.get<bool>());
      case ValueType::String:
        if (!j.is_string()) bad();
        return TraceValue::of_string(j.get<std::string>());
      case ValueType::Length: {
        if (j.is_number()) return TraceValue::of_length(j.get<double>(), false);
        if (!j.is_string()) bad();
        const std::string& s = j.get_ref<const std::string&>();
        double n = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        std::string_view unit(ptr, s.data() + s.size() - ptr);
        if (ec != std::errc{} || (unit != "px" && unit != "%")) bad();
        return TraceValue::of_length(n, unit == "%");
      }
      case ValueType::Unknown: break;
    }
    fail(name + " has no known type");
  }

  NamedValues values(const Json& obj, const Schema& schema, const char* kind) const {
    NamedValues out;
    if (!obj.is_object()) fail(std::string(kind) + " must be an object");
    for (const auto& [name, v] : obj.items()) {
      const ValueType* t = lookup(schema, name);
      if (!t) fail(std::string("undeclared ") + kind + " " + name);
      out.emplace_back(name, value(v, *t, name));
    }
    return out;
  }

  TreeLiteral tree(const Json& j) const {
    if (!j.is_object()) fail("tree must be an object");
    TreeLiteral t;
    t.id = id(member(j, "id"), "id");
    if (auto it = j.find("attrs"); it != j.end()) t.attributes = values(*it, *attributes, "attribute");
    if (auto it = j.find("props"); it != j.end()) t.properties = values(*it, *properties, "property");
    if (auto it = j.find("children"); it != j.end()) {
      if (!it->is_array()) fail("children must be an array");
      for (const auto& c : *it) t.children.push_back(tree(c));
    }
    return t;
  }
};

/// Which ids are live, and where, as the trace is read.
class Liveness {
 public:
  explicit Liveness(const Reader& r) : r_(r) {}

  void add(const TreeLiteral& t, std::uint64_t parent, std::optional<std::uint64_t> after) {
    if (!seen_.insert(t.id).second) r_.fail("node id " + std::to_string(t.id) + " is used twice");
    auto& kids = parent == kNone ? roots_ : nodes_[parent].children;
    auto pos = kids.begin();
    if (after) pos = std::find(kids.begin(), kids.end(), *after) + 1;
    kids.insert(pos, t.id);
    nodes_[t.id].parent = parent;
    std::optional<std::uint64_t> prev;
    for (const auto& c : t.children) {
      add(c, t.id, prev);
      prev = c.id;
    }
  }

  void require(std::uint64_t id) const {
    if (!nodes_.count(id)) {
      r_.fail("node " + std::to_string(id) + (seen_.count(id) ? " was removed" : " does not exist"));
    }
  }

  void require_child(std::uint64_t parent, std::uint64_t child) const {
    require(child);
    if (nodes_.at(child).parent != parent) {
      r_.fail("node " + std::to_string(child) + " is not a child of " + std::to_string(parent));
    }
  }

  void remove(std::uint64_t id) {
    require(id);
    std::uint64_t parent = nodes_.at(id).parent;
    if (parent == kNone) r_.fail("cannot remove the root");
    auto& kids = nodes_[parent].children;
    kids.erase(std::find(kids.begin(), kids.end(), id));
    drop(id);
  }

  static constexpr std::uint64_t kNone = ~std::uint64_t{0};

 private:
  void drop(std::uint64_t id) {
    std::vector<std::uint64_t> stack{id};
    while (!stack.empty()) {
      std::uint64_t n = stack.back();
      stack.pop_back();
      auto it = nodes_.find(n);
      for (auto c : it->second.children) stack.push_back(c);
      nodes_.erase(it);
    }
  }

  struct Entry {
    std::uint64_t parent = kNone;
    std::vector<std::uint64_t> children;
  };
  const Reader& r_;
  std::unordered_map<std::uint64_t, Entry> nodes_;
  std::unordered_set<std::uint64_t> seen_;
  std::vector<std::uint64_t> roots_;
};

Json value_json(const TraceValue& v) {
  switch (v.type) {
    case ValueType::Number:
      if (std::trunc(v.number) == v.number && std::abs(v.number) < 9.0e15) return static_cast<std::int64_t>(v.number);
      return v.number;
    case ValueType::Bool: return v.number != 0.0;
    case ValueType::String: return v.text;
    case ValueType::Length: return format_number(v.number) + (v.percent ? "%" : "px");
    case ValueType::Unknown: break;
  }
  return nullptr;
}

Json values_json(const NamedValues& vs) {
  Json o = Json::object();
  for (const auto& [name, v] : vs) o[name] = value_json(v);
  return o;
}

Json tree_json(const TreeLiteral& t) {
  Json o;
  o["id"] = t.id;
  if (!t.attributes.empty()) o["attrs"] = values_json(t.attributes);
  if (!t.properties.empty()) o["props"] = values_json(t.properties);
  if (!t.children.empty()) {
    Json kids = Json::array();
    for (const auto& c : t.children) kids.push_back(tree_json(c));
    o["children"] = std::move(kids);
  }
  return o;
}

Json schema_json(const Schema& s) {
  Json o = Json::object();
  for (const auto& [name, t] : s) o[name] = to_string(t);
  return o;
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace trace;
  Reader r;
  r.attributes = &trace.attributes;
  r.properties = &trace.properties;
  Liveness live(r);
  bool header = false, init = false;
  Frame pending;
  std::string text;

  while (std::getline(in, text)) {
    ++r.line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      r.fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) r.fail("expected an object");

    if (!header) {
      if (j.value("format", "") != "mgtrace") r.fail("not an mgtrace header");
      if (j.value("version", 0) != 1) r.fail("unsupported version");
      trace.program = j.value("program", "");
      for (auto [key, schema] : {std::pair{"attributes", &trace.attributes}, std::pair{"properties", &trace.properties}}) {
        auto it = j.find(key);
        if (it == j.end()) continue;
        if (!it->is_object()) r.fail(std::string(key) + " must be an object");
        for (const auto& [name, t] : it->items()) {
          auto type = t.is_string() ? parse_type(t.get<std::string>()) : std::nullopt;
          if (!type) r.fail("unknown type for " + name);
          schema->emplace_back(name, *type);
        }
      }
      header = true;
      continue;
    }

    if (!j.contains("op") || !j["op"].is_string()) r.fail("missing \"op\"");
    const std::string op = j["op"].get<std::string>();
    if (op == "init") {
      if (init) r.fail("second init");
      trace.initial = r.tree(r.member(j, "tree"));
      live.add(trace.initial, Liveness::kNone, std::nullopt);
      init = true;
      continue;
    }
    if (!init) r.fail("command before init");

    Command c;
    if (op == "frame") {
      trace.frames.push_back(std::move(pending));
      pending = {};
      continue;
    } else if (op == "insert") {
      c.kind = Command::Kind::Insert;
      c.node = r.id(r.member(j, "parent"), "parent");
      live.require(c.node);
      if (auto it = j.find("after"); it != j.end() && !it->is_null()) {
        c.after = r.id(*it, "after");
        live.require_child(c.node, *c.after);
      }
      c.tree = r.tree(r.member(j, "tree"));
      live.add(c.tree, c.node, c.after);
    } else if (op == "remove") {
      c.kind = Command::Kind::Remove;
      c.node = r.id(r.member(j, "node"), "node");
      live.remove(c.node);
    } else if (op == "set_attr" || op == "set_prop") {
      bool attr = op == "set_attr";
      c.kind = attr ? Command::Kind::SetAttribute : Command::Kind::SetProperty;
      c.node = r.id(r.member(j, "node"), "node");
      live.require(c.node);
      const Json& name = r.member(j, "name");
      if (!name.is_string()) r.fail("name must be a string");
      c.name = name.get<std::string>();
      const ValueType* t = lookup(attr ? trace.attributes : trace.properties, c.name);
      if (!t) r.fail(std::string("undeclared ") + (attr ? "attribute " : "property ") + c.name);
      c.value = r.value(r.member(j, "value"), *t, c.name);
    } else {
      r.fail("unknown op \"" + op + "\"");
    }
    pending.commands.push_back(std::move(c));
  }

  if (!header) r.fail("empty trace");
  if (!init) r.fail("no init line");
  if (!pending.commands.empty()) r.fail("commands after the last frame marker");
  return trace;
}

Trace parse_trace_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

void write_trace(std::ostream& out, const Trace& trace) {
  Json header;
  header["format"] = "mgtrace";
  header["version"] = 1;
  header["program"] = trace.program;
  header["attributes"] = schema_json(trace.attributes);
  header["properties"] = schema_json(trace.properties);
  out << header.dump() << '\n';
  out << Json{{"op", "init"}, {"tree", tree_json(trace.initial)}}.dump() << '\n';
  for (const Frame& f : trace.frames) {
    for (const Command& c : f.commands) {
      Json j;
      switch (c.kind) {
        case Command::Kind::Insert:
          j["op"] = "insert";
          j["parent"] = c.node;
          if (c.after) j["after"] = *c.after;
          j["tree"] = tree_json(c.tree);
          break;
        case Command::Kind::Remove:
          j["op"] = "remove";
          j["node"] = c.node;
          break;
        case Command::Kind::SetAttribute:
        case Command::Kind::SetProperty:
          j["op"] = c.kind == Command::Kind::SetAttribute ? "set_attr" : "set_prop";
          j["node"] = c.node;
          j["name"] = c.name;
          j["value"] = value_json(c.value);
          break;
      }
      out << j.dump() << '\n';
    }
    out << R"({"op":"frame"})" << '\n';
  }
}

std::string trace_text(const Trace& trace) {
  std::ostringstream os;
  write_trace(os, trace);
  return os.str();
}

void check_schema(const Trace& trace, const Program& program) {
  auto check = [](const Schema& schema, const std::vector<Declaration>& decls, const char* kind) {
    for (const auto& [name, type] : schema) {
      auto it = std::find_if(decls.begin(), decls.end(), [&](const Declaration& d) { return d.name == name; });
      if (it == decls.end() || !it->declared) {
        throw TraceError(1, std::string("the program declares no ") + kind + " " + name);
      }
      if (it->type != type) {
        throw TraceError(1, std::string(kind) + " " + name + " is " + to_string(type) + " in the trace but " +
                                to_string(it->type) + " in the program");
      }
    }
  };
  check(trace.attributes, program.attributes, "attribute");
  check(trace.properties, program.properties, "property");
}

const char* to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::Typing: return "typing";
    case WorkloadKind::Hover: return "hover";
    case WorkloadKind::Animation: return "animation";
    case WorkloadKind::LinkedFile: return "linked-file";
    case WorkloadKind::LazyLoad: return "lazy-load";
    case WorkloadKind::Removal: return "removal";
    case WorkloadKind::Resize: return "resize";
    case WorkloadKind::Mixed: return "mixed";
  }
  return "?";
}

std::optional<WorkloadKind> parse_workload(std::string_view name) {
  for (WorkloadKind k : kAllWorkloads) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

}  // namespace spineless
