#include <charconv>

#include "spineless/grammar.hpp"

namespace spineless {

const char* to_string(ValueType type) {
  switch (type) {
    case ValueType::Unknown: return "unknown";
    case ValueType::Number: return "number";
    case ValueType::Bool: return "bool";
    case ValueType::String: return "string";
    case ValueType::Length: return "length";
  }
  return "?";
}

std::string format_number(double n) {
  if (n == 0.0) return "0";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, n);
  return std::string(buf, res.ptr);
}

std::string to_string(SourceLoc loc) { return std::to_string(loc.line) + ":" + std::to_string(loc.column); }

namespace {

const char* kind_name(GrammarError::Kind k) {
  switch (k) {
    case GrammarError::Kind::Syntax: return "syntax error";
    case GrammarError::Kind::Name: return "name error";
    case GrammarError::Kind::Duplicate: return "duplicate definition";
    case GrammarError::Kind::Type: return "type error";
    case GrammarError::Kind::Schedule: return "schedule error";
    case GrammarError::Kind::Cycle: return "cycle error";
  }
  return "error";
}

template <typename Seq, typename Key>
std::int64_t find_name(const Seq& seq, std::string_view name, Key key) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (key(seq[i]) == name) return static_cast<std::int64_t>(i);
  }
  return -1;
}

}  // namespace

GrammarError::GrammarError(Kind kind, SourceLoc loc, const std::string& message)
    : std::runtime_error(to_string(loc) + ": " + kind_name(kind) + ": " + message), kind_(kind), loc_(loc) {}

const char* to_string(Neighbor n) {
  switch (n) {
    case Neighbor::Self: return "self";
    case Neighbor::Prev: return "prev";
    case Neighbor::Next: return "next";
    case Neighbor::Parent: return "parent";
    case Neighbor::First: return "first";
    case Neighbor::Last: return "last";
  }
  return "?";
}

const char* to_string(Function f) {
  switch (f) {
    case Function::Add: return "+";
    case Function::Sub: return "-";
    case Function::Mul: return "*";
    case Function::Neg: return "unary -";
    case Function::Max: return "max";
    case Function::Min: return "min";
    case Function::Lt: return "<";
    case Function::Le: return "<=";
    case Function::Gt: return ">";
    case Function::Ge: return ">=";
    case Function::Eq: return "==";
    case Function::Ne: return "!=";
    case Function::And: return "&&";
    case Function::Or: return "||";
    case Function::Not: return "!";
    case Function::Px: return "px";
    case Function::Pct: return "pct";
    case Function::IsPct: return "is_pct";
    case Function::Magnitude: return "magnitude";
  }
  return "?";
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Self: return "self";
    case Direction::Prev: return "prev";
    case Direction::Next: return "next";
    case Direction::Parent: return "parent";
    case Direction::Children: return "children";
  }
  return "?";
}

const char* to_string(Guard g) {
  switch (g) {
    case Guard::None: return "";
    case Guard::IfFirstChild: return "first";
    case Guard::IfLastChild: return "last";
  }
  return "?";
}

std::int64_t Program::find_field(std::string_view name) const {
  return find_name(fields, name, [](const FieldInfo& f) -> std::string_view { return f.name; });
}

std::int64_t Program::find_attribute(std::string_view name) const {
  return find_name(attributes, name, [](const Declaration& d) -> std::string_view { return d.name; });
}

std::int64_t Program::find_property(std::string_view name) const {
  return find_name(properties, name, [](const Declaration& d) -> std::string_view { return d.name; });
}

std::int64_t Program::find_string(std::string_view text) const {
  return find_name(strings, text, [](const std::string& s) -> std::string_view { return s; });
}

std::shared_ptr<const CompiledGrammar> compile_grammar(std::string_view text) {
  auto g = std::make_shared<CompiledGrammar>();
  g->program = parse_program(text);
  infer_types(g->program);
  check_schedule(g->program);
  g->dependencies = analyze_dependencies(g->program);
  g->layout = pack_fields(g->program);
  return g;
}

std::string describe_type(const Program&, ValueType type) { return to_string(type); }

std::string format_value(const Program& program, ValueType type, const Value& value) {
  switch (type) {
    case ValueType::Number: return format_number(value.number);
    case ValueType::Bool: return value.as_bool() ? "true" : "false";
    case ValueType::String: {
      std::string s = value.tag < program.strings.size() ? program.strings[value.tag] : "#" + std::to_string(value.tag);
      return "\"" + s + "\"";
    }
    case ValueType::Length: return format_number(value.number) + (value.is_percent() ? "%" : "px");
    case ValueType::Unknown: break;
  }
  return "?";
}

}  // namespace spineless
