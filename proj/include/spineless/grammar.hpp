#pragma once

// Layout programs: a small attribute-grammar language of passes over a tree.
// Parsing yields a Program whose names are resolved; the analysis functions
// then type it, validate its schedule, derive dirty-propagation rules and
// pack its fields into dirty bits.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spineless/value.hpp"

namespace spineless {

using FieldId = std::uint32_t;
using TermId = std::uint32_t;
using BitId = std::uint32_t;
using BitMask = std::uint64_t;

inline constexpr std::uint32_t kMaxDirtyBits = 64;

struct SourceLoc {
  int line = 0;
  int column = 0;
};

std::string to_string(SourceLoc loc);

class GrammarError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Name, Duplicate, Type, Schedule, Cycle };

  GrammarError(Kind kind, SourceLoc loc, const std::string& message);

  Kind kind() const { return kind_; }
  SourceLoc where() const { return loc_; }

 private:
  Kind kind_;
  SourceLoc loc_;
};

enum class Neighbor : std::uint8_t { Self, Prev, Next, Parent, First, Last };
enum class Position : std::uint8_t { Pre, Post };

const char* to_string(Neighbor n);

enum class Function : std::uint8_t {
  Add, Sub, Mul, Neg, Max, Min,
  Lt, Le, Gt, Ge, Eq, Ne,
  And, Or, Not,
  Px, Pct, IsPct, Magnitude,
};

const char* to_string(Function f);

struct Term {
  enum class Kind : std::uint8_t { If, Call, HasNeighbor, Field, Attribute, Property, Literal };

  Kind kind = Kind::Literal;
  Function function = Function::Add;   // Call
  Neighbor neighbor = Neighbor::Self;  // HasNeighbor, Field
  ValueType type = ValueType::Unknown;
  std::uint32_t index = 0;      // field, attribute, property or literal id
  std::uint32_t first_arg = 0;  // children live in Program::args
  std::uint32_t arg_count = 0;
  SourceLoc loc;
};

struct Assignment {
  FieldId target = 0;
  TermId term = 0;
  SourceLoc loc;
};

struct Pass {
  std::string name;
  std::vector<Assignment> pre;
  std::vector<Assignment> post;
  SourceLoc loc;
};

struct Declaration {
  std::string name;
  ValueType type = ValueType::Unknown;
  Value initial;
  bool declared = false;  // false when only referenced
  SourceLoc loc;
};

struct FieldInfo {
  std::string name;
  ValueType type = ValueType::Unknown;
  std::uint32_t pass = 0;  // position in the schedule
  Position position = Position::Pre;
  std::uint32_t order = 0;  // index within its pre/post section
  SourceLoc loc;
};

/// A parsed layout program. Passes are stored in schedule order.
struct Program {
  std::vector<Pass> passes;
  std::vector<FieldInfo> fields;
  std::vector<Declaration> attributes;
  std::vector<Declaration> properties;
  std::vector<Term> terms;
  std::vector<TermId> args;
  std::vector<Value> literals;
  std::vector<ValueType> literal_types;
  std::vector<std::string> strings;  // interned string literals; id 0 is ""
  bool typed = false;

  std::span<const TermId> children(const Term& t) const {
    return {args.data() + t.first_arg, t.arg_count};
  }

  std::int64_t find_field(std::string_view name) const;
  std::int64_t find_attribute(std::string_view name) const;
  std::int64_t find_property(std::string_view name) const;
  std::int64_t find_string(std::string_view text) const;
};

Program parse_program(std::string_view text);

/// Monomorphic inference by unification. Annotates every term and field.
void infer_types(Program& program);

/// Verifies that every field read is computed earlier in from-scratch
/// execution order on every tree shape.
void check_schedule(const Program& program);

enum class Direction : std::uint8_t { Self, Prev, Next, Parent, Children };
enum class Guard : std::uint8_t { None, IfFirstChild, IfLastChild };

const char* to_string(Direction d);
const char* to_string(Guard g);

/// "When the source changes on node x, dirty `target_field` (in
/// `target_bit`) on the node reached from x by `direction`, if `guard` holds
/// for x."
struct DirtyRule {
  Direction direction = Direction::Self;
  Guard guard = Guard::None;
  BitId target_bit = 0;
  FieldId target_field = 0;

  friend bool operator==(const DirtyRule&, const DirtyRule&) = default;
};

struct DependencyTable {
  std::vector<std::vector<DirtyRule>> on_field;
  std::vector<std::vector<DirtyRule>> on_attribute;
  std::vector<std::vector<DirtyRule>> on_property;
  /// Rules fired relative to a node being inserted or removed: its prev and
  /// next siblings lose or gain a neighbor, and its parent's first/last
  /// pointers may move. Stored at bit granularity.
  std::vector<DirtyRule> structural;

  std::size_t rule_count() const;
};

DependencyTable analyze_dependencies(const Program& program);

/// One PRE and one POST bit per pass; bit 2p covers pass p's pre-order
/// fields and bit 2p+1 its post-order fields.
struct DirtyBitLayout {
  std::uint32_t pass_count = 0;
  std::vector<BitId> field_bit;
  std::vector<std::vector<FieldId>> bit_fields;

  std::uint32_t bit_count() const { return 2 * pass_count; }
  static BitId pre_bit(std::uint32_t pass) { return 2 * pass; }
  static BitId post_bit(std::uint32_t pass) { return 2 * pass + 1; }
  static std::uint32_t pass_of(BitId bit) { return bit / 2; }
  static bool is_post(BitId bit) { return (bit & 1) != 0; }
};

DirtyBitLayout pack_fields(const Program& program);

/// Everything downstream needs from a validated program.
struct CompiledGrammar {
  Program program;
  DependencyTable dependencies;
  DirtyBitLayout layout;
};

/// parse + infer_types + check_schedule + analyze_dependencies + pack_fields.
std::shared_ptr<const CompiledGrammar> compile_grammar(std::string_view text);

std::string describe_type(const Program& program, ValueType type);
std::string format_value(const Program& program, ValueType type, const Value& value);

}  // namespace spineless
