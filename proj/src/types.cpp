#include <numeric>

#include "spineless/grammar.hpp"

namespace spineless {

namespace {

// Union-find over type variables: one per term, one per field.
class Unifier {
 public:
  explicit Unifier(std::size_t n) : parent_(n), bound_(n, ValueType::Unknown) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  ValueType type_of(std::uint32_t v) { return bound_[find(v)]; }

  // Returns false on a clash, leaving both sides unchanged.
  bool bind(std::uint32_t v, ValueType t) {
    std::uint32_t r = find(v);
    if (bound_[r] == ValueType::Unknown) {
      bound_[r] = t;
      return true;
    }
    return bound_[r] == t;
  }

  bool unify(std::uint32_t a, std::uint32_t b) {
    std::uint32_t ra = find(a);
    std::uint32_t rb = find(b);
    if (ra == rb) return true;
    ValueType ta = bound_[ra];
    ValueType tb = bound_[rb];
    if (ta != ValueType::Unknown && tb != ValueType::Unknown && ta != tb) return false;
    parent_[rb] = ra;
    if (ta == ValueType::Unknown) bound_[ra] = tb;
    return true;
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<ValueType> bound_;
};

struct Signature {
  ValueType arg;  // Unknown: all arguments share one fresh type
  ValueType result;
};

Signature signature(Function f) {
  switch (f) {
    case Function::Add:
    case Function::Sub:
    case Function::Mul:
    case Function::Neg:
    case Function::Max:
    case Function::Min: return {ValueType::Number, ValueType::Number};
    case Function::Lt:
    case Function::Le:
    case Function::Gt:
    case Function::Ge: return {ValueType::Number, ValueType::Bool};
    case Function::Eq:
    case Function::Ne: return {ValueType::Unknown, ValueType::Bool};
    case Function::And:
    case Function::Or:
    case Function::Not: return {ValueType::Bool, ValueType::Bool};
    case Function::Px:
    case Function::Pct: return {ValueType::Number, ValueType::Length};
    case Function::IsPct: return {ValueType::Length, ValueType::Bool};
    case Function::Magnitude: return {ValueType::Length, ValueType::Number};
  }
  return {ValueType::Unknown, ValueType::Unknown};
}

class Inference {
 public:
  explicit Inference(Program& p) : p_(p), u_(p.terms.size() + p.fields.size()) {}

  void run() {
    for (const auto& decls : {&p_.attributes, &p_.properties}) {
      for (const auto& d : *decls) {
        if (!d.declared) {
          bool attr = decls == &p_.attributes;
          throw GrammarError(GrammarError::Kind::Type, d.loc,
                             std::string("use of undeclared ") + (attr ? "attribute" : "property") +
                                 " '" + d.name + "'");
        }
      }
    }
    for (const auto& pass : p_.passes) {
      for (const auto* section : {&pass.pre, &pass.post}) {
        for (const auto& a : *section) {
          visit(a.term);
          if (!u_.unify(field_var(a.target), a.term)) {
            mismatch(a.loc, u_.type_of(field_var(a.target)), u_.type_of(a.term),
                     "assignment to '" + p_.fields[a.target].name + "'");
          }
        }
      }
    }
    for (std::size_t f = 0; f < p_.fields.size(); ++f) {
      ValueType t = u_.type_of(field_var(static_cast<FieldId>(f)));
      if (t == ValueType::Unknown) {
        throw GrammarError(GrammarError::Kind::Type, p_.fields[f].loc,
                           "cannot infer a type for field '" + p_.fields[f].name + "'");
      }
      p_.fields[f].type = t;
    }
    for (std::size_t t = 0; t < p_.terms.size(); ++t) {
      ValueType ty = u_.type_of(static_cast<std::uint32_t>(t));
      if (ty == ValueType::Unknown) {
        throw GrammarError(GrammarError::Kind::Type, p_.terms[t].loc, "cannot infer the type of this expression");
      }
      p_.terms[t].type = ty;
    }
    p_.typed = true;
  }

 private:
  std::uint32_t field_var(FieldId f) const { return static_cast<std::uint32_t>(p_.terms.size() + f); }

  [[noreturn]] void mismatch(SourceLoc loc, ValueType expected, ValueType found, const std::string& what) {
    throw GrammarError(GrammarError::Kind::Type, loc,
                       "type mismatch in " + what + ": expected " + to_string(expected) + ", found " +
                           to_string(found));
  }

  void expect(TermId t, ValueType type, const Term& ctx, const std::string& what) {
    if (!u_.bind(t, type)) mismatch(p_.terms[t].loc.line ? p_.terms[t].loc : ctx.loc, type, u_.type_of(t), what);
  }

  void visit(TermId id) {
    const Term& t = p_.terms[id];
    auto kids = p_.children(t);
    for (TermId k : kids) visit(k);
    switch (t.kind) {
      case Term::Kind::Literal:
        u_.bind(id, p_.literal_types[t.index]);
        break;
      case Term::Kind::Attribute:
        u_.bind(id, p_.attributes[t.index].type);
        break;
      case Term::Kind::Property:
        u_.bind(id, p_.properties[t.index].type);
        break;
      case Term::Kind::HasNeighbor:
        u_.bind(id, ValueType::Bool);
        break;
      case Term::Kind::Field:
        u_.unify(id, field_var(t.index));
        break;
      case Term::Kind::If:
        expect(kids[0], ValueType::Bool, t, "if condition");
        if (!u_.unify(kids[1], kids[2])) {
          mismatch(t.loc, u_.type_of(kids[1]), u_.type_of(kids[2]), "if branches");
        }
        u_.unify(id, kids[1]);
        break;
      case Term::Kind::Call: {
        Signature sig = signature(t.function);
        std::string what = std::string("argument of '") + to_string(t.function) + "'";
        if (sig.arg == ValueType::Unknown) {
          for (std::size_t i = 1; i < kids.size(); ++i) {
            if (!u_.unify(kids[0], kids[i])) mismatch(t.loc, u_.type_of(kids[0]), u_.type_of(kids[i]), what);
          }
        } else {
          for (TermId k : kids) expect(k, sig.arg, t, what);
        }
        u_.bind(id, sig.result);
        break;
      }
    }
  }

  Program& p_;
  Unifier u_;
};

}  // namespace

void infer_types(Program& program) { Inference(program).run(); }

}  // namespace spineless
