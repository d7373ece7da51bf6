#include <queue>

#include "spineless/grammar.hpp"

namespace spineless {

namespace {

struct Access {
  Neighbor neighbor;
  FieldId field;
  SourceLoc loc;
};

void collect_accesses(const Program& p, TermId id, std::vector<Access>& out) {
  const Term& t = p.terms[id];
  if (t.kind == Term::Kind::Field) out.push_back({t.neighbor, t.index, t.loc});
  for (TermId k : p.children(t)) collect_accesses(p, k, out);
}

// Whether `reader` reading `n.source` sees a value already computed in
// from-scratch order, for every tree shape.
bool computed_before(const FieldInfo& source, const FieldInfo& reader, Neighbor n) {
  if (source.pass != reader.pass) return source.pass < reader.pass;
  switch (n) {
    case Neighbor::Self:
      if (source.position != reader.position) return source.position == Position::Pre;
      return source.order < reader.order;
    case Neighbor::Parent: return source.position == Position::Pre;
    case Neighbor::First:
    case Neighbor::Last: return reader.position == Position::Post;
    case Neighbor::Prev: return true;
    case Neighbor::Next: return false;
  }
  return false;
}

std::string describe_position(const FieldInfo& f) {
  return "pass " + std::to_string(f.pass + 1) + (f.position == Position::Pre ? " pre" : " post");
}

}  // namespace

void check_schedule(const Program& program) {
  const auto& fields = program.fields;
  std::vector<std::vector<FieldId>> readers(fields.size());
  struct Violation {
    FieldId source;
    FieldId reader;
    Access access;
  };
  std::vector<Violation> violations;

  for (const auto& pass : program.passes) {
    for (const auto* section : {&pass.pre, &pass.post}) {
      for (const auto& a : *section) {
        std::vector<Access> accesses;
        collect_accesses(program, a.term, accesses);
        for (const auto& acc : accesses) {
          readers[acc.field].push_back(a.target);
          if (!computed_before(fields[acc.field], fields[a.target], acc.neighbor)) {
            violations.push_back({acc.field, a.target, acc});
          }
        }
      }
    }
  }
  if (violations.empty()) return;

  const Violation& v = violations.front();
  // A violation is a cycle when the source itself (transitively) reads the
  // reader; report the chain in that case.
  std::vector<std::int64_t> came_from(fields.size(), -1);
  std::queue<FieldId> frontier;
  frontier.push(v.reader);
  came_from[v.reader] = v.reader;
  while (!frontier.empty() && came_from[v.source] < 0) {
    FieldId f = frontier.front();
    frontier.pop();
    for (FieldId r : readers[f]) {
      if (came_from[r] >= 0) continue;
      came_from[r] = f;
      frontier.push(r);
    }
  }
  const FieldInfo& src = fields[v.source];
  const FieldInfo& dst = fields[v.reader];
  std::string access = std::string(to_string(v.access.neighbor)) + "." + src.name;
  if (came_from[v.source] >= 0) {
    // Each name reads the one after it.
    std::string chain = src.name;
    for (FieldId f = v.source; f != v.reader;) {
      f = static_cast<FieldId>(came_from[f]);
      chain += " -> " + fields[f].name;
    }
    chain += " -> " + src.name;
    throw GrammarError(GrammarError::Kind::Cycle, v.access.loc,
                       "dependency cycle: '" + dst.name + "' reads " + access + " (" + chain + ")");
  }
  throw GrammarError(GrammarError::Kind::Schedule, v.access.loc,
                     "schedule violation: '" + dst.name + "' (" + describe_position(dst) + ") reads " +
                         access + " (" + describe_position(src) + "), which is not computed yet");
}

}  // namespace spineless
