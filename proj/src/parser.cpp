#include <cctype>
#include <charconv>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "spineless/grammar.hpp"

namespace spineless {

namespace {

enum class Tok {
  End, Ident, Number, Length, String,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Semi, Comma, Dot, Question, Colon, Assign,
  Plus, Minus, Star, Slash, Lt, Le, Gt, Ge, EqEq, NotEq, AndAnd, OrOr, Bang,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  bool percent = false;
  SourceLoc loc;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          advance();
        }
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else if (c == '"') {
        lex_string(t);
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  void lex_number(Token& t) {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      advance();
    }
    std::string_view digits = src_.substr(start, pos_ - start);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.number);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
      throw GrammarError(GrammarError::Kind::Syntax, t.loc,
                         "malformed number '" + std::string(digits) + "'");
    }
    t.kind = Tok::Number;
    if (src_.substr(pos_, 2) == "px") {
      advance();
      advance();
      t.kind = Tok::Length;
    } else if (pos_ < src_.size() && src_[pos_] == '%') {
      advance();
      t.kind = Tok::Length;
      t.percent = true;
    }
    t.text = std::string(src_.substr(start, pos_ - start));
  }

  void lex_string(Token& t) {
    advance();
    std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') advance();
    if (pos_ >= src_.size() || src_[pos_] != '"') {
      throw GrammarError(GrammarError::Kind::Syntax, t.loc, "unterminated string literal");
    }
    t.kind = Tok::String;
    t.text = std::string(src_.substr(start, pos_ - start));
    advance();
  }

  void lex_punct(Token& t) {
    char c = src_[pos_];
    char n = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
    auto two = [&](Tok kind) {
      advance();
      advance();
      t.kind = kind;
    };
    auto one = [&](Tok kind) {
      advance();
      t.kind = kind;
    };
    switch (c) {
      case '(': return one(Tok::LParen);
      case ')': return one(Tok::RParen);
      case '{': return one(Tok::LBrace);
      case '}': return one(Tok::RBrace);
      case '[': return one(Tok::LBracket);
      case ']': return one(Tok::RBracket);
      case ';': return one(Tok::Semi);
      case ',': return one(Tok::Comma);
      case '.': return one(Tok::Dot);
      case '?': return one(Tok::Question);
      case ':': return one(Tok::Colon);
      case '+': return one(Tok::Plus);
      case '-': return one(Tok::Minus);
      case '*': return one(Tok::Star);
      case '/': return one(Tok::Slash);
      case '<': return n == '=' ? two(Tok::Le) : one(Tok::Lt);
      case '>': return n == '=' ? two(Tok::Ge) : one(Tok::Gt);
      case '=': return n == '=' ? two(Tok::EqEq) : one(Tok::Assign);
      case '!': return n == '=' ? two(Tok::NotEq) : one(Tok::Bang);
      case '&':
        if (n == '&') return two(Tok::AndAnd);
        break;
      case '|':
        if (n == '|') return two(Tok::OrOr);
        break;
      default:
        break;
    }
    throw GrammarError(GrammarError::Kind::Syntax, t.loc,
                       std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::optional<Neighbor> neighbor_keyword(std::string_view s) {
  if (s == "self") return Neighbor::Self;
  if (s == "prev") return Neighbor::Prev;
  if (s == "next") return Neighbor::Next;
  if (s == "parent") return Neighbor::Parent;
  if (s == "first") return Neighbor::First;
  if (s == "last") return Neighbor::Last;
  return std::nullopt;
}

struct NamedFunction {
  std::string_view name;
  Function function;
  std::uint32_t arity;
};

constexpr NamedFunction kNamedFunctions[] = {
    {"max", Function::Max, 2},      {"min", Function::Min, 2},
    {"px", Function::Px, 1},        {"pct", Function::Pct, 1},
    {"is_pct", Function::IsPct, 1}, {"magnitude", Function::Magnitude, 1},
};

struct PendingRef {
  TermId term;
  std::string name;
  SourceLoc loc;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {
    program_.strings.push_back("");
  }

  Program run() {
    std::optional<std::vector<std::pair<std::string, SourceLoc>>> schedule;
    SourceLoc schedule_loc;
    while (peek().kind != Tok::End) {
      const Token& t = peek();
      if (is_word("attribute") || is_word("property")) {
        parse_declaration();
      } else if (is_word("def")) {
        parse_pass();
      } else if (is_word("schedule")) {
        if (schedule) fail(t.loc, "duplicate schedule statement");
        schedule_loc = t.loc;
        schedule = parse_schedule();
      } else {
        fail(t.loc, "expected 'def', 'schedule', 'attribute' or 'property', found " + describe(t));
      }
    }
    if (!schedule) {
      if (!passes_.empty()) fail(passes_.front().loc, "program has passes but no schedule");
      schedule.emplace();
    }
    finish(*schedule, schedule_loc);
    return std::move(program_);
  }

 private:
  // --- token helpers -----------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& take() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
  }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    take();
    return true;
  }
  bool accept_word(std::string_view w) {
    if (!is_word(w)) return false;
    take();
    return true;
  }
  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(peek().loc, std::string("expected ") + what + ", found " + describe(peek()));
    return take();
  }
  std::string expect_ident(const char* what) {
    if (peek().kind != Tok::Ident) fail(peek().loc, std::string("expected ") + what + ", found " + describe(peek()));
    return take().text;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail(peek().loc, "expected '" + std::string(w) + "', found " + describe(peek()));
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::End: return "end of input";
      case Tok::Ident: return "'" + t.text + "'";
      case Tok::Number:
      case Tok::Length: return "number " + t.text;
      case Tok::String: return "string \"" + t.text + "\"";
      default: return "punctuation";
    }
  }

  [[noreturn]] static void fail(SourceLoc loc, const std::string& msg,
                                GrammarError::Kind kind = GrammarError::Kind::Syntax) {
    throw GrammarError(kind, loc, msg);
  }

  // --- top level ---------------------------------------------------------

  void parse_declaration() {
    bool is_attribute = peek().text == "attribute";
    SourceLoc loc = take().loc;
    std::string name = expect_ident("a name");
    expect(Tok::Colon, "':'");
    SourceLoc type_loc = peek().loc;
    std::string type_name = expect_ident("a type");
    ValueType type;
    if (type_name == "number") {
      type = ValueType::Number;
    } else if (type_name == "bool") {
      type = ValueType::Bool;
    } else if (type_name == "string") {
      type = ValueType::String;
    } else if (type_name == "length") {
      type = ValueType::Length;
    } else {
      fail(type_loc, "unknown type '" + type_name + "' (expected number, bool, string or length)");
    }
    Value initial;
    if (type == ValueType::Length) initial = Value::of_length(0, false);
    if (accept(Tok::Assign)) {
      SourceLoc vloc = peek().loc;
      auto [value, vtype] = parse_constant();
      if (vtype != type) {
        fail(vloc, "default value of '" + name + "' has type " + to_string(vtype) + ", declared " +
                       to_string(type), GrammarError::Kind::Type);
      }
      initial = value;
    }
    expect(Tok::Semi, "';'");

    auto& decls = is_attribute ? program_.attributes : program_.properties;
    auto& index = is_attribute ? attribute_index_ : property_index_;
    auto it = index.find(name);
    if (it != index.end() && decls[it->second].declared) {
      fail(loc, std::string(is_attribute ? "attribute" : "property") + " '" + name + "' declared twice",
           GrammarError::Kind::Duplicate);
    }
    if (it == index.end()) {
      index.emplace(name, static_cast<std::uint32_t>(decls.size()));
      decls.push_back({});
      it = index.find(name);
    }
    Declaration& d = decls[it->second];
    d.name = name;
    d.type = type;
    d.initial = initial;
    d.declared = true;
    d.loc = loc;
  }

  std::pair<Value, ValueType> parse_constant() {
    const Token& t = peek();
    bool negative = false;
    if (t.kind == Tok::Minus) {
      take();
      negative = true;
    }
    const Token& v = take();
    double sign = negative ? -1.0 : 1.0;
    switch (v.kind) {
      case Tok::Number: return {Value::of_number(sign * v.number), ValueType::Number};
      case Tok::Length: return {Value::of_length(sign * v.number, v.percent), ValueType::Length};
      case Tok::String:
        if (!negative) return {Value::of_string(intern(v.text)), ValueType::String};
        break;
      case Tok::Ident:
        if (!negative && (v.text == "true" || v.text == "false")) {
          return {Value::of_bool(v.text == "true"), ValueType::Bool};
        }
        break;
      default:
        break;
    }
    fail(v.loc, "expected a constant, found " + describe(v));
  }

  void parse_pass() {
    SourceLoc loc = take().loc;
    Pass pass;
    pass.loc = loc;
    pass.name = expect_ident("a pass name");
    for (const auto& p : passes_) {
      if (p.name == pass.name) fail(loc, "pass '" + pass.name + "' defined twice", GrammarError::Kind::Duplicate);
    }
    expect(Tok::LParen, "'('");
    expect(Tok::RParen, "')'");
    expect(Tok::LBrace, "'{'");

    bool recursed = false;
    std::uint32_t pass_index = static_cast<std::uint32_t>(passes_.size());
    while (!accept(Tok::RBrace)) {
      if (peek().kind == Tok::End) fail(peek().loc, "unterminated pass '" + pass.name + "'");
      if ((is_word("pre") || is_word("post")) && peek(1).kind == Tok::Colon) {
        bool post = peek().text == "post";
        SourceLoc l = take().loc;
        take();
        if (post != recursed) {
          fail(l, post ? "'post:' must follow 'recurse;'" : "'pre:' must precede 'recurse;'");
        }
        continue;
      }
      if (is_word("recurse")) {
        SourceLoc l = take().loc;
        if (recursed) fail(l, "pass '" + pass.name + "' recurses twice");
        expect(Tok::Semi, "';'");
        recursed = true;
        continue;
      }
      if (is_word("children") && peek(1).kind == Tok::Dot) {
        SourceLoc l = take().loc;
        take();
        expect_word("forEach");
        expect(Tok::LParen, "'('");
        std::string target = expect_ident("a pass name");
        expect(Tok::RParen, "')'");
        expect(Tok::Semi, "';'");
        if (target != pass.name) fail(l, "children.forEach must recurse into the enclosing pass");
        if (recursed) fail(l, "pass '" + pass.name + "' recurses twice");
        recursed = true;
        continue;
      }
      auto section = recursed ? Position::Post : Position::Pre;
      auto& list = recursed ? pass.post : pass.pre;
      list.push_back(parse_assignment(pass_index, section, static_cast<std::uint32_t>(list.size())));
    }
    if (!recursed) fail(loc, "pass '" + pass.name + "' never recurses into its children (missing 'recurse;')");
    passes_.push_back(std::move(pass));
  }

  Assignment parse_assignment(std::uint32_t pass, Position position, std::uint32_t order) {
    SourceLoc loc = peek().loc;
    if (!accept_word("self")) fail(loc, "assignments must target 'self.<field>', found " + describe(peek()));
    expect(Tok::Dot, "'.'");
    SourceLoc name_loc = peek().loc;
    std::string name = expect_ident("a field name");
    expect(Tok::Assign, "'='");
    TermId term = parse_expr();
    expect(Tok::Semi, "';'");

    if (field_index_.count(name)) {
      fail(name_loc, "field '" + name + "' is assigned more than once (first at " +
                         to_string(program_.fields[field_index_[name]].loc) + ")",
           GrammarError::Kind::Duplicate);
    }
    FieldId id = static_cast<FieldId>(program_.fields.size());
    field_index_.emplace(name, id);
    FieldInfo info;
    info.name = name;
    info.pass = pass;
    info.position = position;
    info.order = order;
    info.loc = name_loc;
    program_.fields.push_back(info);
    return {id, term, loc};
  }

  std::vector<std::pair<std::string, SourceLoc>> parse_schedule() {
    take();
    std::vector<std::pair<std::string, SourceLoc>> names;
    if (accept(Tok::Semi)) return names;
    do {
      SourceLoc l = peek().loc;
      names.emplace_back(expect_ident("a pass name"), l);
    } while (accept(Tok::Comma));
    expect(Tok::Semi, "';'");
    return names;
  }

  // --- expressions -------------------------------------------------------

  TermId add_term(Term t, std::initializer_list<TermId> kids = {}) {
    t.first_arg = static_cast<std::uint32_t>(program_.args.size());
    t.arg_count = static_cast<std::uint32_t>(kids.size());
    program_.args.insert(program_.args.end(), kids.begin(), kids.end());
    program_.terms.push_back(t);
    return static_cast<TermId>(program_.terms.size() - 1);
  }

  TermId call(Function f, SourceLoc loc, std::initializer_list<TermId> kids) {
    Term t;
    t.kind = Term::Kind::Call;
    t.function = f;
    t.loc = loc;
    return add_term(t, kids);
  }

  TermId parse_expr() { return parse_or(); }

  TermId parse_or() {
    TermId lhs = parse_and();
    for (;;) {
      SourceLoc loc = peek().loc;
      if (!accept(Tok::OrOr) && !accept_word("or")) return lhs;
      lhs = call(Function::Or, loc, {lhs, parse_and()});
    }
  }

  TermId parse_and() {
    TermId lhs = parse_equality();
    for (;;) {
      SourceLoc loc = peek().loc;
      if (!accept(Tok::AndAnd) && !accept_word("and")) return lhs;
      lhs = call(Function::And, loc, {lhs, parse_equality()});
    }
  }

  TermId parse_equality() {
    TermId lhs = parse_relational();
    for (;;) {
      SourceLoc loc = peek().loc;
      if (accept(Tok::EqEq)) {
        lhs = call(Function::Eq, loc, {lhs, parse_relational()});
      } else if (accept(Tok::NotEq)) {
        lhs = call(Function::Ne, loc, {lhs, parse_relational()});
      } else {
        return lhs;
      }
    }
  }

  TermId parse_relational() {
    TermId lhs = parse_additive();
    SourceLoc loc = peek().loc;
    Function f;
    switch (peek().kind) {
      case Tok::Lt: f = Function::Lt; break;
      case Tok::Le: f = Function::Le; break;
      case Tok::Gt: f = Function::Gt; break;
      case Tok::Ge: f = Function::Ge; break;
      default: return lhs;
    }
    take();
    return call(f, loc, {lhs, parse_additive()});
  }

  TermId parse_additive() {
    TermId lhs = parse_multiplicative();
    for (;;) {
      SourceLoc loc = peek().loc;
      if (accept(Tok::Plus)) {
        lhs = call(Function::Add, loc, {lhs, parse_multiplicative()});
      } else if (accept(Tok::Minus)) {
        lhs = call(Function::Sub, loc, {lhs, parse_multiplicative()});
      } else {
        return lhs;
      }
    }
  }

  TermId parse_multiplicative() {
    TermId lhs = parse_unary();
    for (;;) {
      SourceLoc loc = peek().loc;
      if (accept(Tok::Star)) {
        lhs = call(Function::Mul, loc, {lhs, parse_unary()});
      } else if (peek().kind == Tok::Slash) {
        fail(loc, "division is not supported");
      } else {
        return lhs;
      }
    }
  }

  TermId parse_unary() {
    SourceLoc loc = peek().loc;
    if (accept(Tok::Minus)) return call(Function::Neg, loc, {parse_unary()});
    if (accept(Tok::Bang) || accept_word("not")) return call(Function::Not, loc, {parse_unary()});
    return parse_primary();
  }

  TermId literal(Value v, ValueType type, SourceLoc loc) {
    Term t;
    t.kind = Term::Kind::Literal;
    t.index = static_cast<std::uint32_t>(program_.literals.size());
    t.loc = loc;
    program_.literals.push_back(v);
    program_.literal_types.push_back(type);
    return add_term(t);
  }

  TermId parse_primary() {
    const Token& t = peek();
    SourceLoc loc = t.loc;
    switch (t.kind) {
      case Tok::Number: {
        double n = take().number;
        return literal(Value::of_number(n), ValueType::Number, loc);
      }
      case Tok::Length: {
        const Token& v = take();
        return literal(Value::of_length(v.number, v.percent), ValueType::Length, loc);
      }
      case Tok::String: {
        std::string text = take().text;
        return literal(Value::of_string(intern(text)), ValueType::String, loc);
      }
      case Tok::LParen: {
        take();
        TermId inner = parse_expr();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident:
        break;
      default:
        fail(loc, "expected an expression, found " + describe(t));
    }

    std::string word = t.text;
    if (word == "true" || word == "false") {
      take();
      return literal(Value::of_bool(word == "true"), ValueType::Bool, loc);
    }
    if (word == "if") {
      take();
      TermId cond = parse_expr();
      expect_word("then");
      TermId yes = parse_expr();
      expect_word("else");
      TermId no = parse_expr();
      Term term;
      term.kind = Term::Kind::If;
      term.loc = loc;
      return add_term(term, {cond, yes, no});
    }
    if ((word == "attribute" || word == "property") && peek(1).kind == Tok::LBracket) {
      take();
      return parse_bag_read(word == "attribute", loc);
    }
    if (peek(1).kind == Tok::LParen) {
      take();
      return parse_call(word, loc);
    }
    if (peek(1).kind == Tok::Dot || peek(1).kind == Tok::Question) {
      auto n = neighbor_keyword(word);
      if (!n) fail(loc, "unknown neighbor '" + word + "' (expected self, prev, next, parent, first or last)",
                   GrammarError::Kind::Name);
      take();
      if (accept(Tok::Question)) {
        if (*n == Neighbor::Self) fail(loc, "'self?' is always true and not allowed");
        Term term;
        term.kind = Term::Kind::HasNeighbor;
        term.neighbor = *n;
        term.loc = loc;
        return add_term(term);
      }
      take();  // '.'
      if ((is_word("attribute") || is_word("property")) && peek(1).kind == Tok::LBracket) {
        if (*n != Neighbor::Self) fail(loc, "attributes and properties can only be read from self");
        bool attr = take().text == "attribute";
        return parse_bag_read(attr, loc);
      }
      SourceLoc floc = peek().loc;
      std::string field = expect_ident("a field name");
      Term term;
      term.kind = Term::Kind::Field;
      term.neighbor = *n;
      term.loc = loc;
      TermId id = add_term(term);
      field_refs_.push_back({id, field, floc});
      return id;
    }
    fail(loc, "unexpected identifier '" + word + "' in expression", GrammarError::Kind::Name);
  }

  TermId parse_bag_read(bool attribute, SourceLoc loc) {
    expect(Tok::LBracket, "'['");
    std::string name = expect_ident("a name");
    expect(Tok::RBracket, "']'");
    auto& decls = attribute ? program_.attributes : program_.properties;
    auto& index = attribute ? attribute_index_ : property_index_;
    auto it = index.find(name);
    if (it == index.end()) {
      Declaration d;
      d.name = name;
      d.loc = loc;
      it = index.emplace(name, static_cast<std::uint32_t>(decls.size())).first;
      decls.push_back(d);
    }
    Term term;
    term.kind = attribute ? Term::Kind::Attribute : Term::Kind::Property;
    term.index = it->second;
    term.loc = loc;
    return add_term(term);
  }

  TermId parse_call(const std::string& name, SourceLoc loc) {
    const NamedFunction* fn = nullptr;
    for (const auto& f : kNamedFunctions) {
      if (f.name == name) fn = &f;
    }
    if (!fn) fail(loc, "unknown function '" + name + "'", GrammarError::Kind::Name);
    expect(Tok::LParen, "'('");
    std::vector<TermId> kids;
    if (!accept(Tok::RParen)) {
      do {
        kids.push_back(parse_expr());
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    if (kids.size() != fn->arity) {
      fail(loc, "function '" + name + "' takes " + std::to_string(fn->arity) + " argument(s), given " +
                    std::to_string(kids.size()));
    }
    Term term;
    term.kind = Term::Kind::Call;
    term.function = fn->function;
    term.loc = loc;
    term.first_arg = static_cast<std::uint32_t>(program_.args.size());
    term.arg_count = static_cast<std::uint32_t>(kids.size());
    program_.args.insert(program_.args.end(), kids.begin(), kids.end());
    program_.terms.push_back(term);
    return static_cast<TermId>(program_.terms.size() - 1);
  }

  std::uint32_t intern(const std::string& text) {
    for (std::size_t i = 0; i < program_.strings.size(); ++i) {
      if (program_.strings[i] == text) return static_cast<std::uint32_t>(i);
    }
    program_.strings.push_back(text);
    return static_cast<std::uint32_t>(program_.strings.size() - 1);
  }

  // --- resolution --------------------------------------------------------

  void finish(const std::vector<std::pair<std::string, SourceLoc>>& schedule, SourceLoc schedule_loc) {
    for (const auto& ref : field_refs_) {
      auto it = field_index_.find(ref.name);
      if (it == field_index_.end()) {
        fail(ref.loc, "field '" + ref.name + "' is never assigned", GrammarError::Kind::Name);
      }
      program_.terms[ref.term].index = it->second;
    }

    std::vector<std::uint32_t> slot(passes_.size(), UINT32_MAX);
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      const auto& [name, loc] = schedule[i];
      std::size_t found = passes_.size();
      for (std::size_t p = 0; p < passes_.size(); ++p) {
        if (passes_[p].name == name) found = p;
      }
      if (found == passes_.size()) {
        fail(loc, "schedule names unknown pass '" + name + "'", GrammarError::Kind::Name);
      }
      if (slot[found] != UINT32_MAX) {
        fail(loc, "pass '" + name + "' is scheduled twice", GrammarError::Kind::Duplicate);
      }
      slot[found] = static_cast<std::uint32_t>(i);
    }
    for (std::size_t p = 0; p < passes_.size(); ++p) {
      if (slot[p] == UINT32_MAX) {
        fail(schedule.empty() ? passes_[p].loc : schedule_loc,
             "pass '" + passes_[p].name + "' is not scheduled", GrammarError::Kind::Schedule);
      }
    }
    program_.passes.resize(passes_.size());
    for (std::size_t p = 0; p < passes_.size(); ++p) {
      program_.passes[slot[p]] = std::move(passes_[p]);
    }
    for (auto& f : program_.fields) f.pass = slot[f.pass];
    if (program_.passes.size() * 2 > kMaxDirtyBits) {
      fail(schedule_loc, "at most " + std::to_string(kMaxDirtyBits / 2) + " passes are supported",
           GrammarError::Kind::Schedule);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Program program_;
  std::vector<Pass> passes_;
  std::vector<PendingRef> field_refs_;
  std::unordered_map<std::string, FieldId> field_index_;
  std::unordered_map<std::string, std::uint32_t> attribute_index_;
  std::unordered_map<std::string, std::uint32_t> property_index_;
};

}  // namespace

Program parse_program(std::string_view text) {
  Parser parser(Lexer(text).run());
  return parser.run();
}

}  // namespace spineless
