#pragma once

// Function-free first-order syntax, the weighted clause language and its
// parser, substitutions, and the non-recursiveness check.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "lrnn/activations.hpp"
#include "lrnn/errors.hpp"

namespace lrnn {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

struct Term {
  enum class Kind { Constant, Variable };
  Kind kind = Kind::Constant;
  // Quoted constants keep their quotes, so rendering is the identity.
  std::string name;

  static Term constant(std::string n) { return {Kind::Constant, std::move(n)}; }
  static Term variable(std::string n) { return {Kind::Variable, std::move(n)}; }

  bool is_variable() const { return kind == Kind::Variable; }
  bool is_constant() const { return kind == Kind::Constant; }

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;
};

struct Predicate {
  std::string name;
  std::size_t arity = 0;

  std::string str() const { return name + "/" + std::to_string(arity); }

  auto operator<=>(const Predicate&) const = default;
  bool operator==(const Predicate&) const = default;
};

struct Atom {
  std::string name;
  std::vector<Term> args;

  Predicate predicate() const { return {name, args.size()}; }

  bool is_ground() const {
    return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
  }

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

inline std::string render(const Atom& a) {
  std::string out = a.name;
  if (!a.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) out += ',';
      out += a.args[i].name;
    }
    out += ')';
  }
  return out;
}

/// Variable name -> constant name.
using Substitution = std::map<std::string, std::string>;

inline Atom apply(const Substitution& s, const Atom& a) {
  Atom out = a;
  for (Term& t : out.args) {
    if (!t.is_variable()) continue;
    if (auto it = s.find(t.name); it != s.end()) t = Term::constant(it->second);
  }
  return out;
}

/// Distinct variables of the atoms, in order of first occurrence.
inline std::vector<std::string> variables_of(std::span<const Atom> atoms) {
  std::vector<std::string> vars;
  for (const Atom& a : atoms) {
    for (const Term& t : a.args) {
      if (t.is_variable() && std::find(vars.begin(), vars.end(), t.name) == vars.end()) {
        vars.push_back(t.name);
      }
    }
  }
  return vars;
}

struct ClauseId {
  std::string file;
  std::size_t ordinal = 0;

  std::string str() const { return file + ":" + std::to_string(ordinal); }

  auto operator<=>(const ClauseId&) const = default;
  bool operator==(const ClauseId&) const = default;
};

enum class ParamKind { ClauseWeight, ConjOffset, DisjOffset };

struct Parameter {
  std::string id;
  double value = 0.0;
  bool learnable = false;
  ParamKind kind = ParamKind::ClauseWeight;

  bool operator==(const Parameter&) const = default;
};

/// Dense store of named real parameters. Indices are stable once assigned;
/// ground networks refer to parameters by index.
class ParameterStore {
 public:
  std::size_t add(Parameter p) {
    if (index_.count(p.id)) throw Error("duplicate parameter id: " + p.id);
    index_.emplace(p.id, params_.size());
    params_.push_back(std::move(p));
    return params_.size() - 1;
  }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }

  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& operator[](std::size_t i) { return params_[i]; }

  double value(std::size_t i) const { return params_[i].value; }
  void set_value(std::size_t i, double v) { params_[i].value = v; }

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(params_.size());
    for (const auto& p : params_) v.push_back(p.value);
    return v;
  }

  void assign(std::span<const double> values) {
    if (values.size() != params_.size()) throw Error("parameter vector size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) params_[i].value = values[i];
  }

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  bool operator==(const ParameterStore& o) const { return params_ == o.params_; }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct WeightedClause {
  ClauseId id;
  Atom head;
  std::vector<Atom> body;
  std::size_t weight = 0;  // index into Template::params
  std::optional<std::size_t> conj_offset;

  bool is_fact() const { return body.empty(); }

  bool operator==(const WeightedClause&) const = default;
};

struct Template {
  std::vector<WeightedClause> clauses;
  ParameterStore params;
  // Atom-neuron offset per rule-defined head predicate.
  std::map<Predicate, std::size_t> disj_offsets;
  Family family = Family::MaxSigmoid;

  bool operator==(const Template&) const = default;
};

// ---------------------------------------------------------------------------
// Lexing and parsing

namespace detail {

enum class Tok {
  End, Ident, Variable, Quoted, Number, Question, Implies, Weighs,
  LParen, RParen, Comma, Period, Directive
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  Token next() {
    skip_space_and_comments();
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (std::islower(static_cast<unsigned char>(c))) {
      t.kind = Tok::Ident;
      t.text = take_word();
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      t.kind = Tok::Variable;
      t.text = take_word();
    } else if (c == '\'' || c == '"') {
      t.kind = Tok::Quoted;
      t.text = take_quoted(t);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') {
      t.kind = Tok::Number;
      t.text = take_number(t);
    } else if (c == '?') {
      t.kind = Tok::Question;
      advance();
    } else if (c == ':' && peek(1) == ':') {
      t.kind = Tok::Weighs;
      advance(2);
    } else if (c == ':' && peek(1) == '-') {
      t.kind = Tok::Implies;
      advance(2);
    } else if (c == '(') {
      t.kind = Tok::LParen;
      advance();
    } else if (c == ')') {
      t.kind = Tok::RParen;
      advance();
    } else if (c == ',') {
      t.kind = Tok::Comma;
      advance();
    } else if (c == '.') {
      t.kind = Tok::Period;
      advance();
    } else if (c == '#') {
      t.kind = Tok::Directive;
      advance();
      std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] != '\n' && text_[pos_] != '%') advance();
      t.text = trim(text_.substr(start, pos_ - start));
    } else {
      fail(t, std::string("unexpected character '") + c + "'");
    }
    return t;
  }

  [[noreturn]] void fail(const Token& at, const std::string& what) const {
    throw ParseError(source_, at.line, at.column, what);
  }

 private:
  char peek(std::size_t k) const { return pos_ + k < text_.size() ? text_[pos_ + k] : '\0'; }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string take_word() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      advance();
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string take_quoted(const Token& at) {
    const char q = text_[pos_];
    std::size_t start = pos_;
    advance();
    while (pos_ < text_.size() && text_[pos_] != q) {
      if (text_[pos_] == '\n') fail(at, "unterminated quoted constant");
      advance();
    }
    if (pos_ >= text_.size()) fail(at, "unterminated quoted constant");
    advance();
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string take_number(const Token& at) {
    std::size_t start = pos_;
    if (text_[pos_] == '-' || text_[pos_] == '+') advance();
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        advance();
        ++n;
      }
      return n;
    };
    if (digits() == 0) fail(at, "malformed number");
    // A '.' only belongs to the number when a digit follows; otherwise it ends a clause.
    if (peek(0) == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      advance();
      digits();
    }
    if (peek(0) == 'e' || peek(0) == 'E') {
      std::size_t save_pos = pos_, save_line = line_, save_col = col_;
      advance();
      if (peek(0) == '+' || peek(0) == '-') advance();
      if (digits() == 0) {
        pos_ = save_pos;
        line_ = save_line;
        col_ = save_col;
      }
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  static std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

inline double parse_decimal(const Lexer& lex, const Token& t) {
  std::string_view s = t.text;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) lex.fail(t, "malformed number '" + t.text + "'");
  return v;
}

}  // namespace detail

/// One statement of the clause language: either a weighted clause or a
/// `#name argument` directive line.
struct Statement {
  struct Clause {
    std::optional<double> weight;  // nullopt for '?'
    Atom head;
    std::vector<Atom> body;
  };
  struct Directive {
    std::string name;
    std::string argument;
  };

  std::variant<Clause, Directive> item;
  std::size_t line = 0;
  std::size_t column = 0;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, std::string source) : lex_(text, std::move(source)) { bump(); }

  std::vector<Statement> statements() {
    std::vector<Statement> out;
    while (cur_.kind != Tok::End) out.push_back(statement());
    return out;
  }

 private:
  void bump() { cur_ = lex_.next(); }

  Token expect(Tok k, const char* what) {
    if (cur_.kind != k) lex_.fail(cur_, std::string("expected ") + what + describe());
    Token t = cur_;
    bump();
    return t;
  }

  std::string describe() const {
    if (cur_.kind == Tok::End) return ", found end of input";
    if (!cur_.text.empty()) return ", found '" + cur_.text + "'";
    return "";
  }

  Statement statement() {
    Statement st;
    st.line = cur_.line;
    st.column = cur_.column;
    if (cur_.kind == Tok::Directive) {
      Statement::Directive d;
      const std::string& body = cur_.text;
      auto sp = body.find_first_of(" \t");
      d.name = body.substr(0, sp);
      if (sp != std::string::npos) {
        auto b = body.find_first_not_of(" \t", sp);
        if (b != std::string::npos) d.argument = body.substr(b);
      }
      if (d.name.empty()) lex_.fail(cur_, "empty directive");
      bump();
      st.item = std::move(d);
      return st;
    }

    Statement::Clause c;
    if (cur_.kind == Tok::Question) {
      bump();
    } else if (cur_.kind == Tok::Number) {
      c.weight = parse_decimal(lex_, cur_);
      bump();
    } else {
      lex_.fail(cur_, "expected weight (decimal or '?')" + describe());
    }
    expect(Tok::Weighs, "'::'");
    c.head = atom();
    if (cur_.kind == Tok::Implies) {
      bump();
      c.body.push_back(atom());
      while (cur_.kind == Tok::Comma) {
        bump();
        c.body.push_back(atom());
      }
    }
    expect(Tok::Period, "'.'");
    st.item = std::move(c);
    return st;
  }

  Atom atom() {
    Token name = expect(Tok::Ident, "predicate name");
    Atom a;
    a.name = name.text;
    if (cur_.kind == Tok::LParen) {
      bump();
      a.args.push_back(term());
      while (cur_.kind == Tok::Comma) {
        bump();
        a.args.push_back(term());
      }
      expect(Tok::RParen, "')'");
    }
    return a;
  }

  Term term() {
    switch (cur_.kind) {
      case Tok::Ident:
      case Tok::Quoted: {
        Term t = Term::constant(cur_.text);
        bump();
        if (cur_.kind == Tok::LParen) lex_.fail(cur_, "function symbols are not supported");
        return t;
      }
      case Tok::Variable: {
        Term t = Term::variable(cur_.text);
        bump();
        return t;
      }
      default:
        lex_.fail(cur_, "expected constant or variable" + describe());
    }
  }

  Lexer lex_;
  Token cur_;
};

}  // namespace detail

inline std::vector<Statement> parse_statements(std::string_view text, const std::string& source = "<input>") {
  return detail::Parser(text, source).statements();
}

/// Registers conjunction offsets for rules and disjunction offsets for
/// rule-defined head predicates. Called once after the clauses are in place.
inline void attach_offsets(Template& t) {
  for (WeightedClause& c : t.clauses) {
    if (c.is_fact()) continue;
    c.conj_offset = t.params.add(
        {c.id.str() + ":conj", kDefaultConjOffset, true, ParamKind::ConjOffset});
    if (!t.disj_offsets.count(c.head.predicate())) {
      t.disj_offsets.emplace(
          c.head.predicate(),
          t.params.add({c.id.str() + ":disj", kDefaultDisjOffset, true, ParamKind::DisjOffset}));
    }
  }
}

/// Parses the template language. `file` becomes the first half of every
/// clause id; ordinals count clauses from 1 in source order.
inline Template parse_template(std::string_view text, const std::string& file = "template") {
  Template t;
  std::size_t ordinal = 0;
  for (Statement& st : parse_statements(text, file)) {
    auto* c = std::get_if<Statement::Clause>(&st.item);
    if (!c) {
      throw ParseError(file, st.line, st.column, "directives are not allowed in templates");
    }
    WeightedClause wc;
    wc.id = {file, ++ordinal};
    wc.head = std::move(c->head);
    wc.body = std::move(c->body);
    wc.weight = t.params.add(
        {wc.id.str(), c->weight.value_or(0.0), !c->weight.has_value(), ParamKind::ClauseWeight});
    t.clauses.push_back(std::move(wc));
  }
  attach_offsets(t);
  return t;
}

inline std::string render(const WeightedClause& c, const ParameterStore& params) {
  const Parameter& w = params[c.weight];
  std::string out = w.learnable ? "?" : format_double(w.value);
  out += " :: ";
  out += render(c.head);
  if (!c.body.empty()) {
    out += " :- ";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i) out += ", ";
      out += render(c.body[i]);
    }
  }
  out += '.';
  return out;
}

inline std::string render(const Template& t) {
  std::string out;
  for (const WeightedClause& c : t.clauses) {
    out += render(c, t.params);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Non-recursiveness

/// Predicates in an order where every rule head precedes its body predicates.
struct PredicateOrdering {
  std::vector<Predicate> order;

  std::optional<std::size_t> position(const Predicate& p) const {
    auto it = std::find(order.begin(), order.end(), p);
    if (it == order.end()) return std::nullopt;
    return static_cast<std::size_t>(it - order.begin());
  }
};

inline PredicateOrdering check_nonrecursive(const Template& t) {
  std::set<Predicate> nodes;
  std::map<Predicate, std::set<Predicate>> succ;  // head -> body predicates
  std::map<Predicate, std::set<Predicate>> pred;
  for (const WeightedClause& c : t.clauses) {
    nodes.insert(c.head.predicate());
    for (const Atom& b : c.body) {
      nodes.insert(b.predicate());
      succ[c.head.predicate()].insert(b.predicate());
      pred[b.predicate()].insert(c.head.predicate());
    }
  }

  std::map<Predicate, std::size_t> indegree;
  for (const Predicate& p : nodes) indegree[p] = pred[p].size();
  std::set<Predicate> ready;
  for (const auto& [p, d] : indegree) {
    if (d == 0) ready.insert(p);
  }
  PredicateOrdering out;
  while (!ready.empty()) {
    Predicate p = *ready.begin();
    ready.erase(ready.begin());
    out.order.push_back(p);
    for (const Predicate& q : succ[p]) {
      if (--indegree[q] == 0) ready.insert(q);
    }
  }
  if (out.order.size() == nodes.size()) return out;

  // Every leftover predicate has a leftover predecessor, so walking
  // predecessors from any of them must revisit a node.
  std::set<Predicate> left;
  for (const auto& [p, d] : indegree) {
    if (d > 0) left.insert(p);
  }
  std::vector<Predicate> walk{*left.begin()};
  std::map<Predicate, std::size_t> seen{{walk.back(), 0}};
  while (true) {
    const Predicate& cur = walk.back();
    const Predicate* next = nullptr;
    for (const Predicate& q : pred[cur]) {
      if (left.count(q)) {
        next = &q;
        break;
      }
    }
    Predicate nx = *next;
    if (auto it = seen.find(nx); it != seen.end()) {
      std::vector<Predicate> cyc(walk.begin() + static_cast<std::ptrdiff_t>(it->second), walk.end());
      std::reverse(cyc.begin(), cyc.end());  // predecessor walk -> head-to-body order
      std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
      std::vector<std::string> names;
      std::string msg = "recursive template: ";
      for (const Predicate& p : cyc) {
        names.push_back(p.str());
        msg += p.str() + " -> ";
      }
      msg += cyc.front().str();
      throw RecursionError(std::move(names), msg);
    }
    seen.emplace(nx, walk.size());
    walk.push_back(nx);
  }
}

}  // namespace lrnn
