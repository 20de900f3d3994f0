#pragma once

// Least Herbrand model by semi-naive bottom-up evaluation, and the grounding
// of a template against one example: every rule instance whose body is true
// in the model.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lrnn/errors.hpp"
#include "lrnn/logic.hpp"

namespace lrnn {

inline constexpr std::size_t kDefaultCapacity = 10'000'000;

struct GroundingOptions {
  std::size_t capacity = kDefaultCapacity;
};

/// A weighted ground fact. Template facts carry the clause parameter;
/// example facts carry a fixed value.
struct GroundFact {
  Atom atom;
  double value = 1.0;
  std::optional<std::size_t> param;

  bool operator==(const GroundFact&) const = default;
};

struct Example {
  std::string id;
  std::vector<GroundFact> facts;
};

struct HerbrandModel {
  std::set<Atom> atoms;
  std::set<std::string> universe;

  bool contains(const Atom& a) const { return atoms.count(a) > 0; }
  std::size_t size() const { return atoms.size(); }
};

struct GroundRuleInstance {
  std::size_t clause_index = 0;  // into Template::clauses
  ClauseId source;
  Substitution theta;
  Atom head;
  std::vector<Atom> body;
};

struct Grounding {
  HerbrandModel model;
  std::vector<GroundRuleInstance> instances;
  std::vector<GroundFact> ground_facts;
};

namespace detail {

using Tuple = std::vector<std::string>;

struct TupleHash {
  std::size_t operator()(const Tuple& t) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& s : t) h ^= std::hash<std::string>{}(s) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

/// Append-only relation. Tuples [0, old_end) were known before the last
/// round, [old_end, end) are the current delta.
struct Relation {
  std::vector<Tuple> tuples;
  std::unordered_set<Tuple, TupleHash> members;
  std::unordered_map<std::string, std::vector<std::uint32_t>> by_arg;
  std::size_t old_end = 0;
  std::size_t end = 0;

  static std::string key(std::size_t pos, const std::string& value) {
    return std::to_string(pos) + '\x1f' + value;
  }

  bool insert(Tuple t) {
    if (!members.insert(t).second) return false;
    const auto idx = static_cast<std::uint32_t>(tuples.size());
    for (std::size_t i = 0; i < t.size(); ++i) by_arg[key(i, t[i])].push_back(idx);
    tuples.push_back(std::move(t));
    return true;
  }
};

// Argument slot of a compiled atom: a constant, or an index into the
// clause's variable table.
struct Slot {
  std::optional<std::string> constant;
  std::size_t var = 0;
};

struct CompiledAtom {
  Predicate pred;
  std::vector<Slot> slots;
};

struct CompiledRule {
  std::size_t clause_index = 0;
  std::vector<std::string> vars;  // head variables first, then body
  CompiledAtom head;
  std::vector<CompiledAtom> body;
  std::vector<std::size_t> head_only;  // var indices not bound by the body
};

inline CompiledAtom compile_atom(const Atom& a, const std::vector<std::string>& vars) {
  CompiledAtom out{a.predicate(), {}};
  for (const Term& t : a.args) {
    Slot s;
    if (t.is_variable()) {
      s.var = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), t.name) - vars.begin());
    } else {
      s.constant = t.name;
    }
    out.slots.push_back(std::move(s));
  }
  return out;
}

inline CompiledRule compile_rule(const WeightedClause& c, std::size_t index) {
  CompiledRule r;
  r.clause_index = index;
  std::vector<Atom> all{c.head};
  all.insert(all.end(), c.body.begin(), c.body.end());
  r.vars = variables_of(all);
  r.head = compile_atom(c.head, r.vars);
  for (const Atom& b : c.body) r.body.push_back(compile_atom(b, r.vars));
  const auto body_vars = variables_of(c.body);
  for (std::size_t v = 0; v < r.vars.size(); ++v) {
    if (std::find(body_vars.begin(), body_vars.end(), r.vars[v]) == body_vars.end()) r.head_only.push_back(v);
  }
  return r;
}

using Binding = std::vector<std::optional<std::string>>;

struct Range {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

class Database {
 public:
  explicit Database(std::size_t capacity) : capacity_(capacity) {}

  Relation* find(const Predicate& p) {
    auto it = rels_.find(p);
    return it == rels_.end() ? nullptr : &it->second;
  }

  bool add(const Predicate& p, Tuple t) {
    if (!rels_[p].insert(std::move(t))) return false;
    if (++total_ > capacity_) {
      throw CapacityError("ground model exceeds capacity of " + std::to_string(capacity_) + " atoms");
    }
    return true;
  }

  bool contains(const Predicate& p, const Tuple& t) const {
    auto it = rels_.find(p);
    return it != rels_.end() && it->second.members.count(t);
  }

  /// Closes the current round: the previous delta becomes old, everything
  /// added since becomes the new delta. Returns false when nothing was added.
  bool advance() {
    bool grew = false;
    for (auto& [p, r] : rels_) {
      r.old_end = r.end;
      r.end = r.tuples.size();
      grew = grew || r.end > r.old_end;
    }
    return grew;
  }

  std::map<Predicate, Relation>& relations() { return rels_; }
  std::size_t total() const { return total_; }

 private:
  std::map<Predicate, Relation> rels_;
  std::size_t capacity_;
  std::size_t total_ = 0;
};

template <typename Emit>
void join(Database& db, const CompiledRule& rule, const std::vector<Range>& ranges, std::size_t at,
          Binding& binding, Emit&& emit) {
  if (at == rule.body.size()) {
    emit(binding);
    return;
  }
  const CompiledAtom& atom = rule.body[at];
  Relation* rel = db.find(atom.pred);
  if (!rel) return;
  const Range range = ranges[at];
  if (range.lo >= range.hi) return;

  auto bound_value = [&](const Slot& s) -> const std::string* {
    if (s.constant) return &*s.constant;
    if (binding[s.var]) return &*binding[s.var];
    return nullptr;
  };

  auto try_tuple = [&](std::size_t idx) {
    // Stable: tuples are only appended between rounds.
    const Tuple& t = rel->tuples[idx];
    std::vector<std::size_t> newly;
    bool ok = true;
    for (std::size_t i = 0; i < atom.slots.size() && ok; ++i) {
      const Slot& s = atom.slots[i];
      if (const std::string* v = bound_value(s)) {
        ok = (*v == t[i]);
      } else {
        binding[s.var] = t[i];
        newly.push_back(s.var);
      }
    }
    if (ok) join(db, rule, ranges, at + 1, binding, emit);
    for (std::size_t v : newly) binding[v].reset();
  };

  const std::vector<std::uint32_t>* candidates = nullptr;
  for (std::size_t i = 0; i < atom.slots.size(); ++i) {
    if (const std::string* v = bound_value(atom.slots[i])) {
      auto it = rel->by_arg.find(Relation::key(i, *v));
      if (it == rel->by_arg.end()) return;
      candidates = &it->second;
      break;
    }
  }
  if (candidates) {
    auto first = std::lower_bound(candidates->begin(), candidates->end(), range.lo);
    for (auto it = first; it != candidates->end() && *it < range.hi; ++it) try_tuple(*it);
  } else {
    for (std::size_t idx = range.lo; idx < range.hi; ++idx) try_tuple(idx);
  }
}

/// Calls emit(binding) for each way of filling the head-only variables.
template <typename Emit>
void complete_head(const CompiledRule& rule, const std::vector<std::string>& universe, Binding& binding,
                   std::size_t k, Emit&& emit) {
  if (k == rule.head_only.size()) {
    emit(binding);
    return;
  }
  const std::size_t v = rule.head_only[k];
  for (const std::string& c : universe) {
    binding[v] = c;
    complete_head(rule, universe, binding, k + 1, emit);
  }
  binding[v].reset();
}

inline Tuple instantiate(const CompiledAtom& a, const Binding& b) {
  Tuple t;
  t.reserve(a.slots.size());
  for (const Slot& s : a.slots) t.push_back(s.constant ? *s.constant : *b[s.var]);
  return t;
}

inline Atom to_atom(const Predicate& p, const Tuple& t) {
  Atom a{p.name, {}};
  for (const auto& c : t) a.args.push_back(Term::constant(c));
  return a;
}

inline std::vector<std::string> collect_universe(const Template& tpl, const Example& ex) {
  std::set<std::string> u;
  auto add = [&](const Atom& a) {
    for (const Term& t : a.args) {
      if (t.is_constant()) u.insert(t.name);
    }
  };
  for (const WeightedClause& c : tpl.clauses) {
    add(c.head);
    for (const Atom& b : c.body) add(b);
  }
  for (const GroundFact& f : ex.facts) add(f.atom);
  return {u.begin(), u.end()};
}

/// Ground facts of the template (non-ground facts range over the universe)
/// followed by the example's facts, in source order.
inline std::vector<GroundFact> collect_facts(const Template& tpl, const Example& ex,
                                             const std::vector<std::string>& universe,
                                             std::size_t capacity) {
  std::vector<GroundFact> out;
  for (std::size_t ci = 0; ci < tpl.clauses.size(); ++ci) {
    const WeightedClause& c = tpl.clauses[ci];
    if (!c.is_fact()) continue;
    const CompiledRule r = compile_rule(c, ci);
    Binding b(r.vars.size());
    complete_head(r, universe, b, 0, [&](const Binding& full) {
      if (out.size() >= capacity) throw CapacityError("ground facts exceed capacity");
      out.push_back({to_atom(r.head.pred, instantiate(r.head, full)), tpl.params.value(c.weight), c.weight});
    });
  }
  for (const GroundFact& f : ex.facts) {
    if (!f.atom.is_ground()) throw Error("example fact is not ground: " + render(f.atom));
    out.push_back(f);
  }
  return out;
}

struct Fixpoint {
  Database db;
  std::vector<std::string> universe;
  std::vector<GroundFact> facts;
  std::vector<CompiledRule> rules;
};

inline Fixpoint run_fixpoint(const Template& tpl, const Example& ex, const GroundingOptions& opts) {
  Fixpoint fp{Database(opts.capacity), collect_universe(tpl, ex), {}, {}};
  fp.facts = collect_facts(tpl, ex, fp.universe, opts.capacity);
  for (std::size_t ci = 0; ci < tpl.clauses.size(); ++ci) {
    if (!tpl.clauses[ci].is_fact()) fp.rules.push_back(compile_rule(tpl.clauses[ci], ci));
  }
  for (const GroundFact& f : fp.facts) {
    Tuple t;
    for (const Term& term : f.atom.args) t.push_back(term.name);
    fp.db.add(f.atom.predicate(), std::move(t));
  }

  // Derived tuples are buffered per round so the ranges used by the joins
  // stay fixed while a round runs.
  while (fp.db.advance()) {
    std::vector<std::pair<Predicate, Tuple>> pending;
    std::map<Predicate, std::unordered_set<Tuple, TupleHash>> seen;
    for (const CompiledRule& rule : fp.rules) {
      for (std::size_t i = 0; i < rule.body.size(); ++i) {
        Relation* ri = fp.db.find(rule.body[i].pred);
        if (!ri || ri->old_end == ri->end) continue;
        std::vector<Range> ranges(rule.body.size());
        bool empty = false;
        for (std::size_t j = 0; j < rule.body.size(); ++j) {
          Relation* rj = fp.db.find(rule.body[j].pred);
          if (!rj) {
            empty = true;
            break;
          }
          if (j < i) ranges[j] = {0, rj->old_end};
          else if (j == i) ranges[j] = {rj->old_end, rj->end};
          else ranges[j] = {0, rj->end};
        }
        if (empty) continue;
        Binding b(rule.vars.size());
        join(fp.db, rule, ranges, 0, b, [&](Binding& body_bound) {
          complete_head(rule, fp.universe, body_bound, 0, [&](const Binding& full) {
            Tuple t = instantiate(rule.head, full);
            if (fp.db.contains(rule.head.pred, t)) return;
            if (!seen[rule.head.pred].insert(t).second) return;
            if (fp.db.total() + pending.size() >= opts.capacity) {
              throw CapacityError("ground model exceeds capacity of " + std::to_string(opts.capacity) + " atoms");
            }
            pending.emplace_back(rule.head.pred, std::move(t));
          });
        });
      }
    }
    for (auto& [p, t] : pending) fp.db.add(p, std::move(t));
  }
  return fp;
}

inline HerbrandModel to_model(Fixpoint& fp) {
  HerbrandModel m;
  m.universe.insert(fp.universe.begin(), fp.universe.end());
  for (auto& [p, r] : fp.db.relations()) {
    for (const Tuple& t : r.tuples) m.atoms.insert(to_atom(p, t));
  }
  return m;
}

}  // namespace detail

/// Least Herbrand model of the template's clauses (weights ignored) together
/// with the example's facts.
inline HerbrandModel least_herbrand_model(const Template& tpl, const Example& ex,
                                          const GroundingOptions& opts = {}) {
  auto fp = detail::run_fixpoint(tpl, ex, opts);
  return detail::to_model(fp);
}

/// All active rule instances, ordered by clause then lexicographically by
/// the substitution's values (clause variables in order of first occurrence,
/// head first).
inline Grounding ground(const Template& tpl, const Example& ex, const GroundingOptions& opts = {}) {
  auto fp = detail::run_fixpoint(tpl, ex, opts);
  Grounding g;
  g.model = detail::to_model(fp);
  g.ground_facts = std::move(fp.facts);

  for (const detail::CompiledRule& rule : fp.rules) {
    std::vector<detail::Range> ranges;
    bool empty = false;
    for (const auto& b : rule.body) {
      detail::Relation* r = fp.db.find(b.pred);
      if (!r) {
        empty = true;
        break;
      }
      ranges.push_back({0, r->tuples.size()});
    }
    if (empty) continue;
    std::set<std::vector<std::string>> thetas;
    detail::Binding b(rule.vars.size());
    detail::join(fp.db, rule, ranges, 0, b, [&](detail::Binding& body_bound) {
      detail::complete_head(rule, fp.universe, body_bound, 0, [&](const detail::Binding& full) {
        std::vector<std::string> values;
        values.reserve(full.size());
        for (const auto& v : full) values.push_back(*v);
        thetas.insert(std::move(values));
        if (g.instances.size() + thetas.size() > opts.capacity) {
          throw CapacityError("grounding exceeds capacity of " + std::to_string(opts.capacity) + " instances");
        }
      });
    });
    const WeightedClause& clause = tpl.clauses[rule.clause_index];
    for (const auto& values : thetas) {
      GroundRuleInstance inst;
      inst.clause_index = rule.clause_index;
      inst.source = clause.id;
      for (std::size_t v = 0; v < rule.vars.size(); ++v) inst.theta.emplace(rule.vars[v], values[v]);
      inst.head = lrnn::apply(inst.theta, clause.head);
      for (const Atom& a : clause.body) inst.body.push_back(lrnn::apply(inst.theta, a));
      g.instances.push_back(std::move(inst));
    }
  }
  return g;
}

}  // namespace lrnn
