#pragma once

// Compilation of a grounding into a feedforward network of atom, fact, rule
// and aggregation neurons, plus forward evaluation and text exports.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lrnn/activations.hpp"
#include "lrnn/errors.hpp"
#include "lrnn/grounder.hpp"
#include "lrnn/logic.hpp"

namespace lrnn {

enum class NeuronKind { Atom, Fact, Rule, Aggregation };

inline const char* kind_name(NeuronKind k) {
  switch (k) {
    case NeuronKind::Atom: return "atom";
    case NeuronKind::Fact: return "fact";
    case NeuronKind::Rule: return "rule";
    case NeuronKind::Aggregation: return "aggregation";
  }
  return "?";
}

/// Input connection. The weight is a shared parameter when `param` is set,
/// otherwise the fixed `constant` (1 inside rule and aggregation neurons,
/// the fact value for example facts).
struct Edge {
  std::size_t source = 0;
  std::optional<std::size_t> param;
  double constant = 1.0;

  double weight(const ParameterStore& params) const { return param ? params.value(*param) : constant; }
};

struct Neuron {
  std::size_t id = 0;
  NeuronKind kind = NeuronKind::Atom;
  std::string label;
  std::vector<Edge> inputs;
  std::optional<std::size_t> offset;  // conj offset (rule) or disj offset (atom)
  // Atom neuron fed only by facts: plain weighted sum, no g-or.
  bool fact_only = false;
};

struct NeuronCounts {
  std::size_t atoms = 0;
  std::size_t facts = 0;
  std::size_t rules = 0;
  std::size_t aggregations = 0;

  bool operator==(const NeuronCounts&) const = default;
};

struct GroundNetwork {
  std::string example_id;
  std::vector<Neuron> neurons;  // topological order
  std::map<std::string, std::size_t> outputs;  // rendered ground atom -> atom neuron

  NeuronCounts counts() const {
    NeuronCounts c;
    for (const Neuron& n : neurons) {
      switch (n.kind) {
        case NeuronKind::Atom: ++c.atoms; break;
        case NeuronKind::Fact: ++c.facts; break;
        case NeuronKind::Rule: ++c.rules; break;
        case NeuronKind::Aggregation: ++c.aggregations; break;
      }
    }
    return c;
  }

  std::optional<std::size_t> find(const Atom& a) const {
    auto it = outputs.find(render(a));
    if (it == outputs.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

inline std::size_t predicate_level(const Predicate& p, const std::map<Predicate, std::vector<const WeightedClause*>>& rules,
                                   std::map<Predicate, std::size_t>& memo, std::set<Predicate>& active) {
  if (auto it = memo.find(p); it != memo.end()) return it->second;
  if (!active.insert(p).second) throw RecursionError({p.str()}, "recursive template at " + p.str());
  std::size_t level = 0;
  if (auto it = rules.find(p); it != rules.end()) {
    for (const WeightedClause* c : it->second) {
      for (const Atom& b : c->body) level = std::max(level, 1 + predicate_level(b.predicate(), rules, memo, active));
    }
  }
  active.erase(p);
  memo.emplace(p, level);
  return level;
}

inline std::string render_instance(const GroundRuleInstance& inst) {
  std::string s = render(inst.head) + " :- ";
  for (std::size_t i = 0; i < inst.body.size(); ++i) {
    if (i) s += ", ";
    s += render(inst.body[i]);
  }
  return s;
}

}  // namespace detail

/// Builds the ground network. Neurons are laid out by predicate level, from
/// example-level predicates upward, so every edge points forward.
inline GroundNetwork build(const Grounding& grounding, const Template& tpl, std::string example_id = {}) {
  GroundNetwork net;
  net.example_id = std::move(example_id);

  std::map<Predicate, std::vector<const WeightedClause*>> rules;
  for (const WeightedClause& c : tpl.clauses) {
    if (!c.is_fact()) rules[c.head.predicate()].push_back(&c);
  }
  std::map<Predicate, std::size_t> memo;
  std::set<Predicate> active;
  std::map<std::size_t, std::vector<const Atom*>> by_level;
  for (const Atom& a : grounding.model.atoms) {
    by_level[detail::predicate_level(a.predicate(), rules, memo, active)].push_back(&a);
  }

  auto add = [&](NeuronKind kind, std::string label) -> Neuron& {
    Neuron n;
    n.id = net.neurons.size();
    n.kind = kind;
    n.label = std::move(label);
    net.neurons.push_back(std::move(n));
    return net.neurons.back();
  };

  std::map<Atom, std::vector<Edge>> fact_edges;
  for (const GroundFact& f : grounding.ground_facts) {
    const std::size_t id = add(NeuronKind::Fact, render(f.atom)).id;
    fact_edges[f.atom].push_back(Edge{id, f.param, f.value});
  }

  std::map<Atom, std::vector<const GroundRuleInstance*>> by_head;
  for (const GroundRuleInstance& inst : grounding.instances) by_head[inst.head].push_back(&inst);

  for (const auto& [level, atoms] : by_level) {
    for (const Atom* atom : atoms) {
      std::vector<Edge> inputs;
      if (auto it = by_head.find(*atom); it != by_head.end()) {
        const auto& insts = it->second;
        // Instances are sorted by clause, so each clause's group is contiguous.
        for (std::size_t i = 0; i < insts.size();) {
          const std::size_t clause = insts[i]->clause_index;
          std::vector<Edge> rule_ids;
          for (; i < insts.size() && insts[i]->clause_index == clause; ++i) {
            Neuron& r = add(NeuronKind::Rule, detail::render_instance(*insts[i]));
            r.offset = tpl.clauses[clause].conj_offset;
            for (const Atom& b : insts[i]->body) r.inputs.push_back(Edge{net.outputs.at(render(b)), std::nullopt, 1.0});
            rule_ids.push_back(Edge{r.id, std::nullopt, 1.0});
          }
          const WeightedClause& c = tpl.clauses[clause];
          Neuron& agg = add(NeuronKind::Aggregation, c.id.str() + " @ " + render(*atom));
          agg.inputs = std::move(rule_ids);
          inputs.push_back(Edge{agg.id, c.weight, 1.0});
        }
      }
      const bool fact_only = inputs.empty();
      if (auto it = fact_edges.find(*atom); it != fact_edges.end()) {
        inputs.insert(inputs.end(), it->second.begin(), it->second.end());
      }
      Neuron& a = add(NeuronKind::Atom, render(*atom));
      a.inputs = std::move(inputs);
      a.fact_only = fact_only;
      if (!fact_only) a.offset = tpl.disj_offsets.at(atom->predicate());
      net.outputs.emplace(a.label, a.id);
    }
  }
  return net;
}

struct ValueMap {
  std::vector<double> values;
  std::vector<ActivationEval> evals;

  double operator[](std::size_t id) const { return values[id]; }
};

/// Evaluates every neuron in order. For atom neurons the partials are taken
/// with respect to the weighted inputs (weight times source value).
inline ValueMap forward(const GroundNetwork& net, const ParameterStore& params, Family family) {
  ValueMap out;
  out.values.resize(net.neurons.size());
  out.evals.resize(net.neurons.size());
  std::vector<double> xs;
  for (const Neuron& n : net.neurons) {
    ActivationEval e;
    xs.clear();
    for (const Edge& edge : n.inputs) xs.push_back(edge.weight(params) * out.values[edge.source]);
    switch (n.kind) {
      case NeuronKind::Fact:
        e.value = 1.0;
        break;
      case NeuronKind::Rule:
        e = eval_conj(family, xs, n.offset ? params.value(*n.offset) : kDefaultConjOffset);
        break;
      case NeuronKind::Aggregation:
        e = eval_agg(family, xs);
        break;
      case NeuronKind::Atom:
        if (n.fact_only) {
          for (double x : xs) e.value += x;
          e.partials.assign(xs.size(), 1.0);
        } else {
          e = eval_disj(family, xs, n.offset ? params.value(*n.offset) : kDefaultDisjOffset);
        }
        break;
    }
    out.values[n.id] = e.value;
    out.evals[n.id] = std::move(e);
  }
  return out;
}

struct QueryValue {
  double value = 0.0;
  bool missing = true;
  std::optional<std::size_t> neuron;
};

/// Atoms outside the network evaluate to 0 and are flagged missing.
inline QueryValue query_value(const GroundNetwork& net, const ValueMap& values, const Atom& atom) {
  auto id = net.find(atom);
  if (!id) return {};
  return {values[*id], false, id};
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

inline const char* dot_shape(NeuronKind k) {
  switch (k) {
    case NeuronKind::Atom: return "ellipse";
    case NeuronKind::Fact: return "box";
    case NeuronKind::Rule: return "hexagon";
    case NeuronKind::Aggregation: return "invtriangle";
  }
  return "ellipse";
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Graphviz rendering. Shapes: atom ellipse, fact box, rule hexagon,
/// aggregation invtriangle. Shared-parameter edges are labelled with the
/// parameter id, fixed fact weights with their value.
inline std::string export_dot(const GroundNetwork& net, const ParameterStore& params) {
  std::string out = "digraph \"" + detail::dot_escape(net.example_id) + "\" {\n";
  out += "  rankdir=LR;\n";
  for (const Neuron& n : net.neurons) {
    out += "  n" + std::to_string(n.id) + " [label=\"" + detail::dot_escape(n.label) + "\", shape=" +
           detail::dot_shape(n.kind) + "];\n";
  }
  for (const Neuron& n : net.neurons) {
    for (const Edge& e : n.inputs) {
      out += "  n" + std::to_string(e.source) + " -> n" + std::to_string(n.id);
      if (e.param) {
        out += " [label=\"" + detail::dot_escape(params[*e.param].id) + "\"]";
      } else if (n.kind == NeuronKind::Atom) {
        out += " [label=\"" + format_double(e.constant) + "\"]";
      }
      out += ";\n";
    }
  }
  out += "}\n";
  return out;
}

/// One row per neuron: id,kind,label,value.
inline std::string values_csv(const GroundNetwork& net, const ValueMap& values) {
  std::string out = "id,kind,label,value\n";
  for (const Neuron& n : net.neurons) {
    out += std::to_string(n.id) + "," + kind_name(n.kind) + "," + detail::csv_field(n.label) + "," +
           format_double(values[n.id]) + "\n";
  }
  return out;
}

}  // namespace lrnn
