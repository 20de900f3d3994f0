#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "common.hpp"
#include "dot_check.hpp"
#include "oracles.hpp"

using namespace lrnn;
using testing_support::atom;
using testing_support::load_example;
using testing_support::load_template;
using testing_support::network;

TEST(Build, FamilyCounts) {
  const Template t = load_template("family.lrnn");
  const GroundNetwork net = network(t, load_example("family.examples"));
  EXPECT_EQ(net.counts(), (NeuronCounts{5, 3, 2, 2}));
  // one aggregation per ground mother atom, none for father
  for (const Neuron& n : net.neurons) {
    if (n.kind == NeuronKind::Aggregation) {
      EXPECT_NE(n.label.find("mother("), std::string::npos);
    }
  }
  EXPECT_FALSE(net.find(atom("father(bob,alice)")));
}

TEST(Build, EmptyGrounding) {
  const Template t = parse_template("1 :: a(X) :- b(X).");
  const GroundNetwork net = network(t, Example{"e", {}});
  EXPECT_TRUE(net.neurons.empty());
  EXPECT_TRUE(net.outputs.empty());
}

TEST(Build, TopologicalOrder) {
  for (const char* tpl : {"family.lrnn", "explosive.lrnn", "cnn.lrnn", "bright.lrnn", "generic_chain.lrnn"}) {
    const Template t = load_template(tpl);
    for (const char* exs : {"molecules.examples", "image.examples", "bright.examples", "generic_chain.examples"}) {
      for (const Example& ex : parse_examples(testing_support::fixture_text(exs))) {
        const GroundNetwork net = network(t, ex);
        for (const Neuron& n : net.neurons) {
          EXPECT_EQ(&n - net.neurons.data(), static_cast<std::ptrdiff_t>(n.id));
          for (const Edge& e : n.inputs) EXPECT_LT(e.source, n.id);
        }
      }
    }
  }
}

TEST(Build, WaterSharesFeatureWeight) {
  const Template t = load_template("explosive.lrnn");
  const Example water = parse_examples(testing_support::fixture_text("molecules.examples")).at(1);
  const GroundNetwork net = network(t, water);
  const std::size_t w_f1 = t.clauses.back().weight;
  std::vector<const Neuron*> rules;
  const Neuron* agg = nullptr;
  for (const Neuron& n : net.neurons) {
    if (n.kind == NeuronKind::Rule && n.label.rfind("explosive :-", 0) == 0) rules.push_back(&n);
    if (n.kind == NeuronKind::Aggregation && n.label.find("@ explosive") != std::string::npos) agg = &n;
  }
  ASSERT_EQ(rules.size(), 4u);
  ASSERT_NE(agg, nullptr);
  ASSERT_EQ(agg->inputs.size(), 4u);
  for (const Edge& e : agg->inputs) {
    EXPECT_TRUE(std::any_of(rules.begin(), rules.end(), [&](const Neuron* r) { return r->id == e.source; }));
  }
  const Neuron& out = net.neurons[*net.find(atom("explosive"))];
  ASSERT_EQ(out.inputs.size(), 1u);
  EXPECT_EQ(out.inputs[0].source, agg->id);
  EXPECT_EQ(out.inputs[0].param, w_f1);
}

namespace {

// Hand-evaluated fuzzy semantics of the bright-edge template on the 4-cycle.
double bright_edge_oracle(const std::map<std::string, std::pair<std::string, std::string>>& edges,
                          const std::map<std::string, std::string>& colour) {
  const std::map<std::string, double> w{{"yellow", 2.0}, {"red", 1.0}, {"blue", 0.5}};
  double best = 0.0;
  for (const auto& [e, uv] : edges) {
    const double bu = w.at(colour.at(uv.first));
    const double bv = w.at(colour.at(uv.second));
    best = std::max(best, 1.0 * std::min({1.0, bu, bv}));
  }
  return 1.0 * best;
}

}  // namespace

TEST(Forward, GodelBrightEdgeMatchesEnumeration) {
  const Template t = load_template("bright.lrnn", Family::Godel);
  const Example ex = load_example("bright.examples");
  const GroundNetwork net = network(t, ex);
  const ValueMap v = forward(net, t.params, Family::Godel);
  const double expected = bright_edge_oracle(
      {{"e1", {"v1", "v2"}}, {"e2", {"v2", "v3"}}, {"e3", {"v3", "v4"}}, {"e4", {"v4", "v1"}}},
      {{"v1", "red"}, {"v2", "blue"}, {"v3", "yellow"}, {"v4", "yellow"}});
  EXPECT_EQ(v[*net.find(atom("hasBrightEdge"))], expected);
  EXPECT_EQ(expected, 1.0);
}

TEST(Forward, GodelAgreesWithFuzzyDatalogOnRandomPrograms) {
  std::mt19937_64 rng(555);
  for (int i = 0; i < 100; ++i) {
    oracle::GenOptions o;
    o.head_only_vars = false;
    const oracle::RProgram p = oracle::random_program(rng, o);
    const Template t = parse_template(oracle::template_text(p));
    const Example ex = parse_examples(oracle::example_text(p)).at(0);
    const GroundNetwork net = network(t, ex);
    const ValueMap v = forward(net, t.params, Family::Godel);
    for (const auto& [a, expected] : oracle::godel_values(p)) {
      ASSERT_TRUE(net.outputs.count(a)) << a;
      EXPECT_NEAR(v[net.outputs.at(a)], expected, 1e-12) << a << "\n" << oracle::template_text(p);
    }
  }
}

TEST(Forward, HighPressureMaxSigmoid) {
  const Template t = load_template("pressure.lrnn");
  const GroundNetwork net = network(t, load_example("pressure.examples"));
  const ValueMap v = forward(net, t.params, Family::MaxSigmoid);
  const double alice = v[*net.find(atom("highPressure(alice)"))];
  const double bob = v[*net.find(atom("highPressure(bob)"))];
  EXPECT_GT(alice, bob);
  // alice: two aggregates of weight 1; bob: one of weight 1 and one of weight -1
  const double r = sigm(1.0 - 1.0 + 1.0);
  EXPECT_NEAR(alice, sigm(2 * r), 1e-15);
  EXPECT_NEAR(bob, sigm(0.0), 1e-15);
}

TEST(Forward, FactPassthrough) {
  const Template t = parse_template("");
  const Example ex = parse_examples("#example e\n0.7 :: p(a).\n").at(0);
  for (Family f : {Family::Godel, Family::MaxSigmoid, Family::AvgSigmoid}) {
    const GroundNetwork net = network(t, ex);
    EXPECT_EQ(forward(net, t.params, f)[*net.find(atom("p(a)"))], 0.7);
  }
}

TEST(Forward, MissingQueryIsZero) {
  const Template t = load_template("family.lrnn", Family::Godel);
  const GroundNetwork net = network(t, load_example("family.examples"));
  const ValueMap v = forward(net, t.params, Family::Godel);
  const QueryValue q = query_value(net, v, atom("father(bob,alice)"));
  EXPECT_TRUE(q.missing);
  EXPECT_EQ(q.value, 0.0);
  EXPECT_EQ(query_value(net, v, atom("mother(bob,alice)")).value, 1.0);
}

TEST(ExportDot, FamilyCounts) {
  const Template t = load_template("family.lrnn");
  const GroundNetwork net = network(t, load_example("family.examples"));
  const dot::Summary s = dot::check(export_dot(net, t.params));
  EXPECT_EQ(s.nodes.size(), 12u);
  // fact->atom 3, atom->rule 4, rule->aggregation 2, aggregation->atom 2
  EXPECT_EQ(s.edges, 11u);
  EXPECT_TRUE(std::includes(s.nodes.begin(), s.nodes.end(), s.endpoints.begin(), s.endpoints.end()));
}

TEST(ExportDot, EmptyNetwork) {
  const dot::Summary s = dot::check(export_dot(GroundNetwork{"empty", {}, {}}, ParameterStore{}));
  EXPECT_TRUE(s.nodes.empty());
  EXPECT_EQ(s.edges, 0u);
}

TEST(ExportDot, WellFormedAcrossFixturesAndAwkwardLabels) {
  const std::vector<std::pair<const char*, const char*>> pairs{{"family.lrnn", "family.examples"},
                                                              {"explosive.lrnn", "molecules.examples"},
                                                              {"cnn.lrnn", "image.examples"},
                                                              {"bright.lrnn", "bright.examples"},
                                                              {"soft_matching.lrnn", "friends.examples"},
                                                              {"horses.lrnn", "horses.examples"},
                                                              {"chains.lrnn", "chains.examples"}};
  for (auto [tpl, exs] : pairs) {
    const Template t = load_template(tpl);
    for (const Example& ex : parse_examples(testing_support::fixture_text(exs))) {
      const GroundNetwork net = network(t, ex);
      const dot::Summary s = dot::check(export_dot(net, t.params));
      EXPECT_EQ(s.nodes.size(), net.neurons.size()) << tpl;
      std::size_t edges = 0;
      for (const Neuron& n : net.neurons) edges += n.inputs.size();
      EXPECT_EQ(s.edges, edges) << tpl;
    }
  }
  const Template t = parse_template("1 :: q(X) :- p(X).");
  const Example ex = parse_examples("#example \"odd\"\n1 :: p('a \"b\" \\\\ c').\n").at(0);
  EXPECT_NO_THROW(dot::check(export_dot(network(t, ex), t.params)));
}

TEST(ExportDot, CheckerRejectsBrokenInput) {
  EXPECT_THROW(dot::check("digraph { a -> }"), std::runtime_error);
  EXPECT_THROW(dot::check("digraph { a [label=\"x] }"), std::runtime_error);
  EXPECT_THROW(dot::check("digraph { a } extra"), std::runtime_error);
}

TEST(ValuesCsv, OneRowPerNeuron) {
  const Template t = load_template("family.lrnn");
  const GroundNetwork net = network(t, load_example("family.examples"));
  const std::string csv = values_csv(net, forward(net, t.params, t.family));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
  EXPECT_EQ(csv.rfind("id,kind,label,value\n", 0), 0u);
}
