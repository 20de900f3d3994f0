#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "common.hpp"
#include "gradcheck.hpp"

using namespace lrnn;
using testing_support::atom;
using testing_support::load_example;
using testing_support::load_template;

TEST(Cost, Values) {
  for (double t : {0.0, 0.3, 1.0}) EXPECT_EQ(cost(t, t, CostKind::SquaredSigmoid).value, 0.0);
  const double s1 = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(cost(0.0, 1.0, CostKind::SquaredSigmoid).value, 0.5 * (s1 - 0.5) * (s1 - 0.5), 1e-15);
  EXPECT_NEAR(cost(0.0, 1.0, CostKind::SquaredSigmoid).value, 0.02669, 5e-6);
  for (double t : {0.0, 0.5, 1.0}) EXPECT_NEAR(cost(0.0, t, CostKind::CrossEntropy).value, std::log(2.0), 1e-15);
  // large logits stay finite
  EXPECT_NEAR(cost(800.0, 0.0, CostKind::CrossEntropy).value, 800.0, 1e-9);
  EXPECT_NEAR(cost(-800.0, 1.0, CostKind::CrossEntropy).value, 800.0, 1e-9);
}

TEST(Cost, DerivativeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (CostKind k : {CostKind::SquaredSigmoid, CostKind::CrossEntropy}) {
    for (double y : {-2.0, -0.3, 0.0, 0.4, 1.7}) {
      for (double t : {0.0, 0.25, 1.0}) {
        const double fd = (cost(y + h, t, k).value - cost(y - h, t, k).value) / (2 * h);
        EXPECT_NEAR(cost(y, t, k).derivative, fd, 1e-8);
      }
    }
  }
}

TEST(Backward, AvgSigmoidMatchesFiniteDifferences) {
  std::mt19937_64 rng(101);
  std::size_t instances = 0;
  while (instances < 60) {
    auto inst = gradcheck::random_instance(rng);
    if (!inst) continue;
    ++instances;
    EXPECT_LE(gradcheck::finite_difference(*inst, Family::AvgSigmoid).worst, 1e-5);
  }
}

TEST(Backward, MaxSigmoidMatchesAwayFromTies) {
  std::mt19937_64 rng(202);
  std::size_t instances = 0;
  while (instances < 60) {
    auto inst = gradcheck::random_instance(rng);
    if (!inst || gradcheck::near_max_tie(inst->net, inst->params, Family::MaxSigmoid, 1e-3)) continue;
    ++instances;
    EXPECT_LE(gradcheck::finite_difference(*inst, Family::MaxSigmoid).worst, 1e-5);
  }
}

TEST(Backward, SharedEqualsSumOfUntied) {
  std::mt19937_64 rng(303);
  for (int i = 0; i < 100; ++i) {
    auto inst = gradcheck::random_instance(rng);
    if (!inst) continue;
    for (Family f : {Family::AvgSigmoid, Family::MaxSigmoid, Family::Godel}) {
      EXPECT_LE(gradcheck::untied_discrepancy(*inst, f), 1e-10);
    }
  }
}

TEST(Backward, UntiedOccurrencesMatchFiniteDifferences) {
  std::mt19937_64 rng(404);
  for (int found = 0; found < 20;) {
    auto inst = gradcheck::random_instance(rng);
    if (!inst) continue;
    ++found;
    const gradcheck::Untied u = gradcheck::untie(inst->net, inst->params);
    const gradcheck::Instance untied{u.net, u.params, inst->seeds};
    EXPECT_LE(gradcheck::finite_difference(untied, Family::AvgSigmoid).worst, 1e-5);
  }
}

TEST(Backward, ZeroSeedsGiveZeroGradient) {
  const Template t = load_template("explosive.lrnn");
  const Example water = parse_examples(testing_support::fixture_text("molecules.examples")).at(1);
  const GroundNetwork net = testing_support::network(t, water);
  const ValueMap v = forward(net, t.params, t.family);
  const GradientAccumulator g = backward(net, v, t.params, std::vector<std::pair<std::size_t, double>>{});
  for (double x : g.grad) EXPECT_EQ(x, 0.0);
  const GradientAccumulator by_atom = backward(net, v, t.params, std::map<Atom, double>{{atom("absent"), 1.0}});
  for (double x : by_atom.grad) EXPECT_EQ(x, 0.0);
}

namespace {

CompiledTask family_task(const Template& t, TrainConfig cfg = {}) {
  TrainingTask task{t, parse_examples(testing_support::fixture_text("family_facts.examples")),
                    parse_queries(testing_support::fixture_text("family.queries")), cfg, {}};
  return compile(task);
}

Template learnable_family() {
  return parse_template("? :: mother(C,M) :- parent(C,M), female(M).\n? :: father(C,M) :- parent(C,M), male(M).",
                        "f.lrnn");
}

}  // namespace

TEST(Sgd, ZeroLearningRateLeavesParametersUnchanged) {
  const Template t = learnable_family();
  const CompiledTask ct = family_task(t);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  ParameterStore p = t.params;
  auto rng = restart_rng(1, 0);
  sgd_epoch(ct, p, learnable_mask(p, ct.family, cfg), cfg, rng);
  EXPECT_EQ(p, t.params);
}

TEST(Sgd, SmallStepDecreasesCost) {
  Template t = learnable_family();
  t.family = Family::AvgSigmoid;
  const CompiledTask ct = family_task(t);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  ParameterStore p = t.params;
  p.set_value(*p.find("f.lrnn:1"), 0.2);
  const double before = total_cost(ct, p);
  const GradientAccumulator g = task_gradient(ct, p);
  const std::size_t w = *p.find("f.lrnn:1");
  ASSERT_NE(g[w], 0.0);
  auto rng = restart_rng(1, 0);
  ParameterStore stepped = p;
  sgd_epoch(ct, stepped, learnable_mask(p, ct.family, cfg), cfg, rng);
  // a single example, so the epoch is exactly one gradient step
  EXPECT_NEAR(stepped.value(w), p.value(w) - 0.01 * g[w], 1e-15);
  EXPECT_LT(total_cost(ct, stepped), before);
}

TEST(Sgd, FrozenOffsetsAndFixedWeightsStayPut) {
  const Template t = learnable_family();
  TrainConfig cfg;
  cfg.train_offsets = false;
  cfg.epochs = 5;
  const CompiledTask ct = family_task(t, cfg);
  const TrainResult r = train(ct, t.params, cfg);
  for (std::size_t i = 0; i < t.params.size(); ++i) {
    if (t.params[i].kind != ParamKind::ClauseWeight) {
      EXPECT_EQ(r.params.value(i), t.params.value(i));
    }
  }
  const Template fixed = load_template("family_rules.lrnn");
  const TrainResult rf = train(family_task(fixed, cfg), fixed.params, cfg);
  for (std::size_t i = 0; i < fixed.params.size(); ++i) {
    if (fixed.params[i].kind == ParamKind::ClauseWeight) {
      EXPECT_EQ(rf.params.value(i), fixed.params.value(i));
    }
  }
}

TEST(Train, Deterministic) {
  const Template t = learnable_family();
  TrainConfig cfg;
  cfg.restarts = 3;
  cfg.epochs = 20;
  cfg.seed = 77;
  const CompiledTask ct = family_task(t, cfg);
  const TrainResult a = train(ct, t.params, cfg);
  const TrainResult b = train(ct, t.params, cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.report.to_jsonl(), b.report.to_jsonl());
}

TEST(Train, SingleRestartIsOneRunFromRestartZero) {
  const Template t = learnable_family();
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 5;
  const CompiledTask ct = family_task(t, cfg);
  const TrainResult r = train(ct, t.params, cfg);
  auto rng = restart_rng(5, 0);
  ParameterStore p = initialize(t.params, cfg, rng);
  const auto mask = learnable_mask(p, ct.family, cfg);
  for (int e = 0; e < 10; ++e) sgd_epoch(ct, p, mask, cfg, rng);
  EXPECT_EQ(r.params, p);
  ASSERT_EQ(r.report.runs.size(), 1u);
  EXPECT_EQ(r.report.runs[0].costs.size(), 10u);
}

TEST(Train, KeepsLowestCostRestart) {
  const Template t = learnable_family();
  TrainConfig cfg;
  cfg.restarts = 6;
  cfg.epochs = 3;
  cfg.init_lo = -4;
  cfg.init_hi = 4;
  const CompiledTask ct = family_task(t, cfg);
  const TrainResult r = train(ct, t.params, cfg);
  std::size_t argmin = 0;
  for (std::size_t i = 1; i < r.report.runs.size(); ++i) {
    if (r.report.runs[i].costs.back() < r.report.runs[argmin].costs.back()) argmin = i;
  }
  EXPECT_EQ(r.report.best_restart, argmin);
  EXPECT_EQ(r.report.best_cost, r.report.runs[argmin].costs.back());
  EXPECT_EQ(total_cost(ct, r.params), r.report.best_cost);
}

TEST(Train, InvalidConfigRejected) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.init_lo = 1;
  cfg.init_hi = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.learning_rate = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Train, DivergenceReported) {
  // two huge negative weights on the same head overflow the linear output;
  // frozen offsets keep SGD from switching the rule neurons off instead
  Template t = parse_template(
      "? :: mother(C,M) :- parent(C,M), female(M).\n? :: mother(C,M) :- parent(C,M), female(M).", "d.lrnn");
  t.family = Family::AvgSigmoid;
  TrainConfig cfg;
  cfg.init_lo = -1.7e308;
  cfg.init_hi = -1.6e308;
  cfg.cost = CostKind::CrossEntropy;
  cfg.restarts = 2;
  cfg.train_offsets = false;
  try {
    train(family_task(t, cfg), t.params, cfg);
    FAIL() << "expected AllRestartsFailed";
  } catch (const AllRestartsFailed&) {
  }
}

TEST(Train, LearnsOxygenHydrogenConcept) {
  const auto ms = molecules::generate(20, 3);
  TrainingTask task;
  task.tpl = load_template("explosive.lrnn");
  for (const auto& m : ms) {
    task.examples.push_back(molecules::to_example(m));
    task.queries.push_back(molecules::to_query(m));
  }
  task.config.learning_rate = 10;
  task.config.init_lo = 0;
  task.config.init_hi = 5;
  task.config.restarts = 5;
  task.config.epochs = 200;
  const CompiledTask ct = compile(task);
  const TrainResult r = train(ct, task.tpl.params, task.config);
  EXPECT_LE(error_rate(ct, r.params), 0.05);
}

TEST(Predict, Family) {
  const Template t = load_template("family.lrnn", Family::Godel);
  const Example ex = load_example("family.examples");
  EXPECT_EQ(predict(t, t.params, ex, atom("mother(bob,alice)")).value, 1.0);
  const QueryValue f = predict(t, t.params, ex, atom("father(bob,alice)"));
  EXPECT_TRUE(f.missing);
  EXPECT_EQ(f.value, 0.0);
}
