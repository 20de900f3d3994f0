#pragma once

// Weight learning over ground networks that share the template's parameters:
// reverse sweep with per-parameter accumulation, online SGD, restarts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lrnn/activations.hpp"
#include "lrnn/errors.hpp"
#include "lrnn/grounder.hpp"
#include "lrnn/logic.hpp"
#include "lrnn/netbuild.hpp"

#include <json.hpp>

namespace lrnn {

enum class CostKind { SquaredSigmoid, CrossEntropy };

struct CostEval {
  double value = 0.0;
  double derivative = 0.0;  // d value / d y
};

/// SquaredSigmoid: 1/2 (sigm(t) - sigm(y))^2.
/// CrossEntropy: -t log sigm(y) - (1 - t) log(1 - sigm(y)).
inline CostEval cost(double y, double t, CostKind kind) {
  if (kind == CostKind::SquaredSigmoid) {
    const double r = sigm(t) - sigm(y);
    return {0.5 * r * r, -r * sigm_prime(y)};
  }
  // log sigm(y) = -softplus(-y), log(1 - sigm(y)) = -softplus(y)
  auto softplus = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
  return {t * softplus(-y) + (1.0 - t) * softplus(y), sigm(y) - t};
}

struct GradientAccumulator {
  std::vector<double> grad;  // indexed like the ParameterStore

  double operator[](std::size_t i) const { return grad[i]; }
};

/// Reverse sweep from the seeded neurons (neuron id, d cost / d output).
/// Every occurrence of a shared parameter adds its own partial into the
/// accumulator; constant edges only pass gradient through.
inline GradientAccumulator backward(const GroundNetwork& net, const ValueMap& values, const ParameterStore& params,
                                    std::span<const std::pair<std::size_t, double>> seeds) {
  GradientAccumulator acc{std::vector<double>(params.size(), 0.0)};
  std::vector<double> g(net.neurons.size(), 0.0);
  for (const auto& [id, d] : seeds) g[id] += d;
  for (std::size_t k = net.neurons.size(); k-- > 0;) {
    const Neuron& n = net.neurons[k];
    const double gk = g[k];
    if (gk == 0.0) continue;
    const ActivationEval& e = values.evals[k];
    if (n.offset) acc.grad[*n.offset] += gk * e.offset_partial;
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      const double through = gk * e.partials[i];
      if (through == 0.0) continue;
      const Edge& edge = n.inputs[i];
      if (edge.param) acc.grad[*edge.param] += through * values[edge.source];
      g[edge.source] += through * edge.weight(params);
    }
  }
  return acc;
}

/// Same, with gradients keyed by query atom. Atoms absent from the network
/// are constants and contribute nothing.
inline GradientAccumulator backward(const GroundNetwork& net, const ValueMap& values, const ParameterStore& params,
                                    const std::map<Atom, double>& query_grads) {
  std::vector<std::pair<std::size_t, double>> seeds;
  for (const auto& [atom, d] : query_grads) {
    if (auto id = net.find(atom)) seeds.emplace_back(*id, d);
  }
  return backward(net, values, params, seeds);
}

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  std::size_t restarts = 1;
  std::uint64_t seed = 1;
  double init_lo = -1.0;
  double init_hi = 1.0;
  CostKind cost = CostKind::SquaredSigmoid;
  bool shuffle = true;
  bool train_offsets = true;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
    if (!(init_lo < init_hi)) throw ConfigError("init range needs lo < hi");
  }
};

struct Query {
  std::string example_id;
  Atom atom;
  double target = 0.0;
};

struct TrainingTask {
  Template tpl;
  std::vector<Example> examples;
  std::vector<Query> queries;
  TrainConfig config;
  GroundingOptions grounding;

  void validate() const {
    config.validate();
    std::set<std::string> ids;
    for (const Example& e : examples) ids.insert(e.id);
    for (const Query& q : queries) {
      if (!ids.count(q.example_id)) throw ConfigError("query refers to unknown example '" + q.example_id + "'");
      if (!std::isfinite(q.target)) throw ConfigError("non-finite target for " + render(q.atom));
    }
  }
};

/// Networks grounded once per example, with their queries resolved to
/// neuron ids.
struct CompiledTask {
  struct QueryRef {
    std::size_t query_index = 0;
    std::optional<std::size_t> neuron;
    double target = 0.0;
  };
  struct Item {
    GroundNetwork net;
    std::vector<QueryRef> queries;
  };
  std::vector<Item> items;
  Family family = Family::MaxSigmoid;
  CostKind cost_kind = CostKind::SquaredSigmoid;
};

inline CompiledTask compile(const TrainingTask& task) {
  check_nonrecursive(task.tpl);
  CompiledTask out;
  out.family = task.tpl.family;
  out.cost_kind = task.config.cost;
  std::map<std::string, std::vector<std::size_t>> by_example;
  for (std::size_t i = 0; i < task.queries.size(); ++i) by_example[task.queries[i].example_id].push_back(i);
  for (const Example& ex : task.examples) {
    auto it = by_example.find(ex.id);
    if (it == by_example.end()) continue;
    CompiledTask::Item item;
    item.net = build(ground(task.tpl, ex, task.grounding), task.tpl, ex.id);
    for (std::size_t qi : it->second) {
      item.queries.push_back({qi, item.net.find(task.queries[qi].atom), task.queries[qi].target});
    }
    out.items.push_back(std::move(item));
  }
  return out;
}

inline std::vector<bool> learnable_mask(const ParameterStore& params, Family family, const TrainConfig& cfg) {
  std::vector<bool> mask(params.size(), false);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    if (p.kind == ParamKind::ClauseWeight) {
      mask[i] = p.learnable;
    } else {
      mask[i] = p.learnable && uses_offsets(family) && cfg.train_offsets;
    }
  }
  return mask;
}

/// Independent generator for one restart, fully determined by (seed, restart).
inline std::mt19937_64 restart_rng(std::uint64_t seed, std::size_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart), static_cast<std::uint32_t>(restart >> 32)};
  return std::mt19937_64(seq);
}

/// Fresh starting point: learnable clause weights ~ U(init_lo, init_hi),
/// offsets back at their defaults.
inline ParameterStore initialize(const ParameterStore& base, const TrainConfig& cfg, std::mt19937_64& rng) {
  ParameterStore params = base;
  std::uniform_real_distribution<double> dist(cfg.init_lo, cfg.init_hi);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    switch (p.kind) {
      case ParamKind::ClauseWeight:
        if (p.learnable) p.value = dist(rng);
        break;
      case ParamKind::ConjOffset: p.value = kDefaultConjOffset; break;
      case ParamKind::DisjOffset: p.value = kDefaultDisjOffset; break;
    }
  }
  return params;
}

inline double item_cost(const CompiledTask& ct, const CompiledTask::Item& item, const ValueMap& values,
                        std::vector<std::pair<std::size_t, double>>* seeds) {
  double total = 0.0;
  for (const auto& q : item.queries) {
    const double y = q.neuron ? values[*q.neuron] : 0.0;
    const CostEval c = cost(y, q.target, ct.cost_kind);
    total += c.value;
    if (seeds && q.neuron) seeds->emplace_back(*q.neuron, c.derivative);
  }
  return total;
}

/// Total cost J over every query of the task.
inline double total_cost(const CompiledTask& ct, const ParameterStore& params) {
  double total = 0.0;
  for (const auto& item : ct.items) total += item_cost(ct, item, forward(item.net, params, ct.family), nullptr);
  return total;
}

/// Gradient of the total cost.
inline GradientAccumulator task_gradient(const CompiledTask& ct, const ParameterStore& params) {
  GradientAccumulator acc{std::vector<double>(params.size(), 0.0)};
  for (const auto& item : ct.items) {
    const ValueMap values = forward(item.net, params, ct.family);
    std::vector<std::pair<std::size_t, double>> seeds;
    item_cost(ct, item, values, &seeds);
    const auto g = backward(item.net, values, params, seeds);
    for (std::size_t i = 0; i < g.grad.size(); ++i) acc.grad[i] += g.grad[i];
  }
  return acc;
}

/// One pass of online SGD: examples in (optionally shuffled) order, update
/// after each. Returns the total cost after the pass.
inline double sgd_epoch(const CompiledTask& ct, ParameterStore& params, const std::vector<bool>& learnable,
                        const TrainConfig& cfg, std::mt19937_64& rng) {
  std::vector<std::size_t> order(ct.items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::pair<std::size_t, double>> seeds;
  for (std::size_t idx : order) {
    const auto& item = ct.items[idx];
    const ValueMap values = forward(item.net, params, ct.family);
    seeds.clear();
    item_cost(ct, item, values, &seeds);
    const GradientAccumulator g = backward(item.net, values, params, seeds);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!learnable[i] || g.grad[i] == 0.0) continue;
      const double v = params.value(i) - cfg.learning_rate * g.grad[i];
      if (!std::isfinite(v)) throw DivergenceError("parameter " + params[i].id + " became non-finite");
      params.set_value(i, v);
    }
  }
  const double c = total_cost(ct, params);
  if (!std::isfinite(c)) throw DivergenceError("training cost became non-finite");
  return c;
}

struct TrainReport {
  struct Run {
    std::size_t restart = 0;
    std::vector<double> costs;  // after each epoch
    bool failed = false;
    std::string error;
  };
  std::vector<Run> runs;
  std::size_t best_restart = 0;
  double best_cost = std::numeric_limits<double>::infinity();

  /// One JSON object per line: {"restart","epoch","cost"}; failed restarts
  /// add a {"restart","failed","error"} line.
  std::string to_jsonl() const {
    std::string out;
    for (const Run& r : runs) {
      for (std::size_t e = 0; e < r.costs.size(); ++e) {
        nlohmann::ordered_json j;
        j["restart"] = r.restart;
        j["epoch"] = e + 1;
        j["cost"] = r.costs[e];
        out += j.dump() + "\n";
      }
      if (r.failed) {
        nlohmann::ordered_json j;
        j["restart"] = r.restart;
        j["failed"] = true;
        j["error"] = r.error;
        out += j.dump() + "\n";
      }
    }
    return out;
  }
};

struct TrainResult {
  ParameterStore params;
  TrainReport report;
};

/// Restarts from independent initializations and keeps the parameters with
/// the lowest final training cost (earliest restart on ties).
inline TrainResult train(const CompiledTask& ct, const ParameterStore& base, const TrainConfig& cfg) {
  cfg.validate();
  const std::vector<bool> learnable = learnable_mask(base, ct.family, cfg);
  TrainResult result;
  bool any = false;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    TrainReport::Run run;
    run.restart = r;
    auto rng = restart_rng(cfg.seed, r);
    ParameterStore params = initialize(base, cfg, rng);
    try {
      for (std::size_t e = 0; e < cfg.epochs; ++e) run.costs.push_back(sgd_epoch(ct, params, learnable, cfg, rng));
    } catch (const DivergenceError& err) {
      run.failed = true;
      run.error = err.what();
    }
    if (!run.failed && run.costs.back() < result.report.best_cost) {
      result.report.best_cost = run.costs.back();
      result.report.best_restart = r;
      result.params = params;
      any = true;
    }
    result.report.runs.push_back(std::move(run));
  }
  if (!any) throw AllRestartsFailed("all " + std::to_string(cfg.restarts) + " restarts diverged");
  return result;
}

inline TrainResult train(const TrainingTask& task) {
  task.validate();
  return train(compile(task), task.tpl.params, task.config);
}

/// Fraction of queries whose score lands on the wrong side of 0.5.
inline double error_rate(const CompiledTask& ct, const ParameterStore& params) {
  std::size_t wrong = 0, total = 0;
  for (const auto& item : ct.items) {
    const ValueMap values = forward(item.net, params, ct.family);
    for (const auto& q : item.queries) {
      const double y = q.neuron ? values[*q.neuron] : 0.0;
      wrong += (y >= 0.5) != (q.target >= 0.5);
      ++total;
    }
  }
  return total ? static_cast<double>(wrong) / static_cast<double>(total) : 0.0;
}

/// Ground, build and evaluate one query atom.
inline QueryValue predict(const Template& tpl, const ParameterStore& params, const Example& ex, const Atom& query,
                          const GroundingOptions& opts = {}) {
  const GroundNetwork net = build(ground(tpl, ex, opts), tpl, ex.id);
  return query_value(net, forward(net, params, tpl.family), query);
}

}  // namespace lrnn
