#pragma once

// k-fold cross-validation with inner model selection on training risk only.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lrnn/errors.hpp"
#include "lrnn/logic.hpp"
#include "lrnn/trainer.hpp"

namespace lrnn {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) { return splitmix64(master ^ splitmix64(k + 1)); }

struct FoldPlan {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignment;
  std::uint64_t seed = 0;

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(k, 0);
    for (const auto& [id, f] : assignment) ++s[f];
    return s;
  }
};

/// Seeded shuffle, then round-robin: fold sizes differ by at most one.
inline FoldPlan make_folds(std::vector<std::string> example_ids, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  if (example_ids.size() < k) throw ConfigError("fewer examples than folds");
  std::sort(example_ids.begin(), example_ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(example_ids.begin(), example_ids.end(), rng);
  FoldPlan plan{k, {}, seed};
  for (std::size_t i = 0; i < example_ids.size(); ++i) plan.assignment[example_ids[i]] = i % k;
  return plan;
}

enum class XvalPhase { Selection, Evaluation };

/// Source of query targets. Cross-validation announces each phase before
/// reading, so a reader can check that held-out targets stay untouched
/// during model selection.
class TargetReader {
 public:
  virtual ~TargetReader() = default;
  virtual void on_phase(XvalPhase, std::size_t /*fold*/) {}
  virtual double read(std::size_t query_index) = 0;
};

class QueryTargets : public TargetReader {
 public:
  explicit QueryTargets(const std::vector<Query>& queries) : queries_(queries) {}
  double read(std::size_t i) override { return queries_[i].target; }

 private:
  const std::vector<Query>& queries_;
};

struct XvalConfig {
  std::size_t folds = 5;
  std::vector<double> learning_rates{0.1};
  std::vector<std::size_t> restarts{1};
  std::vector<std::size_t> epochs{100};
  TrainConfig base;  // seed is the master seed; other fields are shared
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  double learning_rate = 0.0;
  std::size_t restarts = 0;
  std::size_t epochs = 0;
  double train_error = 0.0;
  double test_error = 0.0;
};

struct XvalResult {
  FoldPlan plan;
  std::vector<FoldResult> folds;
  double mean_test_error = 0.0;
  double mean_train_error = 0.0;

  std::string to_csv() const {
    std::string out = "fold,train_examples,test_examples,lr,restarts,epochs,train_error,test_error\n";
    for (const FoldResult& f : folds) {
      out += std::to_string(f.fold) + "," + std::to_string(f.train_examples) + "," +
             std::to_string(f.test_examples) + "," + format_double(f.learning_rate) + "," +
             std::to_string(f.restarts) + "," + std::to_string(f.epochs) + "," + format_double(f.train_error) +
             "," + format_double(f.test_error) + "\n";
    }
    out += "mean,,,,,," + format_double(mean_train_error) + "," + format_double(mean_test_error) + "\n";
    return out;
  }
};

/// Runs k folds. Within a fold every grid point (lr x restarts x epochs) is
/// trained on the training part and scored by training 0/1 error (ties:
/// training cost, then grid order); the winner is then scored on the
/// held-out part. Query targets are obtained only through `targets`.
inline XvalResult cross_validate(const Template& tpl, const std::vector<Example>& examples,
                                 const std::vector<Query>& queries, const XvalConfig& cfg, TargetReader& targets,
                                 const GroundingOptions& gopts = {}) {
  cfg.base.validate();
  if (cfg.learning_rates.empty() || cfg.restarts.empty() || cfg.epochs.empty()) {
    throw ConfigError("empty hyper-parameter grid");
  }
  std::vector<std::string> ids;
  for (const Example& e : examples) ids.push_back(e.id);
  XvalResult result;
  result.plan = make_folds(ids, cfg.folds, cfg.base.seed);

  for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
    auto in_test = [&](const std::string& id) { return result.plan.assignment.at(id) == fold; };
    TrainingTask train_task{tpl, {}, {}, cfg.base, gopts};
    TrainingTask test_task{tpl, {}, {}, cfg.base, gopts};
    for (const Example& e : examples) (in_test(e.id) ? test_task : train_task).examples.push_back(e);

    targets.on_phase(XvalPhase::Selection, fold);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      if (in_test(queries[qi].example_id)) continue;
      Query q = queries[qi];
      q.target = targets.read(qi);
      train_task.queries.push_back(std::move(q));
    }
    train_task.validate();
    const CompiledTask train_ct = compile(train_task);

    FoldResult best;
    best.fold = fold;
    best.train_examples = train_task.examples.size();
    best.test_examples = test_task.examples.size();
    double best_err = std::numeric_limits<double>::infinity();
    double best_cost = std::numeric_limits<double>::infinity();
    ParameterStore best_params;
    const std::uint64_t fold_seed = derive_seed(cfg.base.seed, fold);
    for (double lr : cfg.learning_rates) {
      for (std::size_t restarts : cfg.restarts) {
        for (std::size_t epochs : cfg.epochs) {
          TrainConfig tc = cfg.base;
          tc.learning_rate = lr;
          tc.restarts = restarts;
          tc.epochs = epochs;
          tc.seed = fold_seed;
          TrainResult tr;
          try {
            tr = train(train_ct, tpl.params, tc);
          } catch (const AllRestartsFailed&) {
            continue;
          }
          const double err = error_rate(train_ct, tr.params);
          if (err < best_err || (err == best_err && tr.report.best_cost < best_cost)) {
            best_err = err;
            best_cost = tr.report.best_cost;
            best_params = tr.params;
            best.learning_rate = lr;
            best.restarts = restarts;
            best.epochs = epochs;
          }
        }
      }
    }
    if (!std::isfinite(best_err)) throw AllRestartsFailed("fold " + std::to_string(fold) + ": every grid point diverged");
    best.train_error = best_err;

    targets.on_phase(XvalPhase::Evaluation, fold);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      if (!in_test(queries[qi].example_id)) continue;
      Query q = queries[qi];
      q.target = targets.read(qi);
      test_task.queries.push_back(std::move(q));
    }
    test_task.validate();
    best.test_error = error_rate(compile(test_task), best_params);
    result.folds.push_back(best);
  }
  for (const FoldResult& f : result.folds) {
    result.mean_test_error += f.test_error;
    result.mean_train_error += f.train_error;
  }
  result.mean_test_error /= static_cast<double>(result.folds.size());
  result.mean_train_error /= static_cast<double>(result.folds.size());
  return result;
}

}  // namespace lrnn
