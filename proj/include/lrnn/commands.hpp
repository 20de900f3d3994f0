#pragma once

// Command implementations behind the `lrnn` executable. Each returns a
// process exit code: 0 ok, 2 input/usage error, 3 recursive template,
// 4 capacity exceeded, 5 training failed.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lrnn/errors.hpp"
#include "lrnn/grounder.hpp"
#include "lrnn/io.hpp"
#include "lrnn/logic.hpp"
#include "lrnn/molecules.hpp"
#include "lrnn/netbuild.hpp"
#include "lrnn/trainer.hpp"
#include "lrnn/xval.hpp"

namespace lrnn::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInputError = 2, kRecursion = 3, kCapacity = 4, kTrainingFailed = 5 };

/// Capacity from LRNN_CAPACITY when set, else the default.
inline GroundingOptions grounding_from_env() {
  GroundingOptions g;
  if (const char* v = std::getenv("LRNN_CAPACITY")) {
    try {
      std::size_t used = 0;
      const unsigned long long cap = std::stoull(v, &used);
      if (used != std::string(v).size() || cap == 0) throw std::invalid_argument(v);
      g.capacity = static_cast<std::size_t>(cap);
    } catch (const std::exception&) {
      throw ConfigError(std::string("LRNN_CAPACITY must be a positive integer, got '") + v + "'");
    }
  }
  return g;
}

inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const RecursionError& e) {
    err << "error: " << e.what() << "\n";
    return kRecursion;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << "\n";
    return kCapacity;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kTrainingFailed;
  } catch (const AllRestartsFailed& e) {
    err << "error: " << e.what() << "\n";
    return kTrainingFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

struct Inputs {
  fs::path template_path;
  fs::path examples_path;
  std::optional<fs::path> queries_path;
  std::optional<fs::path> params_path;
  Family family = Family::MaxSigmoid;
};

struct Loaded {
  Template tpl;
  std::vector<Example> examples;
  std::vector<Query> queries;
  GroundingOptions grounding;
};

inline Loaded load(const Inputs& in) {
  Loaded l;
  l.grounding = grounding_from_env();
  l.tpl = parse_template(read_file(in.template_path), in.template_path.filename().string());
  l.tpl.family = in.family;
  check_nonrecursive(l.tpl);
  l.examples = parse_examples(read_file(in.examples_path), in.examples_path.string());
  if (in.queries_path) {
    l.queries = parse_queries(read_file(*in.queries_path), in.queries_path->string());
    std::set<std::string> ids;
    for (const Example& e : l.examples) ids.insert(e.id);
    for (const Query& q : l.queries) {
      if (!ids.count(q.example_id)) throw ConfigError("query refers to unknown example '" + q.example_id + "'");
    }
  }
  if (in.params_path) load_params(read_file(*in.params_path), l.tpl.params, in.params_path->string());
  return l;
}

inline std::string file_safe(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

struct GroundArgs {
  Inputs in;
  fs::path out_dir;
};

/// Writes instances.csv and stats.csv into out_dir; echoes stats to `out`.
inline int cmd_ground(const GroundArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(a.in);
    std::string instances = "example_id,clause,head,body\n";
    std::string stats = "example_id,atoms,facts,rules,aggregations\n";
    for (const Example& ex : l.examples) {
      const Grounding g = ground(l.tpl, ex, l.grounding);
      for (const GroundRuleInstance& inst : g.instances) {
        std::string body;
        for (std::size_t i = 0; i < inst.body.size(); ++i) body += (i ? ", " : "") + render(inst.body[i]);
        instances += detail::csv_field(ex.id) + "," + inst.source.str() + "," + detail::csv_field(render(inst.head)) +
                     "," + detail::csv_field(body) + "\n";
      }
      const NeuronCounts c = build(g, l.tpl, ex.id).counts();
      stats += detail::csv_field(ex.id) + "," + std::to_string(c.atoms) + "," + std::to_string(c.facts) + "," +
               std::to_string(c.rules) + "," + std::to_string(c.aggregations) + "\n";
    }
    fs::create_directories(a.out_dir);
    write_file(a.out_dir / "instances.csv", instances);
    write_file(a.out_dir / "stats.csv", stats);
    out << stats;
    return kOk;
  });
}

struct TrainArgs {
  Inputs in;
  TrainConfig config;
  std::optional<fs::path> out_params;
  std::optional<fs::path> report;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!a.in.queries_path) throw ConfigError("train needs --queries");
    const Loaded l = load(a.in);
    TrainingTask task{l.tpl, l.examples, l.queries, a.config, l.grounding};
    task.validate();
    const CompiledTask ct = compile(task);
    TrainResult r = train(ct, task.tpl.params, task.config);
    if (a.out_params) write_file(*a.out_params, render_params(r.params));
    if (a.report) write_file(*a.report, r.report.to_jsonl());
    out << "best restart: " << r.report.best_restart << "\n";
    out << "training cost: " << format_double(r.report.best_cost) << "\n";
    out << "training accuracy: " << format_double(1.0 - error_rate(ct, r.params)) << "\n";
    return kOk;
  });
}

struct PredictArgs {
  Inputs in;
  std::optional<fs::path> out;
  std::optional<fs::path> values_dir;
};

/// CSV example_id,atom,score,missing for every query row.
inline int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!a.in.queries_path) throw ConfigError("predict needs --queries");
    const Loaded l = load(a.in);
    std::map<std::string, std::vector<const Query*>> by_example;
    for (const Query& q : l.queries) by_example[q.example_id].push_back(&q);
    if (a.values_dir) fs::create_directories(*a.values_dir);
    std::string csv = "example_id,atom,score,missing\n";
    for (const Example& ex : l.examples) {
      auto it = by_example.find(ex.id);
      if (it == by_example.end() && !a.values_dir) continue;
      const GroundNetwork net = build(ground(l.tpl, ex, l.grounding), l.tpl, ex.id);
      const ValueMap values = forward(net, l.tpl.params, l.tpl.family);
      if (a.values_dir) write_file(*a.values_dir / (file_safe(ex.id) + ".csv"), values_csv(net, values));
      if (it == by_example.end()) continue;
      for (const Query* q : it->second) {
        const QueryValue v = query_value(net, values, q->atom);
        csv += detail::csv_field(ex.id) + "," + detail::csv_field(render(q->atom)) + "," + format_double(v.value) +
               "," + (v.missing ? "true" : "false") + "\n";
      }
    }
    if (a.out) {
      write_file(*a.out, csv);
    } else {
      out << csv;
    }
    return kOk;
  });
}

struct XvalArgs {
  Inputs in;
  XvalConfig config;
  std::optional<fs::path> out;
};

inline int cmd_xval(const XvalArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!a.in.queries_path) throw ConfigError("xval needs --queries");
    const Loaded l = load(a.in);
    QueryTargets reader(l.queries);
    const XvalResult r = cross_validate(l.tpl, l.examples, l.queries, a.config, reader, l.grounding);
    const std::string csv = r.to_csv();
    if (a.out) {
      write_file(*a.out, csv);
    } else {
      out << csv;
    }
    return kOk;
  });
}

struct ExportDotArgs {
  Inputs in;
  fs::path out_dir;
};

/// One <example_id>.dot per example.
inline int cmd_export_dot(const ExportDotArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(a.in);
    fs::create_directories(a.out_dir);
    for (const Example& ex : l.examples) {
      const GroundNetwork net = build(ground(l.tpl, ex, l.grounding), l.tpl, ex.id);
      const fs::path p = a.out_dir / (file_safe(ex.id) + ".dot");
      write_file(p, export_dot(net, l.tpl.params));
      out << p.string() << "\n";
    }
    return kOk;
  });
}

struct GenMoleculesArgs {
  std::size_t count = 40;
  std::uint64_t seed = 1;
  fs::path out_examples;
  fs::path out_queries;
};

/// Synthetic O-H bond data set for the soft-clustering template.
inline int cmd_gen_molecules(const GenMoleculesArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ms = molecules::generate(a.count, a.seed);
    write_file(a.out_examples, molecules::examples_text(ms));
    write_file(a.out_queries, molecules::queries_text(ms));
    std::size_t pos = 0;
    for (const auto& m : ms) pos += m.label;
    out << ms.size() << " molecules, " << pos << " positive\n";
    return kOk;
  });
}

}  // namespace lrnn::cli
