// lrnn: command-line front end for weighted rule templates. Grounds them
// against example sets, trains and evaluates the resulting networks.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "lrnn/commands.hpp"

namespace {

using namespace lrnn;
using namespace lrnn::cli;

const std::map<std::string, Family> kFamilies{
    {"godel", Family::Godel}, {"ms", Family::MaxSigmoid}, {"as", Family::AvgSigmoid}};
const std::map<std::string, CostKind> kCosts{
    {"squared-sigmoid", CostKind::SquaredSigmoid}, {"cross-entropy", CostKind::CrossEntropy}};

void add_inputs(CLI::App* cmd, Inputs& in, bool queries, bool params) {
  cmd->add_option("--template", in.template_path, "template file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--examples", in.examples_path, "example set file")->required()->check(CLI::ExistingFile);
  if (queries) cmd->add_option("--queries", in.queries_path, "query file")->required()->check(CLI::ExistingFile);
  if (params) cmd->add_option("--params", in.params_path, "parameter file")->check(CLI::ExistingFile);
  cmd->add_option("--family", in.family, "activation family")
      ->transform(CLI::CheckedTransformer(kFamilies, CLI::ignore_case))
      ->default_str("ms");
}

void add_train_config(CLI::App* cmd, TrainConfig& c, bool grid_fields) {
  if (!grid_fields) {
    cmd->add_option("--lr", c.learning_rate, "learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--epochs", c.epochs, "epochs per restart")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--restarts", c.restarts, "independent restarts")->check(CLI::PositiveNumber)->capture_default_str();
  }
  cmd->add_option("--seed", c.seed, "master seed")->capture_default_str();
  cmd->add_option("--init-lo", c.init_lo, "lower end of weight initialization")->capture_default_str();
  cmd->add_option("--init-hi", c.init_hi, "upper end of weight initialization")->capture_default_str();
  cmd->add_option("--cost", c.cost, "cost function")
      ->transform(CLI::CheckedTransformer(kCosts, CLI::ignore_case))
      ->default_str("squared-sigmoid");
  cmd->add_flag("!--no-shuffle", c.shuffle, "visit examples in file order");
  cmd->add_flag("!--freeze-offsets", c.train_offsets, "keep activation offsets at their defaults");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground, train and evaluate neural networks built from weighted rule templates"};
  app.require_subcommand(1);

  GroundArgs ground_args;
  auto* ground_cmd = app.add_subcommand("ground", "ground a template against every example");
  add_inputs(ground_cmd, ground_args.in, false, false);
  ground_cmd->add_option("--out", ground_args.out_dir, "output directory")->required();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "learn template weights by SGD with restarts");
  add_inputs(train_cmd, train_args.in, true, false);
  add_train_config(train_cmd, train_args.config, false);
  train_cmd->add_option("--out-params", train_args.out_params, "write trained parameters here");
  train_cmd->add_option("--report", train_args.report, "write JSON-lines cost report here");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "score query atoms");
  add_inputs(predict_cmd, predict_args.in, true, true);
  predict_cmd->add_option("--out", predict_args.out, "CSV output file (default stdout)");
  predict_cmd->add_option("--values", predict_args.values_dir, "dump per-example neuron values into this directory");

  XvalArgs xval_args;
  auto* xval_cmd = app.add_subcommand("xval", "k-fold cross-validation with inner grid selection");
  add_inputs(xval_cmd, xval_args.in, true, false);
  add_train_config(xval_cmd, xval_args.config.base, true);
  xval_cmd->add_option("--folds", xval_args.config.folds, "number of folds")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  xval_cmd->add_option("--lr", xval_args.config.learning_rates, "learning-rate grid")
      ->check(CLI::NonNegativeNumber)
      ->delimiter(',');
  xval_cmd->add_option("--restarts", xval_args.config.restarts, "restart grid")
      ->check(CLI::PositiveNumber)
      ->delimiter(',');
  xval_cmd->add_option("--epochs", xval_args.config.epochs, "epoch grid")->check(CLI::PositiveNumber)->delimiter(',');
  xval_cmd->add_option("--out", xval_args.out, "CSV output file (default stdout)");

  ExportDotArgs dot_args;
  auto* dot_cmd = app.add_subcommand("export-dot", "write one Graphviz file per example");
  add_inputs(dot_cmd, dot_args.in, false, true);
  dot_cmd->add_option("--out", dot_args.out_dir, "output directory")->required();

  GenMoleculesArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen-molecules", "write a synthetic O-H bond molecule data set");
  gen_cmd->add_option("--count", gen_args.count, "number of molecules")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--seed", gen_args.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--out-examples", gen_args.out_examples, "example set file to write")->required();
  gen_cmd->add_option("--out-queries", gen_args.out_queries, "query file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  if (*ground_cmd) return cmd_ground(ground_args, std::cout, std::cerr);
  if (*train_cmd) return cmd_train(train_args, std::cout, std::cerr);
  if (*predict_cmd) return cmd_predict(predict_args, std::cout, std::cerr);
  if (*xval_cmd) return cmd_xval(xval_args, std::cout, std::cerr);
  if (*dot_cmd) return cmd_export_dot(dot_args, std::cout, std::cerr);
  if (*gen_cmd) return cmd_gen_molecules(gen_args, std::cout, std::cerr);
  return kInputError;
}
