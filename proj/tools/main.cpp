#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mobascore/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"per-action scoring for MOBA match timelines"};
  app.fallthrough(true);
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string config_path;
  std::string out_dir = "out";
  bool strict = false;
  auto* seed_opt = app.add_option("--seed", seed, "global random seed (default 1)");
  auto* config_opt = app.add_option("--config", config_path, "key=value config file");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (default out)");
  auto* strict_opt = app.add_flag("--strict", strict, "abort on invalid inputs instead of skipping");

  auto* synth = app.add_subcommand("synth", "generate synthetic matches plus a latent-value sidecar");
  int n_matches = 0;
  auto* n_opt = synth->add_option("--n", n_matches, "number of matches (default 2000)");

  auto* featurize = app.add_subcommand("featurize", "convert match JSON files into a dataset");
  std::string in_dir;
  std::string dataset_out;
  auto* in_opt = featurize->add_option("--in", in_dir, "directory of match files (default: --out)");
  auto* dataset_out_opt =
      featurize->add_option("--data", dataset_out, "output dataset (default <out>/dataset.jsonl)");

  auto* train = app.add_subcommand("train", "train a model variant on a featurized dataset");
  std::string train_data;
  int variant = 1;
  int epochs = 10;
  double lr = 1e-4;
  auto* train_data_opt =
      train->add_option("--data", train_data, "dataset path (default <out>/dataset.jsonl)");
  auto* variant_opt = train->add_option("--variant", variant, "model variant 1-7 (default 1)");
  auto* epochs_opt = train->add_option("--epochs", epochs, "training epochs (default 10)");
  auto* lr_opt = train->add_option("--lr", lr, "learning rate (default 1e-4)");

  auto* score = app.add_subcommand("score", "score one match file with a checkpoint");
  std::string checkpoint;
  std::string match_path;
  std::string outcome_str;
  bool as_csv = false;
  auto* ckpt_opt = score->add_option("--checkpoint", checkpoint,
                                     "checkpoint path (default <out>/checkpoint.bin)");
  score->add_option("--match", match_path, "match JSON file")->required();
  score->add_flag("--csv", as_csv, "machine-readable output");
  auto* outcome_opt = score->add_option("--outcome", outcome_str,
                                        "actual winner, required by outcome-encoded variants")
                          ->check(CLI::IsMember({"blue", "red"}));

  auto* evaluate = app.add_subcommand("evaluate", "run the evaluation battery, write report CSVs");
  std::vector<std::string> eval_ckpts;
  std::string eval_data;
  std::string split = "all";
  int threshold = 5;
  auto* eval_ckpt_opt = evaluate->add_option(
      "--checkpoint", eval_ckpts, "checkpoints; the first one drives ranking and PCA sections");
  auto* eval_data_opt =
      evaluate->add_option("--data", eval_data, "dataset path (default <out>/dataset.jsonl)");
  evaluate->add_option("--split", split, "evaluate train|val|test|all (default all)")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  auto* threshold_opt =
      evaluate->add_option("--threshold", threshold, "misestimate rank gap (default 5)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of loss gradients");
  bool perturb = false;
  gradcheck->add_flag("--perturb", perturb, "corrupt one gradient entry (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    mobascore::RunConfig cfg;
    if (config_opt->count() > 0) mobascore::apply_config_file(cfg, config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (out_opt->count() > 0) cfg.out_dir = out_dir;
    if (strict_opt->count() > 0) cfg.strict = strict;

    if (synth->parsed()) {
      if (n_opt->count() > 0) cfg.gen.n_matches = n_matches;
      mobascore::cmd_synth(cfg, std::cout);
    } else if (featurize->parsed()) {
      const std::string in = in_opt->count() > 0 ? in_dir : cfg.out_dir;
      const std::string data =
          dataset_out_opt->count() > 0 ? dataset_out : cfg.out_dir + "/dataset.jsonl";
      mobascore::cmd_featurize(cfg, in, data, std::cout);
    } else if (train->parsed()) {
      if (variant_opt->count() > 0) cfg.variant = variant;
      if (epochs_opt->count() > 0) cfg.epochs = epochs;
      if (lr_opt->count() > 0) cfg.lr = lr;
      const std::string data =
          train_data_opt->count() > 0 ? train_data : cfg.out_dir + "/dataset.jsonl";
      mobascore::cmd_train(cfg, data, std::cout);
    } else if (score->parsed()) {
      const std::string ckpt =
          ckpt_opt->count() > 0 ? checkpoint : cfg.out_dir + "/checkpoint.bin";
      std::optional<mobascore::Team> outcome;
      if (outcome_opt->count() > 0) outcome = mobascore::team_from_string(outcome_str);
      mobascore::cmd_score(cfg, ckpt, match_path, as_csv, outcome, std::cout);
    } else if (evaluate->parsed()) {
      if (threshold_opt->count() > 0) cfg.misestimate_threshold = threshold;
      std::vector<std::string> ckpts = eval_ckpts;
      if (eval_ckpt_opt->count() == 0) ckpts = {cfg.out_dir + "/checkpoint.bin"};
      const std::string data =
          eval_data_opt->count() > 0 ? eval_data : cfg.out_dir + "/dataset.jsonl";
      mobascore::cmd_evaluate(cfg, ckpts, data, split, std::cout);
    } else if (gradcheck->parsed()) {
      return mobascore::cmd_gradcheck(cfg, std::cout, perturb);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
