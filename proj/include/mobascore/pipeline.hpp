#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mobascore/eval.hpp"
#include "mobascore/synth.hpp"

namespace mobascore {

// Settings shared by the subcommands, merged from defaults, an optional
// key=value config file, and command-line flags (flags win).
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool strict = false;

  GenConfig gen;            // generator knobs; gen.seed follows seed
  std::string roles_file;   // champion role CSV; empty tries <dir>/roles.csv

  int variant = 1;
  int epochs = 10;
  double lr = 1e-4;
  double train_fraction = 0.76;
  double val_fraction = 0.04;
  int misestimate_threshold = 5;
};

// Applies one key=value setting. Unknown keys and unparseable values throw
// ValidationError naming the key.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// Reads a flat key=value file ('#' comments and blank lines allowed).
void apply_config_file(RunConfig& cfg, const std::string& path);

struct DatasetSplit {
  std::vector<MatchSample> train;
  std::vector<MatchSample> val;
  std::vector<MatchSample> test;
};

// Seeded-shuffle split into floor(n*train_fraction) / floor(n*val_fraction) /
// remainder. Every part must end up non-empty.
DatasetSplit split_dataset(std::vector<MatchSample> samples, double train_fraction,
                           double val_fraction, std::uint64_t seed);

// Writes one match JSON file per generated match plus roles.csv and
// latents.csv into cfg.out_dir.
void cmd_synth(const RunConfig& cfg, std::ostream& out);

// Parses every *.json match in in_dir (sorted by name) and writes the
// featurized dataset to out_file. Invalid files abort under cfg.strict and
// are skipped with a report otherwise.
void cmd_featurize(const RunConfig& cfg, const std::string& in_dir, const std::string& out_file,
                   std::ostream& out);

// Splits the dataset, trains cfg.variant, and writes checkpoint.bin and
// history.csv into cfg.out_dir.
void cmd_train(const RunConfig& cfg, const std::string& dataset_path, std::ostream& out);

// Scores one match file with a checkpoint and prints per-action rows plus
// totals, as text or CSV.
void cmd_score(const RunConfig& cfg, const std::string& checkpoint_path,
               const std::string& match_path, bool csv, std::optional<Team> outcome,
               std::ostream& out);

// Runs the evaluation battery for one or more checkpoints over a dataset
// (optionally one split of it) and writes the report CSVs to
// cfg.out_dir/report. Ranking, misestimate, and PCA sections use the first
// checkpoint.
void cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& checkpoint_paths,
                  const std::string& dataset_path, const std::string& split, std::ostream& out);

// Finite-difference check of every variant's match-loss gradient on small
// random instances. Returns 0 and prints "PASS max_rel_err=<value>" when all
// relative errors stay below 1e-5, else prints FAIL and returns 1. perturb
// deliberately corrupts one analytic gradient (negative-control hook).
int cmd_gradcheck(const RunConfig& cfg, std::ostream& out, bool perturb = false);

}  // namespace mobascore
