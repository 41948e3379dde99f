#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mobascore/pipeline.hpp"

using namespace mobascore;
namespace fsys = std::filesystem;

namespace {

std::string read_file(const fsys::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

long count_lines(const std::string& text) {
  long n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

long count_prefixed(const std::string& text, const std::string& prefix) {
  long n = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) ++n;
  }
  return n;
}

std::vector<MatchSample> numbered_samples(int n) {
  std::vector<MatchSample> samples(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    samples[static_cast<size_t>(i)].match_id = "m" + std::to_string(i);
    samples[static_cast<size_t>(i)].winner = i % 2 == 0 ? Team::kBlue : Team::kRed;
  }
  return samples;
}

std::set<std::string> ids_of(const std::vector<MatchSample>& v) {
  std::set<std::string> ids;
  for (const MatchSample& s : v) ids.insert(s.match_id);
  return ids;
}

}  // namespace

TEST_CASE("config keys parse into their slots") {
  RunConfig cfg;
  CHECK(cfg.seed == 1);
  CHECK(cfg.variant == 1);
  CHECK(cfg.epochs == 10);
  CHECK(cfg.lr == 1e-4);
  CHECK(cfg.train_fraction == 0.76);
  CHECK(cfg.val_fraction == 0.04);

  set_config_value(cfg, "seed", "99");
  set_config_value(cfg, "out", "elsewhere");
  set_config_value(cfg, "strict", "true");
  set_config_value(cfg, "variant", "6");
  set_config_value(cfg, "epochs", "3");
  set_config_value(cfg, "lr", "0.01");
  set_config_value(cfg, "train_fraction", "0.5");
  set_config_value(cfg, "val_fraction", "0.25");
  set_config_value(cfg, "misestimate_threshold", "4");
  set_config_value(cfg, "n_matches", "321");
  set_config_value(cfg, "label_flip_probability", "0.1");
  set_config_value(cfg, "highest_ward_bounty", "150");
  CHECK(cfg.seed == 99);
  CHECK(cfg.out_dir == "elsewhere");
  CHECK(cfg.strict);
  CHECK(cfg.variant == 6);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.lr == 0.01);
  CHECK(cfg.train_fraction == 0.5);
  CHECK(cfg.val_fraction == 0.25);
  CHECK(cfg.misestimate_threshold == 4);
  CHECK(cfg.gen.n_matches == 321);
  CHECK(cfg.gen.label_flip_probability == 0.1);
  CHECK(cfg.gen.constants.highest_ward_bounty == 150.0);

  set_config_value(cfg, "strict", "off");
  CHECK_FALSE(cfg.strict);

  std::string weights;
  for (int i = 0; i < kFeatureDim; ++i) weights += (i ? ",0.5" : "0.5");
  set_config_value(cfg, "latent_weights", weights);
  CHECK(cfg.gen.latent_weights.size() == kFeatureDim);
  CHECK(cfg.gen.latent_weights[17] == 0.5);

  try {
    set_config_value(cfg, "bogus", "1");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  try {
    set_config_value(cfg, "epochs", "three");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("epochs") != std::string::npos);
  }
  CHECK_THROWS_AS(set_config_value(cfg, "strict", "maybe"), ValidationError);
  CHECK_THROWS_AS(set_config_value(cfg, "latent_weights", "1,2,3"), ValidationError);
  CHECK_THROWS_AS(set_config_value(cfg, "seed", "-4"), ValidationError);
}

TEST_CASE("config files are flat key=value text with comments") {
  const std::string path = "test_pipeline_cfg.txt";
  {
    std::ofstream out(path);
    out << "# comment\n\n  seed = 7\nvariant=4\n  lr = 0.002  \n";
  }
  RunConfig cfg;
  apply_config_file(cfg, path);
  CHECK(cfg.seed == 7);
  CHECK(cfg.variant == 4);
  CHECK(cfg.lr == 0.002);

  {
    std::ofstream out(path);
    out << "seed=1\nnot a setting\n";
  }
  try {
    apply_config_file(cfg, path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  fsys::remove(path);
  CHECK_THROWS_AS(apply_config_file(cfg, path), IoError);
}

TEST_CASE("dataset splits are sized by the fractions and reshuffle by seed") {
  const DatasetSplit split = split_dataset(numbered_samples(100), 0.76, 0.04, 11);
  CHECK(split.train.size() == 76);
  CHECK(split.val.size() == 4);
  CHECK(split.test.size() == 20);

  std::set<std::string> all = ids_of(split.train);
  for (const MatchSample& s : split.val) all.insert(s.match_id);
  for (const MatchSample& s : split.test) all.insert(s.match_id);
  CHECK(all.size() == 100);

  const DatasetSplit again = split_dataset(numbered_samples(100), 0.76, 0.04, 11);
  REQUIRE(again.train.size() == split.train.size());
  for (size_t i = 0; i < split.train.size(); ++i) {
    CHECK(again.train[i].match_id == split.train[i].match_id);
  }

  const DatasetSplit other = split_dataset(numbered_samples(100), 0.76, 0.04, 12);
  CHECK(ids_of(other.val) != ids_of(split.val));

  CHECK_THROWS_AS(split_dataset(numbered_samples(100), 0.0, 0.04, 1), ValidationError);
  CHECK_THROWS_AS(split_dataset(numbered_samples(100), 0.8, 0.2, 1), ValidationError);
  CHECK_THROWS_AS(split_dataset(numbered_samples(3), 0.76, 0.04, 1), ValidationError);
}

TEST_CASE("the command pipeline runs end to end on a tiny corpus") {
  const fsys::path root = "test_pipeline_tmp";
  fsys::remove_all(root);

  RunConfig cfg;
  cfg.seed = 13;
  cfg.out_dir = (root / "corpus").string();
  cfg.gen.n_matches = 30;
  cfg.gen.min_events = 3;
  cfg.gen.max_events = 6;
  cfg.variant = 7;
  cfg.epochs = 2;

  std::ostringstream log;
  cmd_synth(cfg, log);
  CHECK(log.str().find("30") != std::string::npos);

  long json_files = 0;
  for (const auto& entry : fsys::directory_iterator(root / "corpus")) {
    if (entry.path().extension() == ".json") ++json_files;
  }
  CHECK(json_files == 30);
  CHECK(fsys::exists(root / "corpus" / "roles.csv"));
  CHECK(fsys::exists(root / "corpus" / "latents.csv"));

  // The generator is deterministic: a second run produces the same bytes.
  RunConfig cfg2 = cfg;
  cfg2.out_dir = (root / "corpus2").string();
  std::ostringstream log2;
  cmd_synth(cfg2, log2);
  for (const auto& entry : fsys::directory_iterator(root / "corpus")) {
    const fsys::path twin = root / "corpus2" / entry.path().filename();
    REQUIRE(fsys::exists(twin));
    CHECK(read_file(entry.path()) == read_file(twin));
  }

  const std::string dataset = (root / "dataset.jsonl").string();
  std::ostringstream feat_log;
  cmd_featurize(cfg, (root / "corpus").string(), dataset, feat_log);
  CHECK(feat_log.str().find("featurized 30 matches (0 skipped)") != std::string::npos);
  CHECK(load_dataset_file(dataset).size() == 30);

  // A corrupt match file is skipped with a note, or aborts under strict.
  fsys::path victim;
  for (const auto& entry : fsys::directory_iterator(root / "corpus2")) {
    if (entry.path().extension() == ".json") {
      victim = entry.path();
      break;
    }
  }
  REQUIRE_FALSE(victim.empty());
  {
    std::ofstream out(victim, std::ios::binary);
    out << "{broken";
  }
  const std::string dataset2 = (root / "dataset2.jsonl").string();
  std::ostringstream skip_log;
  cmd_featurize(cfg2, (root / "corpus2").string(), dataset2, skip_log);
  CHECK(skip_log.str().find("featurized 29 matches (1 skipped)") != std::string::npos);
  CHECK(skip_log.str().find("skipped " + victim.filename().string()) != std::string::npos);
  CHECK(load_dataset_file(dataset2).size() == 29);

  cfg2.strict = true;
  std::ostringstream strict_log;
  CHECK_THROWS_AS(
      cmd_featurize(cfg2, (root / "corpus2").string(), dataset2, strict_log), IoError);

  // Train a small MLP variant and check the artifacts.
  RunConfig train_cfg = cfg;
  train_cfg.out_dir = (root / "run").string();
  std::ostringstream train_log;
  cmd_train(train_cfg, dataset, train_log);
  CHECK(train_log.str().find("split 22/1/7 train/val/test") != std::string::npos);
  const fsys::path ckpt = root / "run" / "checkpoint.bin";
  CHECK(fsys::exists(ckpt));
  const std::string history = read_file(root / "run" / "history.csv");
  CHECK(history.rfind("epoch,train_loss,val_accuracy\n", 0) == 0);
  CHECK(count_lines(history) == 1 + 2);

  // Same seed, same data: the history is reproduced byte for byte.
  RunConfig train_cfg_b = train_cfg;
  train_cfg_b.out_dir = (root / "run_b").string();
  std::ostringstream train_log_b;
  cmd_train(train_cfg_b, dataset, train_log_b);
  CHECK(read_file(root / "run_b" / "history.csv") == history);
  CHECK(read_file(root / "run_b" / "checkpoint.bin") == read_file(ckpt));

  // Score one raw match with the trained checkpoint.
  fsys::path match_file;
  for (const auto& entry : fsys::directory_iterator(root / "corpus")) {
    if (entry.path().extension() == ".json") {
      match_file = entry.path();
      break;
    }
  }
  REQUIRE_FALSE(match_file.empty());
  std::ostringstream score_csv;
  cmd_score(cfg, ckpt.string(), match_file.string(), true, std::nullopt, score_csv);
  const std::string csv = score_csv.str();
  CHECK(csv.rfind("row,participant,timestamp_ms,kind,score\n", 0) == 0);
  const ParsedMatch scored = load_match_file(match_file.string());
  CHECK(count_prefixed(csv, "action,") ==
        static_cast<long>(derive_events(scored.events).size()));
  CHECK(count_prefixed(csv, "total,") == 10);
  CHECK(count_prefixed(csv, "team,") == 2);

  std::ostringstream score_text;
  cmd_score(cfg, ckpt.string(), match_file.string(), false, std::nullopt, score_text);
  CHECK(score_text.str().find("predicted winner:") != std::string::npos);

  // An outcome-encoded checkpoint refuses to score without the label.
  RunConfig v2_cfg = cfg;
  v2_cfg.variant = 2;
  v2_cfg.epochs = 0;
  v2_cfg.out_dir = (root / "run_v2").string();
  std::ostringstream v2_log;
  cmd_train(v2_cfg, dataset, v2_log);
  const std::string v2_ckpt = (root / "run_v2" / "checkpoint.bin").string();
  try {
    std::ostringstream sink;
    cmd_score(cfg, v2_ckpt, match_file.string(), false, std::nullopt, sink);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("--outcome") != std::string::npos);
  }
  std::ostringstream v2_ok;
  cmd_score(cfg, v2_ckpt, match_file.string(), false, Team::kBlue, v2_ok);
  CHECK(v2_ok.str().find("predicted winner:") != std::string::npos);

  // Evaluate the trained checkpoint on the held-out split.
  RunConfig eval_cfg = train_cfg;
  std::ostringstream eval_log;
  cmd_evaluate(eval_cfg, {ckpt.string()}, dataset, "test", eval_log);
  CHECK(eval_log.str().find("evaluated 7 matches (test)") != std::string::npos);
  const fsys::path report = root / "run" / "report";
  for (const char* name : {"discernment.csv", "heatmap_gold.csv", "misestimates_kda.csv",
                           "pca_curves.csv", "summary.txt"}) {
    CHECK(fsys::exists(report / name));
  }
  const std::string disc = read_file(report / "discernment.csv");
  CHECK(count_prefixed(disc, "model7,") == 1);
  CHECK(count_prefixed(disc, "gold,") == 1);

  CHECK_THROWS_AS(cmd_evaluate(eval_cfg, {}, dataset, "all", eval_log), ValidationError);
  CHECK_THROWS_AS(cmd_evaluate(eval_cfg, {ckpt.string()}, dataset, "half", eval_log),
                  ValidationError);

  fsys::remove_all(root);
}
