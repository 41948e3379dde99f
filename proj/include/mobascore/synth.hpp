#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mobascore/features.hpp"
#include "mobascore/match.hpp"
#include "mobascore/model.hpp"

namespace mobascore {

// Generator for matches with a known per-action ground-truth value, so that
// trained models can be checked against something other than their own output.
// Each action's true value is latent_weights . features; the winner is the
// team with the larger value sum, flipped with a small probability.
struct GenConfig {
  std::uint64_t seed = 1;
  int n_matches = 2000;
  int min_events = 40;  // raw events per player, before kill expansion
  int max_events = 120;
  double label_flip_probability = 0.05;
  Vector latent_weights;  // 30 entries; default_latent_weights() if empty
  double skill_spread = 1.0;
  // Stddev of Gaussian noise added to each team's value sum before picking the
  // winner; zero keeps the argmax rule exact.
  double outcome_noise = 0.0;
  // Minimum pre-flip gap between the two teams' value sums. Matches closer
  // than this are rerolled (bounded attempts). Near-tied matches get their
  // label from a hair-thin value difference, which behaves like extra label
  // noise on top of the configured flip rate; the floor keeps every kept
  // label attributable to a real quality difference. Zero disables rerolls.
  double margin_floor = 750.0;

  // Couplings between a player's hidden skill and what they do.
  double count_tilt = 0.3;   // event count scales with 1 + count_tilt * skill
  double kill_tilt = 0.4;    // kill-event mass scales with exp(kill_tilt * skill)
  double victim_tilt = 0.5;  // victim pick weight is exp(-victim_tilt * skill)

  // Per-player aggregates written into the frames, as a function of the
  // player's standardized value total plus noise. The defaults are tuned so
  // the gold baseline lands clearly above the creep baseline and both stay
  // below a trained model.
  double gold_base = 9000.0;
  double gold_signal = 2200.0;
  double gold_noise = 2600.0;
  double creep_base = 170.0;
  double creep_signal = 25.0;
  double creep_noise = 60.0;

  MatchConstants constants;
  int synthetic_champions = 20;

  void validate() const;
};

Vector default_latent_weights();

// Fixed four-champion core plus seeded synthetic champions.
ChampionRoleTable synth_role_table(int synthetic_champions, std::uint64_t seed);

struct GeneratedMatch {
  ParsedMatch match;
  MatchSample sample;
  std::array<std::vector<double>, kPlayersPerMatch> latents;  // aligned with sample.sequences
};

GeneratedMatch generate_match(const GenConfig& config, const ChampionRoleTable& table, int index);

struct LabeledDataset {
  std::vector<MatchSample> samples;
  std::vector<std::array<std::vector<double>, kPlayersPerMatch>> latents;
  double label_flip_probability = 0.0;
};

LabeledDataset generate(const GenConfig& config);

struct OracleReport {
  double spearman = 0.0;  // learned action scores vs latent values, pooled
  double accuracy = 0.0;
  double bayes_ceiling = 0.0;
  long n_actions = 0;
};

OracleReport oracle_scores(const LabeledDataset& data, const Ensemble& ens);

}  // namespace mobascore
