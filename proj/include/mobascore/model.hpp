#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mobascore/features.hpp"
#include "mobascore/match.hpp"
#include "mobascore/nn.hpp"

namespace mobascore {

enum class Encoder { kGru, kMlp };
enum class SequenceOrder { kReversed, kChronological };
enum class InitialState { kZeros, kOutcomeEncoded };
enum class LossKind { kMargin, kCrossEntropy };
enum class DiscernMethod { kDeterministic, kConfidence };

struct VariantConfig {
  int id = 1;
  Encoder encoder = Encoder::kGru;
  SequenceOrder order = SequenceOrder::kReversed;
  InitialState h0 = InitialState::kZeros;
  LossKind loss = LossKind::kMargin;

  // Cross-entropy models pick the winner through the confidence value; margin
  // models compare team sums directly. Both agree whenever the sums differ.
  DiscernMethod method() const {
    return loss == LossKind::kCrossEntropy ? DiscernMethod::kConfidence : DiscernMethod::kDeterministic;
  }

  static VariantConfig for_variant(int id);
};

struct HyperParams {
  double lr = 1e-4;
  int epochs = 10;
  int hidden = 15;
  int layers = 2;
};

// One per player slot. GRU variants use `gru` + `head`; MLP variants use `mlp`.
struct SubModel {
  std::vector<GruLayerParams> gru;
  SlpParams head;
  MlpParams mlp;
};

struct Ensemble {
  VariantConfig config;
  HyperParams hyper;
  std::array<SubModel, kPlayersPerMatch> subs;

  static Ensemble init(const VariantConfig& config, const HyperParams& hyper, std::uint64_t seed);
};

int submodel_param_count(const Ensemble& ens);
Vector flatten_submodel(const Ensemble& ens, int slot);
void unflatten_submodel(Ensemble& ens, int slot, const Vector& flat);
// Sets every submodel to the arithmetic mean of the ten, leaving all slots
// bit-identical.
void average_submodels(Ensemble& ens);

struct ScoreReport {
  std::array<std::vector<double>, kPlayersPerMatch> action_scores;  // chronological order
  std::array<double, kPlayersPerMatch> player_totals{};
  double team_blue = 0.0;
  double team_red = 0.0;
};

struct TeamLabels {
  int q_blue = 0;
  int q_red = 0;

  static TeamLabels from_winner(Team winner);
};

// Scores every action of every player. Outcome-encoded variants require the
// winner so each side's initial hidden state can be set (ones for the winner's
// players, zeros for the loser's); other variants ignore known_outcome.
ScoreReport score_match(const Ensemble& ens, const MatchSample& sample,
                        std::optional<Team> known_outcome = std::nullopt);

// P(blue is the winner) as a logistic function of the team-score gap.
double confidence(double team_blue, double team_red);

struct LossResult {
  double loss = 0.0;
  double d_blue = 0.0;  // d loss / d team_blue
  double d_red = 0.0;   // d loss / d team_red
};

LossResult bce_loss(double team_blue, double team_red, const TeamLabels& labels);
// Hinge on the team sums: max(0, loser_sum - winner_sum), zero subgradient at
// the tie.
LossResult relu_loss(double team_blue, double team_red, const TeamLabels& labels);
LossResult team_loss(LossKind kind, double team_blue, double team_red, const TeamLabels& labels);

struct Discernment {
  Team predicted = Team::kRed;
  bool tie = false;
  std::optional<double> confidence;
};

Discernment discern(double team_blue, double team_red, DiscernMethod method);

// One optimization step on one match: forward all ten players, apply the
// configured loss to the team sums, backpropagate into each submodel, Adam-step
// each with its own optimizer state, then average parameters across the ten.
// Returns the match loss. opt must hold one state per slot, sized to the
// flattened submodel.
double train_match(Ensemble& ens, const MatchSample& sample, std::vector<AdamState>& opt, double lr);

// Loss on one match and its gradient wrt one submodel's flattened parameters
// (the pure computation behind train_match, without the optimizer step).
// Outcome-encoded variants read the label from the sample.
std::pair<double, Vector> match_loss_gradient(const Ensemble& ens, const MatchSample& sample,
                                              int slot);

// Fraction of matches whose discerned winner matches the label.
double discernment_accuracy(const Ensemble& ens, const std::vector<MatchSample>& data);

struct EpochStats {
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based; 0 means no epoch ran
  double best_accuracy = 0.0;
};

// Runs hyper.epochs passes over train_set (seeded reshuffle each epoch),
// evaluating on val_set after each; leaves ens holding the parameters of the
// epoch with the highest validation accuracy (earliest wins ties).
TrainHistory train(Ensemble& ens, const std::vector<MatchSample>& train_set,
                   const std::vector<MatchSample>& val_set, const HyperParams& hyper,
                   std::uint64_t seed);

void save_checkpoint(const Ensemble& ens, const std::string& path);
Ensemble load_checkpoint(const std::string& path);

}  // namespace mobascore
