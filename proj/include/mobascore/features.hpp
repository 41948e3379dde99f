#pragma once

#include <Eigen/Core>
#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mobascore/match.hpp"

namespace mobascore {

inline constexpr int kFeatureDim = 30;

// One scored action as the model sees it.
using ActionVector = Eigen::Matrix<double, kFeatureDim, 1>;

// Fixed slot layout of an ActionVector. Order matters: training data,
// checkpoints, and the latent-weight configuration all assume it.
namespace feature_slot {
inline constexpr int kTimestamp = 0;
// Champion roles (multi-hot).
inline constexpr int kMage = 1;
inline constexpr int kFighter = 2;
inline constexpr int kSupport = 3;
inline constexpr int kTank = 4;
inline constexpr int kAssassin = 5;
inline constexpr int kMarksman = 6;
// Lane (one-hot), same order as the Lane enum.
inline constexpr int kTop = 7;
inline constexpr int kMid = 8;
inline constexpr int kBottom = 9;
inline constexpr int kUtility = 10;
inline constexpr int kJungle = 11;
inline constexpr int kPosX = 12;
inline constexpr int kPosY = 13;
inline constexpr int kDistance = 14;
// 14 event-kind indicators (one-hot), same order as the EventKind enum.
inline constexpr int kEventBase = 15;
inline constexpr int kEventWeight = 29;
}  // namespace feature_slot

// Patch-dependent normalization constants, loadable from a key=value file.
struct MatchConstants {
  double highest_item_purchase_cost = 7800.0;
  double highest_item_sell_cost = 5460.0;
  double highest_ward_bounty = 75.0;
  int number_of_players = kPlayersPerMatch;

  void validate() const;  // throws ValidationError unless all positive
};

MatchConstants parse_match_constants(std::string_view text);
MatchConstants load_match_constants_file(const std::string& path);

// Per-player aggregates backing the baseline predictors.
struct PlayerStats {
  int kills = 0;
  int deaths = 0;
  int assists = 0;
  std::int64_t gold = 0;
  int creep = 0;

  double kda() const { return (kills + assists) / static_cast<double>(std::max(deaths, 1)); }
  friend bool operator==(const PlayerStats&, const PlayerStats&) = default;
};

// The training/eval unit for one match: ten chronological action sequences
// (indexed by participant_id - 1, possibly empty), the outcome label, and
// the baseline aggregates.
struct MatchSample {
  std::string match_id;
  Team winner = Team::kBlue;
  std::array<std::vector<ActionVector>, kPlayersPerMatch> sequences;
  std::array<PlayerStats, kPlayersPerMatch> baselines{};

  std::size_t total_actions() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
  }
};

// Magnitude of one action in [0,1]:
//   ITEM_PURCHASED / ITEM_DESTROYED   cost / highest purchase cost
//   ITEM_SOLD                         sell value / highest sell cost
//   SKILL_LEVEL_UP                    skill level / max skill level
//   LEVEL_UP                          level rank (1 = highest level) / player count
//   WARD_PLACED / WARD_KILL           bounty / highest bounty
//   CHAMPION_KILL / _ASSIST           actor's damage / total the victim received
//   CHAMPION_KILL_VICTIM              damage dealt back / total received, capped at 1
//   BUILDING_KILL* / ELITE_MONSTER*   1 / involved players
// Results are clamped to [0,1]. LEVEL_UP needs the precomputed rank; a
// missing payload field raises ValidationError naming the kind and field.
double event_weight(const DerivedEvent& ev, const MatchConstants& consts,
                    std::optional<int> level_rank = std::nullopt);

// Assembles the 30-dim vector from precomputed parts. position is
// normalized; duration_ms must be positive.
ActionVector vectorize(const DerivedEvent& ev, const RoleVector& roles, Lane lane,
                       const Eigen::Vector2d& position, double distance, double weight,
                       std::int64_t duration_ms);

// Kills/deaths/assists counted from derived kill events; gold and creep read
// from the final snapshot (zero when the match has no snapshots).
std::array<PlayerStats, kPlayersPerMatch> baseline_metrics(
    const std::vector<DerivedEvent>& derived, const std::vector<FrameSnapshot>& frames);

// Full pipeline for one parsed match: derive events, resolve positions and
// isolation, weight, vectorize, and group chronologically per participant.
MatchSample build_match_sample(const ParsedMatch& match, const ChampionRoleTable& table,
                               const MatchConstants& consts);

// --- dataset serialization ---------------------------------------------------
// One JSON record per line. Floats are written with 9 significant digits,
// so writing a parsed record again reproduces the line byte for byte.

std::string format_float(double v);  // %.9g, shared by every CSV/JSON writer

std::string serialize_sample(const MatchSample& sample);
MatchSample parse_sample(std::string_view line);

void save_dataset_file(const std::string& path, const std::vector<MatchSample>& samples);
std::vector<MatchSample> load_dataset_file(const std::string& path);

}  // namespace mobascore
