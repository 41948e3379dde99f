#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mobascore/core.hpp"

namespace mobascore {

// Map coordinates run 0..15000 on both axes; blue spawns at the low corner.
inline constexpr double kMapExtent = 15000.0;
inline constexpr std::int64_t kFrameIntervalMs = 60000;
inline constexpr int kPlayersPerMatch = 10;

enum class Team { kBlue, kRed };

enum class Lane { kTop, kMid, kBottom, kUtility, kJungle };
inline constexpr int kLaneCount = 5;

// The ten event kinds that appear in raw timelines.
enum class RawEventKind {
  kItemPurchased,
  kItemSold,
  kItemDestroyed,
  kSkillLevelUp,
  kLevelUp,
  kWardPlaced,
  kWardKill,
  kChampionKill,
  kBuildingKill,
  kEliteMonsterKill,
};
inline constexpr int kRawEventKindCount = 10;

// Raw kinds plus the assist/victim expansions produced by derive_events.
// The enum order here is also the indicator-slot order in feature vectors.
enum class EventKind {
  kItemPurchased,
  kItemSold,
  kItemDestroyed,
  kSkillLevelUp,
  kLevelUp,
  kWardPlaced,
  kWardKill,
  kChampionKill,
  kChampionKillAssist,
  kChampionKillVictim,
  kBuildingKill,
  kBuildingKillAssist,
  kEliteMonsterKill,
  kEliteMonsterKillAssist,
};
inline constexpr int kEventKindCount = 14;

std::string to_string(Team t);
std::string to_string(Lane l);
std::string to_string(RawEventKind k);
std::string to_string(EventKind k);
Team team_from_string(std::string_view s);
Lane lane_from_string(std::string_view s);
RawEventKind raw_event_kind_from_string(std::string_view s);

// Participants 1..5 are blue, 6..10 red.
inline Team team_of_participant(int participant_id) {
  return participant_id <= 5 ? Team::kBlue : Team::kRed;
}

struct Vec2i {
  int x = 0;
  int y = 0;
  friend bool operator==(const Vec2i&, const Vec2i&) = default;
};

struct PlayerInfo {
  int participant_id = 0;  // 1..10
  Team team = Team::kBlue;
  std::string champion;
  Lane lane = Lane::kTop;
  friend bool operator==(const PlayerInfo&, const PlayerInfo&) = default;
};

struct MatchRecord {
  std::string match_id;
  std::int64_t duration_ms = 0;
  Team winner = Team::kBlue;
  std::array<PlayerInfo, kPlayersPerMatch> players{};  // indexed by participant_id - 1
  friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

// Kind-specific numbers carried by a raw event. Every field is optional at
// parse time; the feature stage reports a missing field by name when a
// weight formula actually needs it.
struct EventPayload {
  std::optional<std::int64_t> gold_cost;      // ITEM_PURCHASED, ITEM_DESTROYED
  std::optional<std::int64_t> sell_value;     // ITEM_SOLD
  std::optional<std::int64_t> ward_bounty;    // WARD_PLACED, WARD_KILL
  std::optional<int> skill_level;             // SKILL_LEVEL_UP
  std::optional<int> max_skill_level;         // SKILL_LEVEL_UP
  std::optional<int> level;                   // LEVEL_UP
  std::map<int, std::int64_t> damage_by_attacker;        // CHAMPION_KILL
  std::optional<std::int64_t> total_damage_received;     // CHAMPION_KILL
  std::optional<std::int64_t> victim_damage_dealt;       // CHAMPION_KILL
  friend bool operator==(const EventPayload&, const EventPayload&) = default;
};

struct TimelineEvent {
  std::int64_t timestamp_ms = 0;
  RawEventKind kind = RawEventKind::kItemPurchased;
  int actor = 0;  // participant_id
  std::vector<int> assisting;
  std::optional<int> victim;
  std::optional<Vec2i> position;
  EventPayload payload;
  friend bool operator==(const TimelineEvent&, const TimelineEvent&) = default;
};

struct PlayerFrame {
  Vec2i position;
  std::int64_t total_gold = 0;
  int minions_killed = 0;
  int jungle_minions_killed = 0;
  int level = 1;
  friend bool operator==(const PlayerFrame&, const PlayerFrame&) = default;
};

// Periodic state snapshot for all ten players, one per minute from 0.
struct FrameSnapshot {
  std::int64_t timestamp_ms = 0;
  std::array<PlayerFrame, kPlayersPerMatch> players{};
  friend bool operator==(const FrameSnapshot&, const FrameSnapshot&) = default;
};

struct ParsedMatch {
  MatchRecord meta;
  std::vector<TimelineEvent> events;   // sorted by timestamp
  std::vector<FrameSnapshot> frames;   // sorted, 60 s apart, starting at 0
  friend bool operator==(const ParsedMatch&, const ParsedMatch&) = default;
};

// One scoreable action credited to a single participant. Kill events expand
// into one of these per involved player; everything else passes through.
struct DerivedEvent {
  std::int64_t timestamp_ms = 0;
  EventKind kind = EventKind::kItemPurchased;
  int actor = 0;
  std::optional<Vec2i> position;
  // Inputs for the weight formulas, copied from the source payload.
  std::optional<std::int64_t> gold;                    // item cost / sell value / ward bounty
  std::optional<int> skill_level;
  std::optional<int> max_skill_level;
  std::optional<int> level;                            // LEVEL_UP
  std::optional<std::int64_t> damage_dealt;            // kill/assist: by actor; victim: dealt back
  std::optional<std::int64_t> total_damage_received;   // kill family denominator
  int involved_players = 0;                            // building/monster kills
};

// Champion class flags in the order assassin, fighter, mage, marksman,
// support, tank (the column order of the roles CSV).
using RoleVector = std::array<int, 6>;

class ChampionRoleTable {
 public:
  void add(const std::string& champion, const RoleVector& roles);
  // Throws ValidationError naming the champion when it is absent.
  const RoleVector& lookup(const std::string& champion) const;
  bool contains(const std::string& champion) const { return rows_.count(champion) > 0; }
  std::size_t size() const { return rows_.size(); }
  const std::map<std::string, RoleVector>& rows() const { return rows_; }

 private:
  std::map<std::string, RoleVector> rows_;
};

// --- parsing and serialization ---------------------------------------------

// Parses one match document (JSON). Throws ParseError for malformed text
// (message includes the byte offset) and ValidationError for structurally
// valid documents that break a constraint; the message names the field.
ParsedMatch parse_match(std::string_view text);

// Inverse of parse_match. Match documents contain only integers and strings,
// so parse(serialize(m)) == m exactly.
std::string serialize_match(const ParsedMatch& match);

ParsedMatch load_match_file(const std::string& path);

// CSV with header "champion,assassin,fighter,mage,marksman,support,tank";
// cells are 0/1 and every row has at least one role set.
ChampionRoleTable parse_role_table(std::string_view csv);
ChampionRoleTable load_role_table_file(const std::string& path);
std::string serialize_role_table(const ChampionRoleTable& table);

// --- event expansion and geometry -------------------------------------------

// Expands kill events into per-participant actions. A CHAMPION_KILL with k
// assists becomes 2 + k events ordered kill, assists (ascending participant),
// victim; building and monster kills get one assist event per assister.
// Output is stably sorted by timestamp. Throws ValidationError when a
// CHAMPION_KILL lacks a victim.
std::vector<DerivedEvent> derive_events(const std::vector<TimelineEvent>& events);

// Position of one player at an arbitrary time, linearly interpolated between
// the bracketing snapshots and clamped to the last one. Raw map units.
Eigen::Vector2d interpolate_position(int participant_id, std::int64_t timestamp_ms,
                                     const std::vector<FrameSnapshot>& frames);

// Normalized [0,1]^2 position for a derived event: an explicit position wins,
// item purchases/sales fall back to the acting team's base corner, and
// everything else interpolates the actor's snapshot track.
Eigen::Vector2d impute_position(const DerivedEvent& event,
                                const std::vector<FrameSnapshot>& frames);

// Share of the team's pairwise spread carried by one player: the sum of the
// actor's Euclidean distances to the four teammates over the sum across all
// ten unordered pairs within the team. Positions are normalized coordinates
// for the actor's team of five, with actor_index selecting the actor's slot.
// A degenerate cloud (total pairwise distance under 1e-12) yields 0.4 for
// everyone, the symmetric limit. The five shares always sum to 2.
double isolation_share(int actor_index, const std::array<Eigen::Vector2d, 5>& team_positions);

}  // namespace mobascore
