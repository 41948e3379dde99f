#include "mobascore/features.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mobascore {

using nlohmann::json;

void MatchConstants::validate() const {
  if (highest_item_purchase_cost <= 0 || highest_item_sell_cost <= 0 ||
      highest_ward_bounty <= 0 || number_of_players <= 0) {
    throw ValidationError("match constants must all be positive");
  }
}

MatchConstants parse_match_constants(std::string_view text) {
  MatchConstants consts;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    const std::size_t end = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    // Strip whitespace and comments.
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("constants line " + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
      return s;
    };
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    double parsed = 0;
    try {
      std::size_t used = 0;
      parsed = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("constants line " + std::to_string(line_no) + ": bad number '" + value + "'");
    }
    if (key == "highest_item_purchase_cost") consts.highest_item_purchase_cost = parsed;
    else if (key == "highest_item_sell_cost") consts.highest_item_sell_cost = parsed;
    else if (key == "highest_ward_bounty") consts.highest_ward_bounty = parsed;
    else if (key == "number_of_players") consts.number_of_players = static_cast<int>(parsed);
    else throw ValidationError("constants line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  consts.validate();
  return consts;
}

MatchConstants load_match_constants_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open constants file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_match_constants(buf.str());
}

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

[[noreturn]] void missing_field(EventKind kind, const char* field) {
  throw ValidationError(to_string(kind) + ": missing payload field '" + field + "'");
}

}  // namespace

double event_weight(const DerivedEvent& ev, const MatchConstants& consts,
                    std::optional<int> level_rank) {
  consts.validate();
  switch (ev.kind) {
    case EventKind::kItemPurchased:
    case EventKind::kItemDestroyed:
      if (!ev.gold) missing_field(ev.kind, "gold_cost");
      return clamp01(static_cast<double>(*ev.gold) / consts.highest_item_purchase_cost);
    case EventKind::kItemSold:
      if (!ev.gold) missing_field(ev.kind, "sell_value");
      return clamp01(static_cast<double>(*ev.gold) / consts.highest_item_sell_cost);
    case EventKind::kSkillLevelUp:
      if (!ev.skill_level) missing_field(ev.kind, "skill_level");
      if (!ev.max_skill_level) missing_field(ev.kind, "max_skill_level");
      if (*ev.max_skill_level <= 0) {
        throw ValidationError("SKILL_LEVEL_UP: max_skill_level must be positive");
      }
      return clamp01(static_cast<double>(*ev.skill_level) / *ev.max_skill_level);
    case EventKind::kLevelUp:
      if (!level_rank) {
        throw ValidationError("LEVEL_UP: level rank not supplied");
      }
      return clamp01(static_cast<double>(*level_rank) / consts.number_of_players);
    case EventKind::kWardPlaced:
    case EventKind::kWardKill:
      if (!ev.gold) missing_field(ev.kind, "ward_bounty");
      return clamp01(static_cast<double>(*ev.gold) / consts.highest_ward_bounty);
    case EventKind::kChampionKill:
    case EventKind::kChampionKillAssist:
    case EventKind::kChampionKillVictim: {
      if (!ev.damage_dealt) {
        missing_field(ev.kind, ev.kind == EventKind::kChampionKillVictim ? "victim_damage_dealt"
                                                                         : "damage_by_attacker");
      }
      if (!ev.total_damage_received) missing_field(ev.kind, "total_damage_received");
      if (*ev.total_damage_received <= 0) return 0.0;
      return clamp01(static_cast<double>(*ev.damage_dealt) /
                     static_cast<double>(*ev.total_damage_received));
    }
    case EventKind::kBuildingKill:
    case EventKind::kBuildingKillAssist:
    case EventKind::kEliteMonsterKill:
    case EventKind::kEliteMonsterKillAssist:
      if (ev.involved_players <= 0) {
        throw ValidationError(to_string(ev.kind) + ": involved player count must be positive");
      }
      return clamp01(1.0 / ev.involved_players);
  }
  throw ValidationError("unhandled event kind");
}

ActionVector vectorize(const DerivedEvent& ev, const RoleVector& roles, Lane lane,
                       const Eigen::Vector2d& position, double distance, double weight,
                       std::int64_t duration_ms) {
  if (duration_ms <= 0) throw ValidationError("vectorize: duration_ms must be positive");
  namespace fs = feature_slot;
  ActionVector v = ActionVector::Zero();
  v[fs::kTimestamp] = static_cast<double>(ev.timestamp_ms) / static_cast<double>(duration_ms);
  // Role table rows are (assassin, fighter, mage, marksman, support, tank);
  // the vector uses its own historical slot order.
  v[fs::kAssassin] = roles[0];
  v[fs::kFighter] = roles[1];
  v[fs::kMage] = roles[2];
  v[fs::kMarksman] = roles[3];
  v[fs::kSupport] = roles[4];
  v[fs::kTank] = roles[5];
  v[fs::kTop + static_cast<int>(lane)] = 1.0;
  v[fs::kPosX] = position.x();
  v[fs::kPosY] = position.y();
  v[fs::kDistance] = distance;
  v[fs::kEventBase + static_cast<int>(ev.kind)] = 1.0;
  v[fs::kEventWeight] = weight;
  return v;
}

std::array<PlayerStats, kPlayersPerMatch> baseline_metrics(
    const std::vector<DerivedEvent>& derived, const std::vector<FrameSnapshot>& frames) {
  std::array<PlayerStats, kPlayersPerMatch> stats{};
  for (const DerivedEvent& ev : derived) {
    PlayerStats& s = stats[ev.actor - 1];
    if (ev.kind == EventKind::kChampionKill) ++s.kills;
    else if (ev.kind == EventKind::kChampionKillAssist) ++s.assists;
    else if (ev.kind == EventKind::kChampionKillVictim) ++s.deaths;
  }
  if (!frames.empty()) {
    const FrameSnapshot& last = frames.back();
    for (int i = 0; i < kPlayersPerMatch; ++i) {
      stats[i].gold = last.players[i].total_gold;
      stats[i].creep = last.players[i].minions_killed + last.players[i].jungle_minions_killed;
    }
  }
  return stats;
}

MatchSample build_match_sample(const ParsedMatch& match, const ChampionRoleTable& table,
                               const MatchConstants& consts) {
  consts.validate();
  MatchSample sample;
  sample.match_id = match.meta.match_id;
  sample.winner = match.meta.winner;

  // Resolve every champion up front so an unknown name fails fast even for
  // players who produced no events.
  std::array<const RoleVector*, kPlayersPerMatch> roles{};
  for (int i = 0; i < kPlayersPerMatch; ++i) {
    roles[i] = &table.lookup(match.meta.players[i].champion);
  }

  const std::vector<DerivedEvent> derived = derive_events(match.events);
  sample.baselines = baseline_metrics(derived, match.frames);
  if (derived.empty()) return sample;

  // Current level per player, updated as LEVEL_UP events stream past; the
  // weight of a level-up is the actor's rank among these (rank 1 = highest
  // level, ties going to the lower participant_id).
  std::array<int, kPlayersPerMatch> levels;
  levels.fill(1);

  for (const DerivedEvent& ev : derived) {
    std::optional<int> level_rank;
    if (ev.kind == EventKind::kLevelUp) {
      if (!ev.level) missing_field(ev.kind, "level");
      levels[ev.actor - 1] = *ev.level;
      int rank = 1;
      for (int j = 0; j < kPlayersPerMatch; ++j) {
        if (j == ev.actor - 1) continue;
        if (levels[j] > levels[ev.actor - 1]) ++rank;
        else if (levels[j] == levels[ev.actor - 1] && j < ev.actor - 1) ++rank;
      }
      level_rank = rank;
    }

    const Eigen::Vector2d actor_pos = impute_position(ev, match.frames);

    // Isolation is measured against the actor's own team at the event time.
    const int team_base = ev.actor <= 5 ? 1 : 6;
    std::array<Eigen::Vector2d, 5> team_positions;
    for (int k = 0; k < 5; ++k) {
      const int pid = team_base + k;
      team_positions[k] = pid == ev.actor
                              ? actor_pos
                              : interpolate_position(pid, ev.timestamp_ms, match.frames) / kMapExtent;
    }
    const double distance = isolation_share(ev.actor - team_base, team_positions);

    const double weight = event_weight(ev, consts, level_rank);
    const PlayerInfo& info = match.meta.players[ev.actor - 1];
    sample.sequences[ev.actor - 1].push_back(vectorize(
        ev, *roles[ev.actor - 1], info.lane, actor_pos, distance, weight, match.meta.duration_ms));
  }
  return sample;
}

// --- serialization -----------------------------------------------------------

std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string serialize_sample(const MatchSample& sample) {
  std::string out;
  out.reserve(64 + sample.total_actions() * 200);
  out += "{\"match_id\":";
  out += json(sample.match_id).dump();  // correct string escaping
  out += ",\"winner\":\"";
  out += to_string(sample.winner);
  out += "\",\"baselines\":[";
  for (int i = 0; i < kPlayersPerMatch; ++i) {
    const PlayerStats& s = sample.baselines[i];
    if (i) out += ',';
    out += '[';
    out += std::to_string(s.kills);
    out += ',';
    out += std::to_string(s.deaths);
    out += ',';
    out += std::to_string(s.assists);
    out += ',';
    out += std::to_string(s.gold);
    out += ',';
    out += std::to_string(s.creep);
    out += ']';
  }
  out += "],\"sequences\":[";
  for (int i = 0; i < kPlayersPerMatch; ++i) {
    if (i) out += ',';
    out += '[';
    const auto& seq = sample.sequences[i];
    for (std::size_t a = 0; a < seq.size(); ++a) {
      if (a) out += ',';
      out += '[';
      for (int d = 0; d < kFeatureDim; ++d) {
        if (d) out += ',';
        out += format_float(seq[a][d]);
      }
      out += ']';
    }
    out += ']';
  }
  out += "]}";
  return out;
}

MatchSample parse_sample(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed dataset record at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("dataset record: expected object");
  MatchSample sample;
  if (!doc.contains("match_id") || !doc.at("match_id").is_string()) {
    throw ValidationError("dataset record: missing match_id");
  }
  sample.match_id = doc.at("match_id").get<std::string>();
  if (!doc.contains("winner")) throw ValidationError("dataset record: missing winner");
  sample.winner = team_from_string(doc.at("winner").get<std::string>());

  const json& baselines = doc.at("baselines");
  if (!baselines.is_array() || baselines.size() != kPlayersPerMatch) {
    throw ValidationError("dataset record: baselines must hold 10 entries");
  }
  for (int i = 0; i < kPlayersPerMatch; ++i) {
    const json& b = baselines[i];
    if (!b.is_array() || b.size() != 5) {
      throw ValidationError("dataset record: baseline entry must be [kills,deaths,assists,gold,creep]");
    }
    PlayerStats& s = sample.baselines[i];
    s.kills = b[0].get<int>();
    s.deaths = b[1].get<int>();
    s.assists = b[2].get<int>();
    s.gold = b[3].get<std::int64_t>();
    s.creep = b[4].get<int>();
  }

  const json& sequences = doc.at("sequences");
  if (!sequences.is_array() || sequences.size() != kPlayersPerMatch) {
    throw ValidationError("dataset record: sequences must hold 10 entries");
  }
  for (int i = 0; i < kPlayersPerMatch; ++i) {
    const json& seq = sequences[i];
    if (!seq.is_array()) throw ValidationError("dataset record: sequence must be an array");
    sample.sequences[i].reserve(seq.size());
    for (const json& vec : seq) {
      if (!vec.is_array() || vec.size() != kFeatureDim) {
        throw ValidationError("dataset record: action vector must hold 30 numbers");
      }
      ActionVector v;
      for (int d = 0; d < kFeatureDim; ++d) v[d] = vec[d].get<double>();
      sample.sequences[i].push_back(v);
    }
  }
  return sample;
}

void save_dataset_file(const std::string& path, const std::vector<MatchSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open dataset file '" + path + "' for writing");
  for (const MatchSample& s : samples) {
    out << serialize_sample(s) << '\n';
  }
  if (!out) throw IoError("failed writing dataset file '" + path + "'");
}

std::vector<MatchSample> load_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");
  std::vector<MatchSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      samples.push_back(parse_sample(line));
    } catch (const std::exception& e) {
      throw ValidationError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

}  // namespace mobascore
