#include "mobascore/match.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mobascore {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Team t) { return t == Team::kBlue ? "blue" : "red"; }

std::string to_string(Lane l) {
  switch (l) {
    case Lane::kTop: return "Top";
    case Lane::kMid: return "Mid";
    case Lane::kBottom: return "Bottom";
    case Lane::kUtility: return "Utility";
    case Lane::kJungle: return "Jungle";
  }
  return "?";
}

namespace {

constexpr const char* kRawKindNames[kRawEventKindCount] = {
    "ITEM_PURCHASED", "ITEM_SOLD",     "ITEM_DESTROYED", "SKILL_LEVEL_UP",
    "LEVEL_UP",       "WARD_PLACED",   "WARD_KILL",      "CHAMPION_KILL",
    "BUILDING_KILL",  "ELITE_MONSTER_KILL"};

constexpr const char* kKindNames[kEventKindCount] = {
    "ITEM_PURCHASED",      "ITEM_SOLD",
    "ITEM_DESTROYED",      "SKILL_LEVEL_UP",
    "LEVEL_UP",            "WARD_PLACED",
    "WARD_KILL",           "CHAMPION_KILL",
    "CHAMPION_KILL_ASSIST", "CHAMPION_KILL_VICTIM",
    "BUILDING_KILL",       "BUILDING_KILL_ASSIST",
    "ELITE_MONSTER_KILL",  "ELITE_MONSTER_KILL_ASSIST"};

}  // namespace

std::string to_string(RawEventKind k) { return kRawKindNames[static_cast<int>(k)]; }
std::string to_string(EventKind k) { return kKindNames[static_cast<int>(k)]; }

Team team_from_string(std::string_view s) {
  if (s == "blue") return Team::kBlue;
  if (s == "red") return Team::kRed;
  throw ValidationError("unknown team label '" + std::string(s) + "'");
}

Lane lane_from_string(std::string_view s) {
  if (s == "Top") return Lane::kTop;
  if (s == "Mid") return Lane::kMid;
  if (s == "Bottom") return Lane::kBottom;
  if (s == "Utility") return Lane::kUtility;
  if (s == "Jungle") return Lane::kJungle;
  throw ValidationError("unknown lane '" + std::string(s) + "'");
}

RawEventKind raw_event_kind_from_string(std::string_view s) {
  for (int i = 0; i < kRawEventKindCount; ++i) {
    if (s == kRawKindNames[i]) return static_cast<RawEventKind>(i);
  }
  throw ValidationError("unknown event kind '" + std::string(s) + "'");
}

void ChampionRoleTable::add(const std::string& champion, const RoleVector& roles) {
  int set = 0;
  for (int r : roles) {
    if (r != 0 && r != 1) throw ValidationError("role flags for '" + champion + "' must be 0 or 1");
    set += r;
  }
  if (set == 0) throw ValidationError("champion '" + champion + "' has no role set");
  if (!rows_.emplace(champion, roles).second) {
    throw ValidationError("duplicate champion '" + champion + "' in role table");
  }
}

const RoleVector& ChampionRoleTable::lookup(const std::string& champion) const {
  auto it = rows_.find(champion);
  if (it == rows_.end()) {
    throw ValidationError("champion '" + champion + "' not present in role table");
  }
  return it->second;
}

// --- JSON parsing helpers ----------------------------------------------------

namespace {

const json& require_key(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(ctx + ": missing key '" + key + "'");
  return *it;
}

std::int64_t as_int(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) throw ValidationError(ctx + ": expected integer");
  return v.get<std::int64_t>();
}

std::int64_t require_int(const json& obj, const char* key, const std::string& ctx) {
  return as_int(require_key(obj, key, ctx), ctx + "." + key);
}

std::int64_t require_nonneg(const json& obj, const char* key, const std::string& ctx) {
  const std::int64_t v = require_int(obj, key, ctx);
  if (v < 0) throw ValidationError(ctx + "." + key + ": must be >= 0");
  return v;
}

std::string require_str(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require_key(obj, key, ctx);
  if (!v.is_string()) throw ValidationError(ctx + "." + key + ": expected string");
  return v.get<std::string>();
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) { known = true; break; }
    }
    if (!known) throw ValidationError(ctx + ": unknown key '" + it.key() + "'");
  }
}

Vec2i parse_position(const json& v, const std::string& ctx) {
  if (!v.is_object()) throw ValidationError(ctx + ": expected object with x, y");
  reject_unknown_keys(v, {"x", "y"}, ctx);
  Vec2i p;
  p.x = static_cast<int>(require_int(v, "x", ctx));
  p.y = static_cast<int>(require_int(v, "y", ctx));
  if (p.x < 0 || p.x > static_cast<int>(kMapExtent) || p.y < 0 ||
      p.y > static_cast<int>(kMapExtent)) {
    throw ValidationError(ctx + ": coordinates out of [0, 15000]");
  }
  return p;
}

int parse_participant(const json& v, const std::string& ctx) {
  const std::int64_t id = as_int(v, ctx);
  if (id < 1 || id > kPlayersPerMatch) {
    throw ValidationError(ctx + ": participant_id out of 1..10");
  }
  return static_cast<int>(id);
}

void parse_payload(const json& obj, RawEventKind kind, EventPayload& out, const std::string& ctx) {
  switch (kind) {
    case RawEventKind::kItemPurchased:
    case RawEventKind::kItemDestroyed:
      reject_unknown_keys(obj, {"gold_cost"}, ctx);
      if (obj.contains("gold_cost")) out.gold_cost = require_nonneg(obj, "gold_cost", ctx);
      break;
    case RawEventKind::kItemSold:
      reject_unknown_keys(obj, {"sell_value"}, ctx);
      if (obj.contains("sell_value")) out.sell_value = require_nonneg(obj, "sell_value", ctx);
      break;
    case RawEventKind::kSkillLevelUp:
      reject_unknown_keys(obj, {"skill_level", "max_skill_level"}, ctx);
      if (obj.contains("skill_level"))
        out.skill_level = static_cast<int>(require_nonneg(obj, "skill_level", ctx));
      if (obj.contains("max_skill_level"))
        out.max_skill_level = static_cast<int>(require_nonneg(obj, "max_skill_level", ctx));
      break;
    case RawEventKind::kLevelUp:
      reject_unknown_keys(obj, {"level"}, ctx);
      if (obj.contains("level")) out.level = static_cast<int>(require_nonneg(obj, "level", ctx));
      break;
    case RawEventKind::kWardPlaced:
    case RawEventKind::kWardKill:
      reject_unknown_keys(obj, {"ward_bounty"}, ctx);
      if (obj.contains("ward_bounty")) out.ward_bounty = require_nonneg(obj, "ward_bounty", ctx);
      break;
    case RawEventKind::kChampionKill: {
      reject_unknown_keys(obj, {"damage_by_attacker", "total_damage_received", "victim_damage_dealt"}, ctx);
      if (obj.contains("damage_by_attacker")) {
        const json& dmg = obj.at("damage_by_attacker");
        if (!dmg.is_object()) throw ValidationError(ctx + ".damage_by_attacker: expected object");
        for (auto it = dmg.begin(); it != dmg.end(); ++it) {
          int pid = 0;
          try {
            pid = std::stoi(it.key());
          } catch (const std::exception&) {
            throw ValidationError(ctx + ".damage_by_attacker: bad participant key '" + it.key() + "'");
          }
          if (pid < 1 || pid > kPlayersPerMatch) {
            throw ValidationError(ctx + ".damage_by_attacker: participant_id out of 1..10");
          }
          const std::int64_t amount = as_int(*it, ctx + ".damage_by_attacker." + it.key());
          if (amount < 0) {
            throw ValidationError(ctx + ".damage_by_attacker." + it.key() + ": must be >= 0");
          }
          out.damage_by_attacker[pid] = amount;
        }
      }
      if (obj.contains("total_damage_received"))
        out.total_damage_received = require_nonneg(obj, "total_damage_received", ctx);
      if (obj.contains("victim_damage_dealt"))
        out.victim_damage_dealt = require_nonneg(obj, "victim_damage_dealt", ctx);
      break;
    }
    case RawEventKind::kBuildingKill:
    case RawEventKind::kEliteMonsterKill:
      reject_unknown_keys(obj, {}, ctx);
      break;
  }
}

TimelineEvent parse_event(const json& obj, std::int64_t duration_ms, const std::string& ctx) {
  if (!obj.is_object()) throw ValidationError(ctx + ": expected object");
  reject_unknown_keys(obj, {"timestamp_ms", "kind", "actor", "assisting", "victim", "position", "payload"}, ctx);

  TimelineEvent ev;
  ev.timestamp_ms = require_int(obj, "timestamp_ms", ctx);
  if (ev.timestamp_ms < 0 || ev.timestamp_ms > duration_ms) {
    throw ValidationError(ctx + ".timestamp_ms: out of [0, duration_ms]");
  }
  ev.kind = raw_event_kind_from_string(require_str(obj, "kind", ctx));
  ev.actor = parse_participant(require_key(obj, "actor", ctx), ctx + ".actor");

  if (obj.contains("assisting")) {
    const json& arr = obj.at("assisting");
    if (!arr.is_array()) throw ValidationError(ctx + ".assisting: expected array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const int pid = parse_participant(arr[i], ctx + ".assisting[" + std::to_string(i) + "]");
      if (pid == ev.actor) throw ValidationError(ctx + ".assisting: actor cannot assist itself");
      ev.assisting.push_back(pid);
    }
  }
  if (obj.contains("victim")) {
    const int pid = parse_participant(obj.at("victim"), ctx + ".victim");
    if (pid == ev.actor) throw ValidationError(ctx + ".victim: victim equals actor");
    ev.victim = pid;
  }
  if (obj.contains("position")) ev.position = parse_position(obj.at("position"), ctx + ".position");
  if (obj.contains("payload")) {
    const json& payload = obj.at("payload");
    if (!payload.is_object()) throw ValidationError(ctx + ".payload: expected object");
    parse_payload(payload, ev.kind, ev.payload, ctx + ".payload");
  }
  return ev;
}

FrameSnapshot parse_frame(const json& obj, const std::string& ctx) {
  if (!obj.is_object()) throw ValidationError(ctx + ": expected object");
  reject_unknown_keys(obj, {"timestamp_ms", "players"}, ctx);
  FrameSnapshot frame;
  frame.timestamp_ms = require_int(obj, "timestamp_ms", ctx);
  const json& players = require_key(obj, "players", ctx);
  if (!players.is_object()) throw ValidationError(ctx + ".players: expected object");
  for (int pid = 1; pid <= kPlayersPerMatch; ++pid) {
    const std::string key = std::to_string(pid);
    if (!players.contains(key)) {
      throw ValidationError(ctx + ".players: missing participant " + key);
    }
    const json& p = players.at(key);
    const std::string pctx = ctx + ".players." + key;
    if (!p.is_object()) throw ValidationError(pctx + ": expected object");
    reject_unknown_keys(p, {"position", "total_gold", "minions_killed", "jungle_minions_killed", "level"}, pctx);
    PlayerFrame& f = frame.players[pid - 1];
    f.position = parse_position(require_key(p, "position", pctx), pctx + ".position");
    f.total_gold = require_nonneg(p, "total_gold", pctx);
    f.minions_killed = static_cast<int>(require_nonneg(p, "minions_killed", pctx));
    f.jungle_minions_killed = static_cast<int>(require_nonneg(p, "jungle_minions_killed", pctx));
    f.level = static_cast<int>(require_nonneg(p, "level", pctx));
  }
  if (players.size() != kPlayersPerMatch) {
    throw ValidationError(ctx + ".players: expected exactly 10 entries");
  }
  return frame;
}

}  // namespace

ParsedMatch parse_match(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed match document at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("match document: expected top-level object");
  reject_unknown_keys(doc, {"meta", "events", "frames"}, "match document");

  ParsedMatch match;

  const json& meta = require_key(doc, "meta", "match document");
  if (!meta.is_object()) throw ValidationError("meta: expected object");
  reject_unknown_keys(meta, {"match_id", "duration_ms", "winner", "players"}, "meta");
  match.meta.match_id = require_str(meta, "match_id", "meta");
  match.meta.duration_ms = require_nonneg(meta, "duration_ms", "meta");
  match.meta.winner = team_from_string(require_str(meta, "winner", "meta"));

  const json& players = require_key(meta, "players", "meta");
  if (!players.is_array() || players.size() != kPlayersPerMatch) {
    throw ValidationError("meta.players: expected array of exactly 10 players");
  }
  std::array<bool, kPlayersPerMatch> seen{};
  for (std::size_t i = 0; i < players.size(); ++i) {
    const std::string ctx = "meta.players[" + std::to_string(i) + "]";
    const json& p = players[i];
    if (!p.is_object()) throw ValidationError(ctx + ": expected object");
    reject_unknown_keys(p, {"participant_id", "team", "champion", "lane"}, ctx);
    PlayerInfo info;
    info.participant_id = parse_participant(require_key(p, "participant_id", ctx), ctx + ".participant_id");
    if (seen[info.participant_id - 1]) {
      throw ValidationError(ctx + ": duplicate participant " + std::to_string(info.participant_id));
    }
    seen[info.participant_id - 1] = true;
    info.team = team_from_string(require_str(p, "team", ctx));
    if (info.team != team_of_participant(info.participant_id)) {
      throw ValidationError(ctx + ".team: participant " + std::to_string(info.participant_id) +
                            " must be " + to_string(team_of_participant(info.participant_id)));
    }
    info.champion = require_str(p, "champion", ctx);
    if (info.champion.empty()) throw ValidationError(ctx + ".champion: empty name");
    info.lane = lane_from_string(require_str(p, "lane", ctx));
    match.meta.players[info.participant_id - 1] = info;
  }

  if (doc.contains("events")) {
    const json& events = doc.at("events");
    if (!events.is_array()) throw ValidationError("events: expected array");
    match.events.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      match.events.push_back(
          parse_event(events[i], match.meta.duration_ms, "events[" + std::to_string(i) + "]"));
      if (i > 0 && match.events[i].timestamp_ms < match.events[i - 1].timestamp_ms) {
        throw ValidationError("events[" + std::to_string(i) + "]: timestamps must be non-decreasing");
      }
    }
  }

  if (doc.contains("frames")) {
    const json& frames = doc.at("frames");
    if (!frames.is_array()) throw ValidationError("frames: expected array");
    match.frames.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      FrameSnapshot frame = parse_frame(frames[i], "frames[" + std::to_string(i) + "]");
      const auto expected = static_cast<std::int64_t>(i) * kFrameIntervalMs;
      if (frame.timestamp_ms != expected) {
        throw ValidationError("frames[" + std::to_string(i) + "].timestamp_ms: expected " +
                              std::to_string(expected) + " (one snapshot per minute from 0)");
      }
      match.frames.push_back(std::move(frame));
    }
  }

  if (!match.events.empty() && match.frames.empty()) {
    throw ValidationError("frames: required when events are present (position interpolation)");
  }
  return match;
}

std::string serialize_match(const ParsedMatch& match) {
  ordered_json doc;
  ordered_json meta;
  meta["match_id"] = match.meta.match_id;
  meta["duration_ms"] = match.meta.duration_ms;
  meta["winner"] = to_string(match.meta.winner);
  ordered_json players = ordered_json::array();
  for (const PlayerInfo& p : match.meta.players) {
    ordered_json o;
    o["participant_id"] = p.participant_id;
    o["team"] = to_string(p.team);
    o["champion"] = p.champion;
    o["lane"] = to_string(p.lane);
    players.push_back(std::move(o));
  }
  meta["players"] = std::move(players);
  doc["meta"] = std::move(meta);

  ordered_json events = ordered_json::array();
  for (const TimelineEvent& ev : match.events) {
    ordered_json o;
    o["timestamp_ms"] = ev.timestamp_ms;
    o["kind"] = to_string(ev.kind);
    o["actor"] = ev.actor;
    if (!ev.assisting.empty()) o["assisting"] = ev.assisting;
    if (ev.victim) o["victim"] = *ev.victim;
    if (ev.position) o["position"] = {{"x", ev.position->x}, {"y", ev.position->y}};
    ordered_json payload = ordered_json::object();
    const EventPayload& pl = ev.payload;
    if (pl.gold_cost) payload["gold_cost"] = *pl.gold_cost;
    if (pl.sell_value) payload["sell_value"] = *pl.sell_value;
    if (pl.skill_level) payload["skill_level"] = *pl.skill_level;
    if (pl.max_skill_level) payload["max_skill_level"] = *pl.max_skill_level;
    if (pl.level) payload["level"] = *pl.level;
    if (pl.ward_bounty) payload["ward_bounty"] = *pl.ward_bounty;
    if (!pl.damage_by_attacker.empty()) {
      ordered_json dmg;
      for (const auto& [pid, amount] : pl.damage_by_attacker) dmg[std::to_string(pid)] = amount;
      payload["damage_by_attacker"] = std::move(dmg);
    }
    if (pl.total_damage_received) payload["total_damage_received"] = *pl.total_damage_received;
    if (pl.victim_damage_dealt) payload["victim_damage_dealt"] = *pl.victim_damage_dealt;
    if (!payload.empty()) o["payload"] = std::move(payload);
    events.push_back(std::move(o));
  }
  doc["events"] = std::move(events);

  ordered_json frames = ordered_json::array();
  for (const FrameSnapshot& frame : match.frames) {
    ordered_json o;
    o["timestamp_ms"] = frame.timestamp_ms;
    ordered_json players_obj = ordered_json::object();
    for (int pid = 1; pid <= kPlayersPerMatch; ++pid) {
      const PlayerFrame& f = frame.players[pid - 1];
      ordered_json p;
      p["position"] = {{"x", f.position.x}, {"y", f.position.y}};
      p["total_gold"] = f.total_gold;
      p["minions_killed"] = f.minions_killed;
      p["jungle_minions_killed"] = f.jungle_minions_killed;
      p["level"] = f.level;
      players_obj[std::to_string(pid)] = std::move(p);
    }
    o["players"] = std::move(players_obj);
    frames.push_back(std::move(o));
  }
  doc["frames"] = std::move(frames);
  return doc.dump();
}

ParsedMatch load_match_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open match file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_match(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

ChampionRoleTable parse_role_table(std::string_view csv) {
  static const std::string kHeader = "champion,assassin,fighter,mage,marksman,support,tank";
  ChampionRoleTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t end = csv.find('\n', pos);
    std::string_view line = csv.substr(pos, end == std::string_view::npos ? csv.size() - pos : end - pos);
    pos = end == std::string_view::npos ? csv.size() + 1 : end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kHeader) {
        throw ValidationError("role table: bad header, expected '" + kHeader + "'");
      }
      continue;
    }
    std::array<std::string, 7> cells;
    std::size_t cell = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (cell >= cells.size()) {
          throw ValidationError("role table line " + std::to_string(line_no) + ": too many cells");
        }
        cells[cell++] = std::string(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cell != cells.size()) {
      throw ValidationError("role table line " + std::to_string(line_no) + ": expected 7 cells");
    }
    if (cells[0].empty()) {
      throw ValidationError("role table line " + std::to_string(line_no) + ": empty champion name");
    }
    RoleVector roles{};
    for (int r = 0; r < 6; ++r) {
      if (cells[r + 1] == "0") roles[r] = 0;
      else if (cells[r + 1] == "1") roles[r] = 1;
      else throw ValidationError("role table line " + std::to_string(line_no) + ": cells must be 0 or 1");
    }
    try {
      table.add(cells[0], roles);
    } catch (const ValidationError& e) {
      throw ValidationError("role table line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (table.size() == 0) throw ValidationError("role table: no champion rows");
  return table;
}

ChampionRoleTable load_role_table_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open role table '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_role_table(buf.str());
}

std::string serialize_role_table(const ChampionRoleTable& table) {
  std::string out = "champion,assassin,fighter,mage,marksman,support,tank\n";
  for (const auto& [name, roles] : table.rows()) {
    out += name;
    for (int r : roles) {
      out += ',';
      out += static_cast<char>('0' + r);
    }
    out += '\n';
  }
  return out;
}

// --- event expansion ---------------------------------------------------------

namespace {

DerivedEvent base_derived(const TimelineEvent& ev, EventKind kind, int actor) {
  DerivedEvent d;
  d.timestamp_ms = ev.timestamp_ms;
  d.kind = kind;
  d.actor = actor;
  d.position = ev.position;
  return d;
}

std::int64_t attacker_damage(const TimelineEvent& ev, int pid) {
  auto it = ev.payload.damage_by_attacker.find(pid);
  return it == ev.payload.damage_by_attacker.end() ? 0 : it->second;
}

}  // namespace

std::vector<DerivedEvent> derive_events(const std::vector<TimelineEvent>& events) {
  std::vector<DerivedEvent> out;
  out.reserve(events.size() + events.size() / 4);
  for (const TimelineEvent& ev : events) {
    switch (ev.kind) {
      case RawEventKind::kChampionKill: {
        if (!ev.victim) {
          throw ValidationError("CHAMPION_KILL at t=" + std::to_string(ev.timestamp_ms) +
                                " has no victim");
        }
        DerivedEvent kill = base_derived(ev, EventKind::kChampionKill, ev.actor);
        kill.damage_dealt = attacker_damage(ev, ev.actor);
        kill.total_damage_received = ev.payload.total_damage_received;
        out.push_back(kill);

        std::vector<int> assists = ev.assisting;
        std::sort(assists.begin(), assists.end());
        for (int pid : assists) {
          DerivedEvent assist = base_derived(ev, EventKind::kChampionKillAssist, pid);
          assist.damage_dealt = attacker_damage(ev, pid);
          assist.total_damage_received = ev.payload.total_damage_received;
          out.push_back(assist);
        }

        DerivedEvent victim = base_derived(ev, EventKind::kChampionKillVictim, *ev.victim);
        victim.damage_dealt = ev.payload.victim_damage_dealt;
        victim.total_damage_received = ev.payload.total_damage_received;
        out.push_back(victim);
        break;
      }
      case RawEventKind::kBuildingKill:
      case RawEventKind::kEliteMonsterKill: {
        const bool building = ev.kind == RawEventKind::kBuildingKill;
        const int involved = 1 + static_cast<int>(ev.assisting.size());
        DerivedEvent kill = base_derived(
            ev, building ? EventKind::kBuildingKill : EventKind::kEliteMonsterKill, ev.actor);
        kill.involved_players = involved;
        out.push_back(kill);
        std::vector<int> assists = ev.assisting;
        std::sort(assists.begin(), assists.end());
        for (int pid : assists) {
          DerivedEvent assist = base_derived(
              ev, building ? EventKind::kBuildingKillAssist : EventKind::kEliteMonsterKillAssist, pid);
          assist.involved_players = involved;
          out.push_back(assist);
        }
        break;
      }
      default: {
        DerivedEvent d = base_derived(ev, static_cast<EventKind>(static_cast<int>(ev.kind)), ev.actor);
        switch (ev.kind) {
          case RawEventKind::kItemPurchased:
          case RawEventKind::kItemDestroyed:
            d.gold = ev.payload.gold_cost;
            break;
          case RawEventKind::kItemSold:
            d.gold = ev.payload.sell_value;
            break;
          case RawEventKind::kWardPlaced:
          case RawEventKind::kWardKill:
            d.gold = ev.payload.ward_bounty;
            break;
          case RawEventKind::kSkillLevelUp:
            d.skill_level = ev.payload.skill_level;
            d.max_skill_level = ev.payload.max_skill_level;
            break;
          case RawEventKind::kLevelUp:
            d.level = ev.payload.level;
            break;
          default:
            break;
        }
        out.push_back(d);
        break;
      }
    }
  }
  // Input events are already time-ordered and expansions inherit their source
  // timestamp, so a stable sort only fixes interleaving across equal stamps
  // while keeping the kill/assist/victim grouping intact.
  std::stable_sort(out.begin(), out.end(),
                   [](const DerivedEvent& a, const DerivedEvent& b) {
                     return a.timestamp_ms < b.timestamp_ms;
                   });
  return out;
}

// --- positions ---------------------------------------------------------------

Eigen::Vector2d interpolate_position(int participant_id, std::int64_t timestamp_ms,
                                     const std::vector<FrameSnapshot>& frames) {
  if (frames.empty()) {
    throw ValidationError("no snapshots available for position interpolation");
  }
  const int idx = participant_id - 1;
  const auto pos_at = [&](const FrameSnapshot& f) {
    return Eigen::Vector2d(f.players[idx].position.x, f.players[idx].position.y);
  };
  if (timestamp_ms <= frames.front().timestamp_ms) return pos_at(frames.front());
  if (timestamp_ms >= frames.back().timestamp_ms) return pos_at(frames.back());
  const auto k = static_cast<std::size_t>(timestamp_ms / kFrameIntervalMs);
  const FrameSnapshot& lo = frames[k];
  const FrameSnapshot& hi = frames[k + 1];
  const double span = static_cast<double>(hi.timestamp_ms - lo.timestamp_ms);
  const double alpha = static_cast<double>(timestamp_ms - lo.timestamp_ms) / span;
  return (1.0 - alpha) * pos_at(lo) + alpha * pos_at(hi);
}

Eigen::Vector2d impute_position(const DerivedEvent& event,
                                const std::vector<FrameSnapshot>& frames) {
  if (event.position) {
    return Eigen::Vector2d(event.position->x, event.position->y) / kMapExtent;
  }
  if (event.kind == EventKind::kItemPurchased || event.kind == EventKind::kItemSold) {
    // Shop actions happen at the team's base corner.
    return team_of_participant(event.actor) == Team::kBlue ? Eigen::Vector2d(0.0, 0.0)
                                                           : Eigen::Vector2d(1.0, 1.0);
  }
  return interpolate_position(event.actor, event.timestamp_ms, frames) / kMapExtent;
}

double isolation_share(int actor_index, const std::array<Eigen::Vector2d, 5>& team_positions) {
  double total = 0.0;
  double actor_sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      const double d = (team_positions[i] - team_positions[j]).norm();
      total += d;
      if (i == actor_index || j == actor_index) actor_sum += d;
    }
  }
  if (total < 1e-12) return 0.4;
  return actor_sum / total;
}

}  // namespace mobascore
