#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mobascore/features.hpp"
#include "mobascore/match.hpp"

using namespace mobascore;

namespace {

MatchConstants default_consts() {
  MatchConstants c;
  c.highest_item_purchase_cost = 7800;
  c.highest_item_sell_cost = 5460;
  c.highest_ward_bounty = 75;
  c.number_of_players = 10;
  return c;
}

DerivedEvent event_of(EventKind kind, int actor, std::int64_t t = 1000) {
  DerivedEvent ev;
  ev.kind = kind;
  ev.actor = actor;
  ev.timestamp_ms = t;
  return ev;
}

ChampionRoleTable demo_roles() {
  return parse_role_table(
      "champion,assassin,fighter,mage,marksman,support,tank\n"
      "Annie,0,0,1,0,0,0\n"
      "Kayle,0,1,0,0,1,0\n"
      "Shyvana,0,1,0,0,0,1\n"
      "Vayne,1,0,0,1,0,0\n"
      "Senna,0,0,0,1,1,0\n"
      "Garen,0,1,0,0,0,1\n"
      "Ahri,1,0,1,0,0,0\n"
      "Jinx,0,0,0,1,0,0\n"
      "Thresh,0,0,0,0,1,1\n"
      "LeeSin,1,1,0,0,0,0\n");
}

ParsedMatch feature_match() {
  ParsedMatch m;
  m.meta.match_id = "feat-01";
  m.meta.duration_ms = 180000;
  m.meta.winner = Team::kBlue;
  const char* champs[10] = {"Annie", "Kayle", "Shyvana", "Vayne",  "Senna",
                            "Garen", "Ahri",  "Jinx",    "Thresh", "LeeSin"};
  const Lane lanes[5] = {Lane::kTop, Lane::kMid, Lane::kBottom, Lane::kUtility, Lane::kJungle};
  for (int i = 0; i < 10; ++i) {
    m.meta.players[i].participant_id = i + 1;
    m.meta.players[i].team = i < 5 ? Team::kBlue : Team::kRed;
    m.meta.players[i].champion = champs[i];
    m.meta.players[i].lane = lanes[i % 5];
  }

  TimelineEvent buy;
  buy.timestamp_ms = 1000;
  buy.kind = RawEventKind::kItemPurchased;
  buy.actor = 1;
  buy.payload.gold_cost = 350;
  m.events.push_back(buy);

  TimelineEvent level;
  level.timestamp_ms = 4000;
  level.kind = RawEventKind::kLevelUp;
  level.actor = 5;
  level.payload.level = 3;
  m.events.push_back(level);

  TimelineEvent level2;
  level2.timestamp_ms = 4500;
  level2.kind = RawEventKind::kLevelUp;
  level2.actor = 8;
  level2.payload.level = 3;
  m.events.push_back(level2);

  TimelineEvent kill;
  kill.timestamp_ms = 60000;
  kill.kind = RawEventKind::kChampionKill;
  kill.actor = 6;
  kill.victim = 2;
  kill.assisting = {9, 7};
  kill.position = Vec2i{7500, 7500};
  kill.payload.damage_by_attacker = {{6, 450}, {9, 150}, {7, 300}};
  kill.payload.total_damage_received = 900;
  kill.payload.victim_damage_dealt = 220;
  m.events.push_back(kill);

  TimelineEvent elite;
  elite.timestamp_ms = 150000;
  elite.kind = RawEventKind::kEliteMonsterKill;
  elite.actor = 10;
  elite.assisting = {8, 6};
  elite.position = Vec2i{5000, 10000};
  m.events.push_back(elite);

  for (int f = 0; f <= 3; ++f) {
    FrameSnapshot snap;
    snap.timestamp_ms = f * kFrameIntervalMs;
    for (int i = 0; i < 10; ++i) {
      snap.players[i].position = Vec2i{1000 * (i + 1), 500 * (f + 1)};
      snap.players[i].total_gold = 500 + 300 * f + 10 * i;
      snap.players[i].minions_killed = 5 * f + i;
      snap.players[i].jungle_minions_killed = f;
      snap.players[i].level = 1 + f;
    }
    m.frames.push_back(snap);
  }
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("match constants parse from key=value lines") {
  const MatchConstants c = parse_match_constants(
      "# tuning knobs\n"
      "highest_item_purchase_cost = 7800\n"
      "highest_item_sell_cost=5460\r\n"
      "  highest_ward_bounty = 75\n"
      "\n"
      "number_of_players = 10\n");
  CHECK(c.highest_item_purchase_cost == 7800.0);
  CHECK(c.highest_item_sell_cost == 5460.0);
  CHECK(c.highest_ward_bounty == 75.0);
  CHECK(c.number_of_players == 10);
}

TEST_CASE("match constants reject malformed input") {
  CHECK_THROWS_AS(parse_match_constants("highest_ward_bounty 75"), ValidationError);
  CHECK_THROWS_AS(parse_match_constants("highest_ward_bounty = seventy"), ValidationError);
  CHECK_THROWS_AS(parse_match_constants("highest_ward_bounty = 75x"), ValidationError);
  CHECK_THROWS_AS(parse_match_constants("ward_bounty = 75"), ValidationError);
  CHECK_THROWS_AS(parse_match_constants("number_of_players = 0"), ValidationError);

  try {
    parse_match_constants("# ok\nbogus_key = 4\n");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("bogus_key") != std::string::npos);
  }
}

TEST_CASE("match constants must be positive") {
  MatchConstants c = default_consts();
  c.highest_ward_bounty = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = default_consts();
  c.number_of_players = -1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK_NOTHROW(default_consts().validate());
}

TEST_CASE("event weights divide by the matching ceiling") {
  const MatchConstants c = default_consts();

  DerivedEvent buy = event_of(EventKind::kItemPurchased, 1);
  buy.gold = 350;
  CHECK(event_weight(buy, c) == doctest::Approx(350.0 / 7800.0).epsilon(1e-12));

  DerivedEvent sold = event_of(EventKind::kItemSold, 2);
  sold.gold = 180;
  CHECK(event_weight(sold, c) == doctest::Approx(180.0 / 5460.0).epsilon(1e-12));

  DerivedEvent broke = event_of(EventKind::kItemDestroyed, 3);
  broke.gold = 900;
  CHECK(event_weight(broke, c) == doctest::Approx(900.0 / 7800.0).epsilon(1e-12));

  DerivedEvent skill = event_of(EventKind::kSkillLevelUp, 4);
  skill.skill_level = 2;
  skill.max_skill_level = 5;
  CHECK(event_weight(skill, c) == doctest::Approx(0.4).epsilon(1e-12));

  DerivedEvent level = event_of(EventKind::kLevelUp, 5);
  CHECK(event_weight(level, c, 3) == doctest::Approx(0.3).epsilon(1e-12));

  DerivedEvent ward = event_of(EventKind::kWardPlaced, 6);
  ward.gold = 40;
  CHECK(event_weight(ward, c) == doctest::Approx(40.0 / 75.0).epsilon(1e-12));

  DerivedEvent wardkill = event_of(EventKind::kWardKill, 7);
  wardkill.gold = 40;
  CHECK(event_weight(wardkill, c) == doctest::Approx(40.0 / 75.0).epsilon(1e-12));

  DerivedEvent kill = event_of(EventKind::kChampionKill, 6);
  kill.damage_dealt = 450;
  kill.total_damage_received = 900;
  CHECK(event_weight(kill, c) == doctest::Approx(0.5).epsilon(1e-12));

  DerivedEvent assist = event_of(EventKind::kChampionKillAssist, 9);
  assist.damage_dealt = 300;
  assist.total_damage_received = 900;
  CHECK(event_weight(assist, c) == doctest::Approx(300.0 / 900.0).epsilon(1e-12));

  DerivedEvent victim = event_of(EventKind::kChampionKillVictim, 2);
  victim.damage_dealt = 220;
  victim.total_damage_received = 900;
  CHECK(event_weight(victim, c) == doctest::Approx(220.0 / 900.0).epsilon(1e-12));

  DerivedEvent tower = event_of(EventKind::kBuildingKill, 1);
  tower.involved_players = 2;
  CHECK(event_weight(tower, c) == doctest::Approx(0.5).epsilon(1e-12));

  DerivedEvent drake = event_of(EventKind::kEliteMonsterKillAssist, 8);
  drake.involved_players = 3;
  CHECK(event_weight(drake, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("event weights clamp into the unit interval") {
  const MatchConstants c = default_consts();

  DerivedEvent buy = event_of(EventKind::kItemPurchased, 1);
  buy.gold = 99999;
  CHECK(event_weight(buy, c) == 1.0);

  DerivedEvent victim = event_of(EventKind::kChampionKillVictim, 2);
  victim.damage_dealt = 5000;
  victim.total_damage_received = 900;
  CHECK(event_weight(victim, c) == 1.0);

  DerivedEvent level = event_of(EventKind::kLevelUp, 5);
  CHECK(event_weight(level, c, 25) == 1.0);
  CHECK(event_weight(level, c, 1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("zero total damage yields a zero kill weight") {
  const MatchConstants c = default_consts();
  DerivedEvent kill = event_of(EventKind::kChampionKill, 6);
  kill.damage_dealt = 450;
  kill.total_damage_received = 0;
  CHECK(event_weight(kill, c) == 0.0);
}

TEST_CASE("event weights report which payload field is missing") {
  const MatchConstants c = default_consts();

  auto expect_missing = [&](EventKind kind, const char* field) {
    DerivedEvent ev = event_of(kind, 1);
    ev.involved_players = 1;
    try {
      event_weight(ev, c);
      FAIL("expected ValidationError for ", to_string(kind));
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(to_string(kind)) != std::string::npos);
      CHECK(msg.find(field) != std::string::npos);
    }
  };

  expect_missing(EventKind::kItemPurchased, "gold_cost");
  expect_missing(EventKind::kItemSold, "sell_value");
  expect_missing(EventKind::kItemDestroyed, "gold_cost");
  expect_missing(EventKind::kSkillLevelUp, "skill_level");
  expect_missing(EventKind::kWardPlaced, "ward_bounty");
  expect_missing(EventKind::kWardKill, "ward_bounty");
  expect_missing(EventKind::kChampionKill, "damage_by_attacker");
  expect_missing(EventKind::kChampionKillAssist, "damage_by_attacker");
  expect_missing(EventKind::kChampionKillVictim, "victim_damage_dealt");

  DerivedEvent level = event_of(EventKind::kLevelUp, 5);
  CHECK_THROWS_AS(event_weight(level, c), ValidationError);

  DerivedEvent skill = event_of(EventKind::kSkillLevelUp, 4);
  skill.skill_level = 2;
  skill.max_skill_level = 0;
  CHECK_THROWS_AS(event_weight(skill, c), ValidationError);

  DerivedEvent kill = event_of(EventKind::kChampionKill, 6);
  kill.damage_dealt = 450;
  CHECK_THROWS_AS(event_weight(kill, c), ValidationError);

  DerivedEvent tower = event_of(EventKind::kBuildingKill, 1);
  tower.involved_players = 0;
  CHECK_THROWS_AS(event_weight(tower, c), ValidationError);
}

TEST_CASE("vectorize fills the documented slots and nothing else") {
  namespace fs = feature_slot;
  DerivedEvent ev = event_of(EventKind::kWardPlaced, 6, 45000);
  RoleVector roles = {1, 0, 0, 0, 1, 0};  // assassin + support
  const Eigen::Vector2d pos(0.25, 0.75);

  const ActionVector v = vectorize(ev, roles, Lane::kJungle, pos, 0.37, 0.625, 180000);

  CHECK(v[fs::kTimestamp] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(v[fs::kAssassin] == 1.0);
  CHECK(v[fs::kSupport] == 1.0);
  CHECK(v[fs::kMage] == 0.0);
  CHECK(v[fs::kFighter] == 0.0);
  CHECK(v[fs::kTank] == 0.0);
  CHECK(v[fs::kMarksman] == 0.0);
  CHECK(v[fs::kJungle] == 1.0);
  CHECK(v[fs::kTop] == 0.0);
  CHECK(v[fs::kMid] == 0.0);
  CHECK(v[fs::kPosX] == 0.25);
  CHECK(v[fs::kPosY] == 0.75);
  CHECK(v[fs::kDistance] == 0.37);
  CHECK(v[fs::kEventBase + static_cast<int>(EventKind::kWardPlaced)] == 1.0);
  CHECK(v[fs::kEventWeight] == 0.625);

  double sum = 0;
  for (int d = 0; d < kFeatureDim; ++d) sum += v[d];
  CHECK(sum == doctest::Approx(0.25 + 1 + 1 + 1 + 0.25 + 0.75 + 0.37 + 1 + 0.625).epsilon(1e-12));

  CHECK_THROWS_AS(vectorize(ev, roles, Lane::kJungle, pos, 0.37, 0.625, 0), ValidationError);
}

TEST_CASE("role columns map onto their historical vector slots") {
  namespace fs = feature_slot;
  const DerivedEvent ev = event_of(EventKind::kItemPurchased, 1);
  const Eigen::Vector2d pos(0, 0);

  // Role rows are ordered (assassin, fighter, mage, marksman, support, tank).
  const int slot_for_row[6] = {fs::kAssassin, fs::kFighter,  fs::kMage,
                               fs::kMarksman, fs::kSupport, fs::kTank};
  for (int r = 0; r < 6; ++r) {
    RoleVector roles = {0, 0, 0, 0, 0, 0};
    roles[r] = 1;
    const ActionVector v = vectorize(ev, roles, Lane::kTop, pos, 0, 0, 1000);
    for (int s = 1; s <= 6; ++s) CHECK(v[s] == (s == slot_for_row[r] ? 1.0 : 0.0));
  }
}

TEST_CASE("baseline metrics tally the kill family and read the last frame") {
  const ParsedMatch m = feature_match();
  const auto derived = derive_events(m.events);
  const auto stats = baseline_metrics(derived, m.frames);

  CHECK(stats[5].kills == 1);
  CHECK(stats[1].deaths == 1);
  CHECK(stats[6].assists == 1);
  CHECK(stats[8].assists == 1);
  CHECK(stats[0].kills == 0);
  CHECK(stats[0].deaths == 0);

  for (int i = 0; i < 10; ++i) {
    CHECK(stats[i].gold == 500 + 300 * 3 + 10 * i);
    CHECK(stats[i].creep == (5 * 3 + i) + 3);
  }

  const auto bare = baseline_metrics(derived, {});
  CHECK(bare[5].kills == 1);
  CHECK(bare[0].gold == 0);
  CHECK(bare[0].creep == 0);
}

TEST_CASE("kda uses a floor of one death") {
  PlayerStats s;
  s.kills = 4;
  s.assists = 2;
  s.deaths = 0;
  CHECK(s.kda() == doctest::Approx(6.0).epsilon(1e-12));
  s.deaths = 3;
  CHECK(s.kda() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("build_match_sample groups actions per player in order") {
  const ParsedMatch m = feature_match();
  const ChampionRoleTable table = demo_roles();
  const MatchSample sample = build_match_sample(m, table, default_consts());

  CHECK(sample.match_id == "feat-01");
  CHECK(sample.winner == Team::kBlue);
  CHECK(sample.total_actions() == static_cast<int>(derive_events(m.events).size()));

  // buy by p1; level-ups by p5 and p8; kill expands to p6/p9/p7/p2; elite to p10/p8/p6.
  CHECK(sample.sequences[0].size() == 1);
  CHECK(sample.sequences[4].size() == 1);
  CHECK(sample.sequences[7].size() == 2);
  CHECK(sample.sequences[5].size() == 2);
  CHECK(sample.sequences[8].size() == 1);
  CHECK(sample.sequences[6].size() == 1);
  CHECK(sample.sequences[1].size() == 1);
  CHECK(sample.sequences[9].size() == 1);
  CHECK(sample.sequences[2].empty());
  CHECK(sample.sequences[3].empty());

  namespace fs = feature_slot;
  for (int p = 0; p < 10; ++p) {
    double prev = -1;
    for (const ActionVector& v : sample.sequences[p]) {
      CHECK(v[fs::kTimestamp] >= prev);
      prev = v[fs::kTimestamp];
      CHECK(v[fs::kTimestamp] >= 0.0);
      CHECK(v[fs::kTimestamp] <= 1.0);
      CHECK(v[fs::kEventWeight] >= 0.0);
      CHECK(v[fs::kEventWeight] <= 1.0);
    }
  }

  // Garen (player 6) is fighter+tank; his kill row should carry both flags.
  const ActionVector& kill_row = sample.sequences[5][0];
  CHECK(kill_row[fs::kFighter] == 1.0);
  CHECK(kill_row[fs::kTank] == 1.0);
  CHECK(kill_row[fs::kAssassin] == 0.0);
  CHECK(kill_row[fs::kEventBase + static_cast<int>(EventKind::kChampionKill)] == 1.0);
  CHECK(kill_row[fs::kEventWeight] == doctest::Approx(0.5).epsilon(1e-12));

  // Player 8 levels up second while tied on level 3, so their rank is 2.
  const ActionVector& lvl5 = sample.sequences[4][0];
  const ActionVector& lvl8 = sample.sequences[7][0];
  CHECK(lvl5[fs::kEventWeight] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(lvl8[fs::kEventWeight] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("build_match_sample rejects unknown champions") {
  ParsedMatch m = feature_match();
  m.meta.players[3].champion = "Zilean";
  try {
    build_match_sample(m, demo_roles(), default_consts());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("Zilean") != std::string::npos);
  }
}

TEST_CASE("samples serialize to one line and round-trip exactly") {
  const MatchSample sample = build_match_sample(feature_match(), demo_roles(), default_consts());
  const std::string line = serialize_sample(sample);
  CHECK(line.find('\n') == std::string::npos);

  const MatchSample back = parse_sample(line);
  CHECK(back.match_id == sample.match_id);
  CHECK(back.winner == sample.winner);
  for (int i = 0; i < 10; ++i) {
    CHECK(back.baselines[i].kills == sample.baselines[i].kills);
    CHECK(back.baselines[i].deaths == sample.baselines[i].deaths);
    CHECK(back.baselines[i].assists == sample.baselines[i].assists);
    CHECK(back.baselines[i].gold == sample.baselines[i].gold);
    CHECK(back.baselines[i].creep == sample.baselines[i].creep);
    REQUIRE(back.sequences[i].size() == sample.sequences[i].size());
    for (std::size_t a = 0; a < back.sequences[i].size(); ++a) {
      for (int d = 0; d < kFeatureDim; ++d) {
        // Values pass through a 9-significant-digit text form.
        CHECK(back.sequences[i][a][d] ==
              doctest::Approx(sample.sequences[i][a][d]).epsilon(1e-8));
      }
    }
  }
  // The text form is a fixed point: re-serializing reproduces it byte for byte.
  CHECK(serialize_sample(back) == line);
}

TEST_CASE("dataset records reject structural damage") {
  const std::string line = serialize_sample(build_match_sample(feature_match(), demo_roles(),
                                                               default_consts()));
  CHECK_THROWS_AS(parse_sample("{\"match_id\":3}"), ValidationError);
  CHECK_THROWS_AS(parse_sample("[1,2]"), ValidationError);
  CHECK_THROWS_AS(parse_sample("{\"match_id\":\"x\"}"), ValidationError);
  CHECK_THROWS_AS(parse_sample("not json"), ParseError);

  nlohmann::json doc = nlohmann::json::parse(line);
  doc["baselines"].erase(9);
  CHECK_THROWS_AS(parse_sample(doc.dump()), ValidationError);

  doc = nlohmann::json::parse(line);
  doc["baselines"][0].erase(4);
  CHECK_THROWS_AS(parse_sample(doc.dump()), ValidationError);

  doc = nlohmann::json::parse(line);
  doc["sequences"].erase(9);
  CHECK_THROWS_AS(parse_sample(doc.dump()), ValidationError);

  doc = nlohmann::json::parse(line);
  doc["sequences"][0][0].erase(29);
  CHECK_THROWS_AS(parse_sample(doc.dump()), ValidationError);
}

TEST_CASE("float formatting is compact and stable") {
  CHECK(format_float(0.0) == "0");
  CHECK(format_float(1.0) == "1");
  CHECK(format_float(0.5) == "0.5");
  CHECK(format_float(1.0 / 3.0) == "0.333333333");
  CHECK(format_float(-2.25) == "-2.25");
}

TEST_CASE("dataset files hold one sample per line") {
  const MatchSample sample = build_match_sample(feature_match(), demo_roles(), default_consts());
  MatchSample second = sample;
  second.match_id = "feat-02";
  second.winner = Team::kRed;

  const std::string path = "test_features_dataset.jsonl";
  save_dataset_file(path, {sample, second});

  const std::string text = read_file(path);
  CHECK(text == serialize_sample(sample) + "\n" + serialize_sample(second) + "\n");

  const std::vector<MatchSample> loaded = load_dataset_file(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].match_id == "feat-01");
  CHECK(loaded[1].match_id == "feat-02");
  CHECK(loaded[1].winner == Team::kRed);
  CHECK(serialize_sample(loaded[0]) == serialize_sample(sample));

  {
    std::ofstream out(path, std::ios::binary);
    out << serialize_sample(sample) << "\n" << "{broken\n";
  }
  try {
    load_dataset_file(path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_dataset_file("no_such_dir/none.jsonl"), IoError);
}
