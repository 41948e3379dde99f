#include "mobascore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include "mobascore/eval.hpp"

namespace mobascore {
namespace {

constexpr std::uint64_t kTableStream = 0x7ab1eu;

constexpr int kRawKinds = kRawEventKindCount;

// Relative event-kind frequencies per lane, in RawEventKind order:
// PURCHASED, SOLD, DESTROYED, SKILL_UP, LEVEL_UP, WARD_PLACED, WARD_KILL,
// CHAMPION_KILL, BUILDING, ELITE. Supports ward a lot, junglers take the big
// monsters, carries fight more.
constexpr double kLaneKindWeights[5][kRawKinds] = {
    {22, 3, 4, 14, 12, 6, 3, 14, 9, 3},    // Top
    {22, 3, 4, 14, 12, 7, 4, 16, 6, 4},    // Mid
    {24, 3, 4, 14, 12, 5, 3, 16, 7, 3},    // Bottom
    {16, 2, 3, 12, 10, 26, 10, 6, 3, 2},   // Utility
    {18, 3, 4, 12, 11, 8, 5, 12, 4, 20},   // Jungle
};

struct Home {
  double x = 0.0;
  double y = 0.0;
};

Home home_of(Lane lane, Team team) {
  Home h;
  switch (lane) {
    case Lane::kTop: h = {2000.0, 9500.0}; break;
    case Lane::kMid: h = {6000.0, 6000.0}; break;
    case Lane::kBottom: h = {9500.0, 2000.0}; break;
    case Lane::kUtility: h = {8800.0, 2600.0}; break;
    case Lane::kJungle: h = {4500.0, 4500.0}; break;
  }
  if (team == Team::kRed) {
    h.x = kMapExtent - h.x;
    h.y = kMapExtent - h.y;
  }
  return h;
}

int clamp_coord(double v) {
  return static_cast<int>(std::lround(std::clamp(v, 0.0, kMapExtent)));
}

// Players drift from their lane home toward the middle as the match runs.
Vec2i roam(const Home& h, double tau, double sigma, Rng& rng) {
  const double pull = 0.5 * tau;
  Vec2i p;
  p.x = clamp_coord(h.x + (kMapExtent / 2 - h.x) * pull + sigma * rng.normal());
  p.y = clamp_coord(h.y + (kMapExtent / 2 - h.y) * pull + sigma * rng.normal());
  return p;
}

std::string pad_number(int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, value);
  return buf;
}

int pick_kind(const double* weights, double kill_scale, Rng& rng) {
  double adjusted[kRawKinds];
  double total = 0.0;
  for (int k = 0; k < kRawKinds; ++k) {
    adjusted[k] = weights[k];
    if (k == static_cast<int>(RawEventKind::kChampionKill)) {
      adjusted[k] *= kill_scale;
    }
    total += adjusted[k];
  }
  double u = rng.uniform(0.0, total);
  for (int k = 0; k < kRawKinds; ++k) {
    u -= adjusted[k];
    if (u <= 0.0) {
      return k;
    }
  }
  return kRawKinds - 1;
}

}  // namespace

void GenConfig::validate() const {
  if (n_matches < 1) {
    throw ValidationError("n_matches must be >= 1");
  }
  if (min_events < 1) {
    throw ValidationError("min_events must be >= 1");
  }
  if (max_events < min_events) {
    throw ValidationError("max_events must be >= min_events");
  }
  if (!(label_flip_probability >= 0.0 && label_flip_probability < 0.5)) {
    throw ValidationError("label_flip_probability must be in [0, 0.5)");
  }
  if (latent_weights.size() != 0 && latent_weights.size() != kFeatureDim) {
    throw ValidationError("latent_weights must have 30 entries");
  }
  if (skill_spread < 0 || outcome_noise < 0 || gold_noise < 0 || creep_noise < 0) {
    throw ValidationError("spread and noise parameters must be >= 0");
  }
  if (margin_floor < 0) {
    throw ValidationError("margin_floor must be >= 0");
  }
  if (synthetic_champions < 6) {
    throw ValidationError("synthetic_champions must be >= 6 (champion pool of 10)");
  }
  constants.validate();
}

Vector default_latent_weights() {
  Vector w = Vector::Zero(kFeatureDim);
  w[feature_slot::kTimestamp] = 0.05;
  w[feature_slot::kAssassin] = 2.2;
  w[feature_slot::kFighter] = 0.8;
  w[feature_slot::kMage] = 1.5;
  w[feature_slot::kMarksman] = 2.8;
  w[feature_slot::kSupport] = -2.0;
  w[feature_slot::kTank] = -1.2;
  w[feature_slot::kTop] = 0.5;
  w[feature_slot::kTop + 1] = 1.0;
  w[feature_slot::kTop + 2] = 0.8;
  w[feature_slot::kTop + 3] = -1.2;
  w[feature_slot::kTop + 4] = 0.25;
  w[feature_slot::kPosX] = 0.05;
  w[feature_slot::kPosY] = -0.05;
  w[feature_slot::kDistance] = 0.1;
  const auto ev = [&](EventKind k) -> double& {
    return w[feature_slot::kEventBase + static_cast<int>(k)];
  };
  ev(EventKind::kItemPurchased) = 0.15;
  ev(EventKind::kItemSold) = -0.10;
  ev(EventKind::kItemDestroyed) = -0.10;
  ev(EventKind::kSkillLevelUp) = 0.15;
  ev(EventKind::kLevelUp) = 0.20;
  ev(EventKind::kWardPlaced) = 0.30;
  ev(EventKind::kWardKill) = 0.25;
  ev(EventKind::kChampionKill) = 0.60;
  ev(EventKind::kChampionKillAssist) = 0.40;
  ev(EventKind::kChampionKillVictim) = -0.70;
  ev(EventKind::kBuildingKill) = 0.40;
  ev(EventKind::kBuildingKillAssist) = 0.20;
  ev(EventKind::kEliteMonsterKill) = 0.35;
  ev(EventKind::kEliteMonsterKillAssist) = 0.18;
  w[feature_slot::kEventWeight] = 0.3;

  // Exactly one kind indicator is set per action, so shifting every kind
  // weight by a constant shifts every action value by that constant. The
  // shift is chosen so the average action is worth roughly zero under the
  // generator's event mix. Without it the team sums are dominated by how
  // many actions each player logged, and a model can discern the winner
  // with a constant positive score instead of valuing individual actions.
  constexpr double kMeanActionValue = 2.09;
  for (int k = 0; k < kEventKindCount; ++k) {
    w[feature_slot::kEventBase + k] -= kMeanActionValue;
  }
  return w;
}

ChampionRoleTable synth_role_table(int synthetic_champions, std::uint64_t seed) {
  if (synthetic_champions < 0) {
    throw ValidationError("synthetic_champions must be >= 0");
  }
  ChampionRoleTable table;
  table.add("Annie", RoleVector{0, 0, 1, 0, 0, 0});
  table.add("Kayle", RoleVector{0, 1, 0, 0, 1, 0});
  table.add("Shyvana", RoleVector{0, 1, 0, 0, 0, 1});
  table.add("Vayne", RoleVector{1, 0, 0, 1, 0, 0});
  Rng rng(seed);
  for (int i = 1; i <= synthetic_champions; ++i) {
    RoleVector roles{};
    roles[static_cast<size_t>(rng.uniform_int(0, 5))] = 1;
    if (rng.uniform() < 0.5) {
      roles[static_cast<size_t>(rng.uniform_int(0, 5))] = 1;
    }
    table.add("Syn" + pad_number(i, 2), roles);
  }
  return table;
}

namespace {

// One full roll of a match: draft, skills, events, features, latent values.
// Split out so generate_match can reroll until the team value gap clears the
// configured floor.
struct RolledMatch {
  GeneratedMatch out;
  std::array<double, kPlayersPerMatch> value_total{};
  double quality_blue = 0.0;
  double quality_red = 0.0;
};

RolledMatch roll_match(const GenConfig& config, const ChampionRoleTable& table, int index,
                       const Vector& latent, Rng& rng) {
  RolledMatch rolled;
  GeneratedMatch& out = rolled.out;
  ParsedMatch& match = out.match;
  match.meta.match_id = "synth-" + pad_number(index, 6);
  match.meta.duration_ms = rng.uniform_int(1200000, 2400000);
  match.meta.winner = Team::kBlue;  // placeholder until the value sums exist
  const double duration = static_cast<double>(match.meta.duration_ms);

  std::vector<Lane> lanes = {Lane::kTop, Lane::kMid, Lane::kBottom, Lane::kUtility, Lane::kJungle};
  std::vector<std::string> pool;
  for (const auto& [name, roles] : table.rows()) {
    pool.push_back(name);
  }
  rng.shuffle(pool);

  // Feature slot for each RoleVector column (assassin, fighter, mage,
  // marksman, support, tank).
  constexpr int kRoleSlot[6] = {feature_slot::kAssassin, feature_slot::kFighter,
                                feature_slot::kMage,     feature_slot::kMarksman,
                                feature_slot::kSupport,  feature_slot::kTank};

  std::array<double, kPlayersPerMatch> skill{};
  for (int side = 0; side < 2; ++side) {
    rng.shuffle(lanes);
    for (int i = 0; i < 5; ++i) {
      const int pid = side * 5 + i + 1;
      PlayerInfo& info = match.meta.players[pid - 1];
      info.participant_id = pid;
      info.team = side == 0 ? Team::kBlue : Team::kRed;
      info.lane = lanes[static_cast<size_t>(i)];
      info.champion = pool[static_cast<size_t>(pid - 1)];
      // Skill follows the static worth of the player's draft (champion roles
      // plus lane, under the latent weights) with personal noise on top, so
      // kill and death patterns carry information about player value instead
      // of being an independent axis.
      const RoleVector& roles = table.lookup(info.champion);
      double draft = latent[feature_slot::kTop + static_cast<int>(info.lane)];
      for (int r = 0; r < 6; ++r) {
        draft += roles[static_cast<size_t>(r)] * latent[kRoleSlot[r]];
      }
      skill[pid - 1] = config.skill_spread * (0.5 * draft + 0.66 * rng.normal());
    }
  }

  const auto home = [&](int pid) {
    const PlayerInfo& info = match.meta.players[pid - 1];
    return home_of(info.lane, info.team);
  };

  const int n_frames = static_cast<int>(match.meta.duration_ms / kFrameIntervalMs) + 1;
  match.frames.resize(static_cast<size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    FrameSnapshot& snap = match.frames[static_cast<size_t>(f)];
    snap.timestamp_ms = static_cast<std::int64_t>(f) * kFrameIntervalMs;
    const double tau = static_cast<double>(snap.timestamp_ms) / duration;
    for (int pid = 1; pid <= kPlayersPerMatch; ++pid) {
      snap.players[pid - 1].position = roam(home(pid), tau, 1100.0, rng);
    }
  }

  for (int pid = 1; pid <= kPlayersPerMatch; ++pid) {
    const PlayerInfo& info = match.meta.players[pid - 1];
    const double* kind_weights = kLaneKindWeights[static_cast<int>(info.lane)];
    const double kill_scale = std::exp(config.kill_tilt * skill[pid - 1]);

    const auto n_base = rng.uniform_int(config.min_events, config.max_events);
    const double scaled = std::lround(static_cast<double>(n_base) *
                                      (1.0 + config.count_tilt * skill[pid - 1]));
    const int n_events = static_cast<int>(std::clamp<double>(
        scaled, config.min_events, config.max_events));

    int counts[kRawKinds] = {};
    for (int e = 0; e < n_events; ++e) {
      ++counts[pick_kind(kind_weights, kill_scale, rng)];
    }
    constexpr int kMaxLevelUps = 17;  // levels 2..18
    if (counts[static_cast<int>(RawEventKind::kLevelUp)] > kMaxLevelUps) {
      counts[static_cast<int>(RawEventKind::kSkillLevelUp)] +=
          counts[static_cast<int>(RawEventKind::kLevelUp)] - kMaxLevelUps;
      counts[static_cast<int>(RawEventKind::kLevelUp)] = kMaxLevelUps;
    }

    // Level-ups get sorted timestamps so the level counter rises with time.
    {
      const int k = counts[static_cast<int>(RawEventKind::kLevelUp)];
      std::vector<std::int64_t> stamps(static_cast<size_t>(k));
      for (auto& t : stamps) {
        t = rng.uniform_int(0, match.meta.duration_ms);
      }
      std::sort(stamps.begin(), stamps.end());
      for (int i = 0; i < k; ++i) {
        TimelineEvent ev;
        ev.timestamp_ms = stamps[static_cast<size_t>(i)];
        ev.kind = RawEventKind::kLevelUp;
        ev.actor = pid;
        ev.payload.level = i + 2;
        match.events.push_back(std::move(ev));
      }
    }

    for (int k = 0; k < kRawKinds; ++k) {
      const auto kind = static_cast<RawEventKind>(k);
      if (kind == RawEventKind::kLevelUp) {
        continue;
      }
      for (int e = 0; e < counts[k]; ++e) {
        TimelineEvent ev;
        ev.timestamp_ms = rng.uniform_int(0, match.meta.duration_ms);
        ev.kind = kind;
        ev.actor = pid;
        const double tau = static_cast<double>(ev.timestamp_ms) / duration;
        switch (kind) {
          case RawEventKind::kItemPurchased:
            ev.payload.gold_cost = rng.uniform_int(150, 4200);
            break;
          case RawEventKind::kItemSold:
            ev.payload.sell_value = rng.uniform_int(50, 2100);
            break;
          case RawEventKind::kItemDestroyed:
            ev.payload.gold_cost = rng.uniform_int(100, 1500);
            break;
          case RawEventKind::kSkillLevelUp:
            ev.payload.skill_level = static_cast<int>(rng.uniform_int(1, 5));
            ev.payload.max_skill_level = 5;
            break;
          case RawEventKind::kWardPlaced:
          case RawEventKind::kWardKill:
            ev.payload.ward_bounty = rng.uniform_int(20, 75);
            ev.position = roam(home(pid), tau, 1500.0, rng);
            break;
          case RawEventKind::kChampionKill: {
            const int first_enemy = info.team == Team::kBlue ? 6 : 1;
            double weights[5];
            double total = 0.0;
            for (int i = 0; i < 5; ++i) {
              weights[i] = std::exp(-config.victim_tilt * skill[first_enemy + i - 1]);
              total += weights[i];
            }
            double u = rng.uniform(0.0, total);
            int victim = first_enemy + 4;
            for (int i = 0; i < 5; ++i) {
              u -= weights[i];
              if (u <= 0.0) {
                victim = first_enemy + i;
                break;
              }
            }
            ev.victim = victim;
            const int first_ally = info.team == Team::kBlue ? 1 : 6;
            for (int mate = first_ally; mate < first_ally + 5; ++mate) {
              if (mate == pid) {
                continue;
              }
              const bool support = match.meta.players[mate - 1].lane == Lane::kUtility;
              if (rng.uniform() < (support ? 0.55 : 0.35)) {
                ev.assisting.push_back(mate);
              }
            }
            const std::int64_t received = rng.uniform_int(800, 3000);
            const double attributed = rng.uniform(0.65, 0.95);
            std::vector<std::pair<int, double>> shares;
            shares.emplace_back(pid, 2.0 + rng.uniform());
            for (int mate : ev.assisting) {
              shares.emplace_back(mate, 0.5 + 0.5 * rng.uniform());
            }
            double share_total = 0.0;
            for (const auto& [who, s] : shares) {
              share_total += s;
            }
            for (const auto& [who, s] : shares) {
              ev.payload.damage_by_attacker[who] = static_cast<std::int64_t>(
                  std::lround(attributed * static_cast<double>(received) * s / share_total));
            }
            ev.payload.total_damage_received = received;
            ev.payload.victim_damage_dealt =
                rng.uniform_int(0, static_cast<std::int64_t>(1.2 * static_cast<double>(received)));
            ev.position = roam(home(victim), tau, 900.0, rng);
            break;
          }
          case RawEventKind::kBuildingKill: {
            const int first_ally = info.team == Team::kBlue ? 1 : 6;
            for (int mate = first_ally; mate < first_ally + 5; ++mate) {
              if (mate != pid && rng.uniform() < 0.3) {
                ev.assisting.push_back(mate);
              }
            }
            const Home h = home(pid);
            const double toward = rng.uniform(0.2, 0.7);
            const double bx = info.team == Team::kBlue ? kMapExtent : 0.0;
            Vec2i pos;
            pos.x = clamp_coord(h.x + (bx - h.x) * toward + 600.0 * rng.normal());
            pos.y = clamp_coord(h.y + (bx - h.y) * toward + 600.0 * rng.normal());
            ev.position = pos;
            break;
          }
          case RawEventKind::kEliteMonsterKill: {
            const int first_ally = info.team == Team::kBlue ? 1 : 6;
            for (int mate = first_ally; mate < first_ally + 5; ++mate) {
              if (mate != pid && rng.uniform() < 0.3) {
                ev.assisting.push_back(mate);
              }
            }
            Vec2i pos;
            pos.x = clamp_coord(rng.uniform(3500.0, 11500.0));
            pos.y = clamp_coord(rng.uniform(3500.0, 11500.0));
            ev.position = pos;
            break;
          }
          case RawEventKind::kLevelUp:
            break;
        }
        match.events.push_back(std::move(ev));
      }
    }
  }

  std::stable_sort(match.events.begin(), match.events.end(),
                   [](const TimelineEvent& a, const TimelineEvent& b) {
                     return a.timestamp_ms < b.timestamp_ms;
                   });

  out.sample = build_match_sample(match, table, config.constants);

  std::array<double, kPlayersPerMatch>& value_total = rolled.value_total;
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    auto& values = out.latents[p];
    values.reserve(out.sample.sequences[p].size());
    for (const ActionVector& x : out.sample.sequences[p]) {
      const double v = latent.dot(x);
      values.push_back(v);
      value_total[p] += v;
    }
  }

  for (int p = 0; p < kPlayersPerMatch; ++p) {
    (team_of_participant(p + 1) == Team::kBlue ? rolled.quality_blue : rolled.quality_red) +=
        value_total[p];
  }
  return rolled;
}

}  // namespace

GeneratedMatch generate_match(const GenConfig& config, const ChampionRoleTable& table, int index) {
  config.validate();
  if (table.size() < static_cast<size_t>(kPlayersPerMatch)) {
    throw ValidationError("champion pool smaller than a match");
  }
  Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(index)));
  const Vector latent =
      config.latent_weights.size() == kFeatureDim ? config.latent_weights : default_latent_weights();

  // Reroll near-ties: a label decided by a hair-thin value gap looks exactly
  // like a flipped label to a learner, so close matches act as label noise
  // beyond the configured flip rate. The cap bounds generation time when the
  // floor is out of reach for a config; the last roll is then kept.
  constexpr int kMaxRolls = 64;
  RolledMatch rolled = roll_match(config, table, index, latent, rng);
  for (int roll = 1;
       roll < kMaxRolls && std::abs(rolled.quality_blue - rolled.quality_red) < config.margin_floor;
       ++roll) {
    rolled = roll_match(config, table, index, latent, rng);
  }

  GeneratedMatch& out = rolled.out;
  ParsedMatch& match = out.match;
  const std::array<double, kPlayersPerMatch>& value_total = rolled.value_total;
  const int n_frames = static_cast<int>(match.frames.size());

  double quality_blue = rolled.quality_blue;
  double quality_red = rolled.quality_red;
  if (config.outcome_noise > 0) {
    quality_blue += config.outcome_noise * rng.normal();
    quality_red += config.outcome_noise * rng.normal();
  }
  Team winner = quality_blue > quality_red ? Team::kBlue : Team::kRed;
  if (rng.uniform() < config.label_flip_probability) {
    winner = winner == Team::kBlue ? Team::kRed : Team::kBlue;
  }
  match.meta.winner = winner;
  out.sample.winner = winner;

  double mean = 0.0;
  for (double v : value_total) {
    mean += v;
  }
  mean /= kPlayersPerMatch;
  double var = 0.0;
  for (double v : value_total) {
    var += (v - mean) * (v - mean);
  }
  const double spread = std::sqrt(var / kPlayersPerMatch);

  for (int p = 0; p < kPlayersPerMatch; ++p) {
    const double z = spread > 1e-9 ? (value_total[p] - mean) / spread : 0.0;
    const std::int64_t gold = std::max<std::int64_t>(
        500, std::llround(config.gold_base + config.gold_signal * z +
                          config.gold_noise * rng.normal()));
    const int creep = static_cast<int>(std::max<std::int64_t>(
        0, std::llround(config.creep_base + config.creep_signal * z +
                        config.creep_noise * rng.normal())));
    const bool jungler = match.meta.players[p].lane == Lane::kJungle;
    const int jungle_creep = static_cast<int>(std::lround((jungler ? 0.8 : 0.1) * creep));

    for (int f = 0; f < n_frames; ++f) {
      const double frac =
          n_frames > 1 ? static_cast<double>(f) / static_cast<double>(n_frames - 1) : 1.0;
      PlayerFrame& pf = match.frames[static_cast<size_t>(f)].players[p];
      pf.total_gold = std::llround(static_cast<double>(gold) * frac);
      pf.jungle_minions_killed = static_cast<int>(std::lround(jungle_creep * frac));
      pf.minions_killed =
          static_cast<int>(std::lround((creep - jungle_creep) * frac));
      pf.level = 1 + static_cast<int>(std::lround(17.0 * frac));
    }
    out.sample.baselines[p].gold = gold;
    out.sample.baselines[p].creep = creep;
  }

  return out;
}

LabeledDataset generate(const GenConfig& config) {
  config.validate();
  const ChampionRoleTable table =
      synth_role_table(config.synthetic_champions, Rng::mix(config.seed, kTableStream));
  LabeledDataset out;
  out.label_flip_probability = config.label_flip_probability;
  out.samples.reserve(static_cast<size_t>(config.n_matches));
  out.latents.reserve(static_cast<size_t>(config.n_matches));
  for (int i = 0; i < config.n_matches; ++i) {
    GeneratedMatch g = generate_match(config, table, i);
    out.samples.push_back(std::move(g.sample));
    out.latents.push_back(std::move(g.latents));
  }
  return out;
}

OracleReport oracle_scores(const LabeledDataset& data, const Ensemble& ens) {
  if (data.samples.empty()) {
    throw ValidationError("oracle_scores: empty dataset");
  }
  if (data.latents.size() != data.samples.size()) {
    throw ValidationError("oracle_scores: latent values do not align with samples");
  }
  const std::vector<ScoreReport> reports = score_dataset(ens, data.samples);
  std::vector<double> scores;
  std::vector<double> values;
  for (size_t i = 0; i < data.samples.size(); ++i) {
    for (int p = 0; p < kPlayersPerMatch; ++p) {
      const auto& s = reports[i].action_scores[p];
      const auto& v = data.latents[i][p];
      if (s.size() != v.size()) {
        throw ValidationError("oracle_scores: latent values do not align with samples");
      }
      scores.insert(scores.end(), s.begin(), s.end());
      values.insert(values.end(), v.begin(), v.end());
    }
  }
  OracleReport rep;
  rep.n_actions = static_cast<long>(scores.size());
  rep.spearman = spearman(scores, values);
  rep.accuracy = discernment_eval(data.samples, reports, ens.config.method()).accuracy;
  rep.bayes_ceiling = 1.0 - data.label_flip_probability;
  return rep;
}

}  // namespace mobascore
