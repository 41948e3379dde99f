#include "mobascore/model.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <string>
#include <utility>

namespace mobascore {
namespace {

constexpr char kMagic[4] = {'A', '2', 'S', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint64_t kShuffleStream = 0x51u;

Team team_of_slot(int slot) { return team_of_participant(slot + 1); }

void validate_labels(const TeamLabels& labels) {
  const bool blue_ok = labels.q_blue == 0 || labels.q_blue == 1;
  const bool red_ok = labels.q_red == 0 || labels.q_red == 1;
  if (!blue_ok || !red_ok || labels.q_blue + labels.q_red != 1) {
    throw ValidationError("team labels must be one-hot");
  }
}

double softplus(double x) {
  if (x > 0) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

MlpParams zeros_like(const MlpParams& p) {
  MlpParams z;
  for (size_t i = 0; i < p.W.size(); ++i) {
    z.W.push_back(Matrix::Zero(p.W[i].rows(), p.W[i].cols()));
    z.b.push_back(Vector::Zero(p.b[i].size()));
  }
  return z;
}

// Per-player intermediates kept alive between the forward and backward passes
// of one training step.
struct MatchForward {
  std::array<GruForward, kPlayersPerMatch> gru;
  std::array<std::vector<double>, kPlayersPerMatch> proc_scores;  // processing order
  std::array<std::vector<MlpCache>, kPlayersPerMatch> mlp;
};

ScoreReport forward_match(const Ensemble& ens, const MatchSample& sample,
                          std::optional<Team> known_outcome, MatchForward* keep) {
  if (ens.config.h0 == InitialState::kOutcomeEncoded && !known_outcome.has_value()) {
    throw ValidationError(
        "this model encodes the match outcome in its initial state; scoring requires the winner");
  }
  const bool reversed = ens.config.order == SequenceOrder::kReversed;
  ScoreReport rep;
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    const auto& seq = sample.sequences[p];
    auto& out = rep.action_scores[p];
    out.assign(seq.size(), 0.0);
    const SubModel& sub = ens.subs[p];
    if (!seq.empty() && ens.config.encoder == Encoder::kMlp) {
      for (size_t a = 0; a < seq.size(); ++a) {
        if (keep != nullptr) {
          MlpCache cache;
          out[a] = mlp_score(sub.mlp, seq[a], &cache);
          keep->mlp[p].push_back(std::move(cache));
        } else {
          out[a] = mlp_score(sub.mlp, seq[a]);
        }
      }
    } else if (!seq.empty()) {
      const size_t T = seq.size();
      std::vector<Vector> inputs(T);
      for (size_t t = 0; t < T; ++t) {
        inputs[t] = seq[reversed ? T - 1 - t : t];
      }
      double h0_value = 0.0;
      if (ens.config.h0 == InitialState::kOutcomeEncoded && team_of_slot(p) == *known_outcome) {
        h0_value = 1.0;
      }
      std::vector<Vector> h0;
      h0.reserve(sub.gru.size());
      for (const GruLayerParams& layer : sub.gru) {
        h0.push_back(Vector::Constant(layer.hidden_dim(), h0_value));
      }
      GruForward fwd = gru_forward(sub.gru, inputs, h0);
      std::vector<double> proc(T);
      for (size_t t = 0; t < T; ++t) {
        proc[t] = slp_score(sub.head, fwd.top_hidden[t]);
        out[reversed ? T - 1 - t : t] = proc[t];
      }
      if (keep != nullptr) {
        keep->gru[p] = std::move(fwd);
        keep->proc_scores[p] = std::move(proc);
      }
    }
    double total = 0.0;
    for (double s : out) {
      total += s;
    }
    rep.player_totals[p] = total;
  }
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    if (team_of_slot(p) == Team::kBlue) {
      rep.team_blue += rep.player_totals[p];
    } else {
      rep.team_red += rep.player_totals[p];
    }
  }
  return rep;
}

}  // namespace

VariantConfig VariantConfig::for_variant(int id) {
  VariantConfig c;
  c.id = id;
  switch (id) {
    case 1:
      c.encoder = Encoder::kGru;
      c.order = SequenceOrder::kReversed;
      c.h0 = InitialState::kZeros;
      c.loss = LossKind::kMargin;
      break;
    case 2:
      c.encoder = Encoder::kGru;
      c.order = SequenceOrder::kReversed;
      c.h0 = InitialState::kOutcomeEncoded;
      c.loss = LossKind::kMargin;
      break;
    case 3:
      c.encoder = Encoder::kGru;
      c.order = SequenceOrder::kChronological;
      c.h0 = InitialState::kZeros;
      c.loss = LossKind::kMargin;
      break;
    case 4:
      c.encoder = Encoder::kGru;
      c.order = SequenceOrder::kReversed;
      c.h0 = InitialState::kZeros;
      c.loss = LossKind::kCrossEntropy;
      break;
    case 5:
      c.encoder = Encoder::kGru;
      c.order = SequenceOrder::kReversed;
      c.h0 = InitialState::kOutcomeEncoded;
      c.loss = LossKind::kCrossEntropy;
      break;
    case 6:
      c.encoder = Encoder::kMlp;
      c.order = SequenceOrder::kChronological;
      c.h0 = InitialState::kZeros;
      c.loss = LossKind::kMargin;
      break;
    case 7:
      c.encoder = Encoder::kMlp;
      c.order = SequenceOrder::kChronological;
      c.h0 = InitialState::kZeros;
      c.loss = LossKind::kCrossEntropy;
      break;
    default:
      throw ValidationError("model id must be between 1 and 7");
  }
  return c;
}

Ensemble Ensemble::init(const VariantConfig& config, const HyperParams& hyper, std::uint64_t seed) {
  if (hyper.hidden < 1 || hyper.layers < 1) {
    throw ValidationError("hidden size and layer count must be at least 1");
  }
  Ensemble ens;
  ens.config = config;
  ens.hyper = hyper;
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(p)));
    SubModel& sub = ens.subs[p];
    if (config.encoder == Encoder::kMlp) {
      sub.mlp = MlpParams::init({kFeatureDim, hyper.hidden, hyper.hidden, 1}, rng);
    } else {
      for (int l = 0; l < hyper.layers; ++l) {
        sub.gru.push_back(GruLayerParams::init(l == 0 ? kFeatureDim : hyper.hidden, hyper.hidden, rng));
      }
      sub.head = SlpParams::init(hyper.hidden, rng);
    }
  }
  return ens;
}

int submodel_param_count(const Ensemble& ens) {
  const SubModel& sub = ens.subs[0];
  if (ens.config.encoder == Encoder::kMlp) {
    return param_count(sub.mlp);
  }
  int n = 0;
  for (const GruLayerParams& layer : sub.gru) {
    n += param_count(layer);
  }
  return n + param_count(sub.head);
}

Vector flatten_submodel(const Ensemble& ens, int slot) {
  Vector out(submodel_param_count(ens));
  double* ptr = out.data();
  const SubModel& sub = ens.subs[slot];
  if (ens.config.encoder == Encoder::kMlp) {
    ptr = flatten_into(sub.mlp, ptr);
  } else {
    for (const GruLayerParams& layer : sub.gru) {
      ptr = flatten_into(layer, ptr);
    }
    ptr = flatten_into(sub.head, ptr);
  }
  assert(ptr == out.data() + out.size());
  (void)ptr;
  return out;
}

void unflatten_submodel(Ensemble& ens, int slot, const Vector& flat) {
  if (flat.size() != submodel_param_count(ens)) {
    throw ValidationError("unflatten_submodel: size mismatch");
  }
  SubModel& sub = ens.subs[slot];
  const double* ptr = flat.data();
  if (ens.config.encoder == Encoder::kMlp) {
    ptr = unflatten_from(sub.mlp, ptr);
  } else {
    for (GruLayerParams& layer : sub.gru) {
      ptr = unflatten_from(layer, ptr);
    }
    ptr = unflatten_from(sub.head, ptr);
  }
  (void)ptr;
}

void average_submodels(Ensemble& ens) {
  Vector mean = Vector::Zero(submodel_param_count(ens));
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    mean += flatten_submodel(ens, p);
  }
  mean /= static_cast<double>(kPlayersPerMatch);
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    unflatten_submodel(ens, p, mean);
  }
}

TeamLabels TeamLabels::from_winner(Team winner) {
  TeamLabels labels;
  labels.q_blue = winner == Team::kBlue ? 1 : 0;
  labels.q_red = 1 - labels.q_blue;
  return labels;
}

ScoreReport score_match(const Ensemble& ens, const MatchSample& sample,
                        std::optional<Team> known_outcome) {
  return forward_match(ens, sample, known_outcome, nullptr);
}

double confidence(double team_blue, double team_red) {
  assert(std::isfinite(team_blue) && std::isfinite(team_red));
  return sigmoid(team_blue - team_red);
}

LossResult bce_loss(double team_blue, double team_red, const TeamLabels& labels) {
  validate_labels(labels);
  const double gap = team_blue - team_red;
  LossResult res;
  res.loss = labels.q_blue == 1 ? softplus(-gap) : softplus(gap);
  const double g = confidence(team_blue, team_red) - static_cast<double>(labels.q_blue);
  res.d_blue = g;
  res.d_red = -g;
  return res;
}

LossResult relu_loss(double team_blue, double team_red, const TeamLabels& labels) {
  validate_labels(labels);
  const bool blue_won = labels.q_blue == 1;
  const double winner_sum = blue_won ? team_blue : team_red;
  const double loser_sum = blue_won ? team_red : team_blue;
  LossResult res;
  if (loser_sum > winner_sum) {
    res.loss = loser_sum - winner_sum;
    res.d_blue = blue_won ? -1.0 : 1.0;
    res.d_red = blue_won ? 1.0 : -1.0;
  }
  return res;
}

LossResult team_loss(LossKind kind, double team_blue, double team_red, const TeamLabels& labels) {
  return kind == LossKind::kCrossEntropy ? bce_loss(team_blue, team_red, labels)
                                         : relu_loss(team_blue, team_red, labels);
}

Discernment discern(double team_blue, double team_red, DiscernMethod method) {
  Discernment d;
  d.tie = team_blue == team_red;
  if (method == DiscernMethod::kConfidence) {
    const double c = confidence(team_blue, team_red);
    d.confidence = c;
    d.predicted = c > 0.5 ? Team::kBlue : Team::kRed;
  } else {
    d.predicted = team_blue > team_red ? Team::kBlue : Team::kRed;
  }
  return d;
}

namespace {

// Gradient of the match loss wrt one submodel's flattened parameters, given
// the cached forward pass and the loss derivative for that player's team sum.
Vector slot_gradient(const Ensemble& ens, const MatchSample& sample, const MatchForward& keep,
                     double d_team, int p) {
  Vector grad = Vector::Zero(submodel_param_count(ens));
  const auto& seq = sample.sequences[p];
  if (seq.empty() || d_team == 0.0) {
    return grad;
  }
  const SubModel& sub = ens.subs[p];
  double* ptr = grad.data();
  if (ens.config.encoder == Encoder::kMlp) {
    MlpParams acc = zeros_like(sub.mlp);
    for (size_t a = 0; a < seq.size(); ++a) {
      const MlpGrads g = mlp_backward(sub.mlp, keep.mlp[p][a], d_team);
      for (size_t i = 0; i < acc.W.size(); ++i) {
        acc.W[i] += g.dW[i];
        acc.b[i] += g.db[i];
      }
    }
    ptr = flatten_into(acc, ptr);
  } else {
    const size_t T = seq.size();
    SlpParams head_acc = SlpParams::zeros(static_cast<int>(sub.head.w.size()));
    std::vector<Vector> upstream(T);
    for (size_t t = 0; t < T; ++t) {
      SlpBack back = slp_backward(sub.head, keep.gru[p].top_hidden[t], keep.proc_scores[p][t],
                                  d_team);
      upstream[t] = std::move(back.dh);
      head_acc.w += back.dw;
      head_acc.b += back.db;
    }
    const GruGrads g = gru_backward(sub.gru, keep.gru[p].cache, upstream);
    for (const GruLayerParams& layer_grad : g.layers) {
      ptr = flatten_into(layer_grad, ptr);
    }
    ptr = flatten_into(head_acc, ptr);
  }
  assert(ptr == grad.data() + grad.size());
  (void)ptr;
  return grad;
}

}  // namespace

double train_match(Ensemble& ens, const MatchSample& sample, std::vector<AdamState>& opt,
                   double lr) {
  if (static_cast<int>(opt.size()) != kPlayersPerMatch) {
    throw ValidationError("train_match: need one optimizer state per submodel");
  }
  std::optional<Team> known_outcome;
  if (ens.config.h0 == InitialState::kOutcomeEncoded) {
    known_outcome = sample.winner;
  }
  MatchForward keep;
  const ScoreReport rep = forward_match(ens, sample, known_outcome, &keep);
  const TeamLabels labels = TeamLabels::from_winner(sample.winner);
  const LossResult res = team_loss(ens.config.loss, rep.team_blue, rep.team_red, labels);

  for (int p = 0; p < kPlayersPerMatch; ++p) {
    const double d_team = team_of_slot(p) == Team::kBlue ? res.d_blue : res.d_red;
    const Vector grad = slot_gradient(ens, sample, keep, d_team, p);
    Vector params = flatten_submodel(ens, p);
    adam_step(params, grad, opt[p], lr);
    unflatten_submodel(ens, p, params);
  }
  average_submodels(ens);
  return res.loss;
}

std::pair<double, Vector> match_loss_gradient(const Ensemble& ens, const MatchSample& sample,
                                              int slot) {
  if (slot < 0 || slot >= kPlayersPerMatch) {
    throw ValidationError("match_loss_gradient: slot must be in [0, 10)");
  }
  std::optional<Team> known_outcome;
  if (ens.config.h0 == InitialState::kOutcomeEncoded) {
    known_outcome = sample.winner;
  }
  MatchForward keep;
  const ScoreReport rep = forward_match(ens, sample, known_outcome, &keep);
  const TeamLabels labels = TeamLabels::from_winner(sample.winner);
  const LossResult res = team_loss(ens.config.loss, rep.team_blue, rep.team_red, labels);
  const double d_team = team_of_slot(slot) == Team::kBlue ? res.d_blue : res.d_red;
  return {res.loss, slot_gradient(ens, sample, keep, d_team, slot)};
}

double discernment_accuracy(const Ensemble& ens, const std::vector<MatchSample>& data) {
  if (data.empty()) {
    throw ValidationError("discernment_accuracy: empty dataset");
  }
  long correct = 0;
  for (const MatchSample& sample : data) {
    std::optional<Team> known_outcome;
    if (ens.config.h0 == InitialState::kOutcomeEncoded) {
      known_outcome = sample.winner;
    }
    const ScoreReport rep = score_match(ens, sample, known_outcome);
    const Discernment d = discern(rep.team_blue, rep.team_red, ens.config.method());
    if (d.predicted == sample.winner) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainHistory train(Ensemble& ens, const std::vector<MatchSample>& train_set,
                   const std::vector<MatchSample>& val_set, const HyperParams& hyper,
                   std::uint64_t seed) {
  TrainHistory hist;
  if (hyper.epochs <= 0) {
    return hist;
  }
  if (train_set.empty()) {
    throw ValidationError("train: training set is empty");
  }
  if (val_set.empty()) {
    throw ValidationError("train: validation set is empty");
  }
  std::vector<AdamState> opt(kPlayersPerMatch, AdamState(submodel_param_count(ens)));
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng shuffler(Rng::mix(seed, kShuffleStream));

  Ensemble best = ens;
  double best_acc = -1.0;
  int best_epoch = 0;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    shuffler.shuffle(order);
    double total = 0.0;
    for (size_t idx : order) {
      total += train_match(ens, train_set[idx], opt, hyper.lr);
    }
    EpochStats stats;
    stats.train_loss = total / static_cast<double>(train_set.size());
    stats.val_accuracy = discernment_accuracy(ens, val_set);
    hist.epochs.push_back(stats);
    if (stats.val_accuracy > best_acc) {
      best_acc = stats.val_accuracy;
      best = ens;
      best_epoch = epoch;
    }
  }
  ens = std::move(best);
  hist.best_epoch = best_epoch;
  hist.best_accuracy = best_acc;
  return hist;
}

// --- checkpoint io -----------------------------------------------------------

namespace {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_f64(std::string& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

void put_block(std::string& out, const std::string& name, const Matrix& m) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      put_f64(out, m(r, c));
    }
  }
}

void put_scalar_block(std::string& out, const std::string& name, double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  put_block(out, name, m);
}

struct Reader {
  const std::string& data;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > data.size()) {
      throw IoError("checkpoint truncated");
    }
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data[pos++]);
  }
  std::uint16_t u16() {
    std::uint16_t v = u8();
    v |= static_cast<std::uint16_t>(u8()) << 8;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    }
    return v;
  }
  double f64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    }
    return std::bit_cast<double>(v);
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
  bool done() const { return pos == data.size(); }
};

class BlockMap {
 public:
  void insert(const std::string& name, Matrix m) {
    if (!blocks_.emplace(name, std::move(m)).second) {
      throw IoError("checkpoint has duplicate block: " + name);
    }
  }

  Matrix take(const std::string& name, long rows, long cols) {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) {
      throw IoError("checkpoint missing block: " + name);
    }
    Matrix m = std::move(it->second);
    blocks_.erase(it);
    if (m.rows() != rows || m.cols() != cols) {
      throw IoError("checkpoint block " + name + " has shape " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
    }
    return m;
  }

  double take_scalar(const std::string& name) { return take(name, 1, 1)(0, 0); }

  void expect_empty() const {
    if (!blocks_.empty()) {
      throw IoError("checkpoint has unknown block: " + blocks_.begin()->first);
    }
  }

 private:
  std::map<std::string, Matrix> blocks_;
};

}  // namespace

void save_checkpoint(const Ensemble& ens, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kFormatVersion);
  put_u8(out, static_cast<std::uint8_t>(ens.config.id));
  put_u16(out, static_cast<std::uint16_t>(ens.hyper.hidden));
  put_u16(out, static_cast<std::uint16_t>(ens.hyper.layers));
  put_scalar_block(out, "hyper/lr", ens.hyper.lr);
  put_scalar_block(out, "hyper/epochs", static_cast<double>(ens.hyper.epochs));
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    const std::string base = "sub" + std::to_string(p + 1);
    const SubModel& sub = ens.subs[p];
    if (ens.config.encoder == Encoder::kMlp) {
      for (size_t i = 0; i < sub.mlp.W.size(); ++i) {
        put_block(out, base + "/mlp/W" + std::to_string(i + 1), sub.mlp.W[i]);
        put_block(out, base + "/mlp/b" + std::to_string(i + 1), sub.mlp.b[i]);
      }
    } else {
      for (size_t l = 0; l < sub.gru.size(); ++l) {
        const std::string prefix = base + "/layer" + std::to_string(l + 1) + "/";
        const GruLayerParams& layer = sub.gru[l];
        put_block(out, prefix + "W_z", layer.W_z);
        put_block(out, prefix + "W_r", layer.W_r);
        put_block(out, prefix + "W_h", layer.W_h);
        put_block(out, prefix + "U_z", layer.U_z);
        put_block(out, prefix + "U_r", layer.U_r);
        put_block(out, prefix + "U_h", layer.U_h);
        put_block(out, prefix + "b_z", layer.b_z);
        put_block(out, prefix + "b_r", layer.b_r);
        put_block(out, prefix + "b_h", layer.b_h);
      }
      put_block(out, base + "/head/w", Matrix(sub.head.w.transpose()));
      put_scalar_block(out, base + "/head/b", sub.head.b);
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw IoError("cannot open " + path + " for writing");
  }
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  file.flush();
  if (!file) {
    throw IoError("failed writing " + path);
  }
}

Ensemble load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open " + path);
  }
  const std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  Reader r{data};

  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw IoError(path + ": not a model checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const int variant = r.u8();
  const int hidden = r.u16();
  const int layers = r.u16();
  const VariantConfig config = VariantConfig::for_variant(variant);
  if (hidden < 1 || layers < 1) {
    throw IoError(path + ": invalid model dimensions in header");
  }

  BlockMap blocks;
  while (!r.done()) {
    const std::uint32_t name_len = r.u32();
    if (name_len == 0 || name_len > 4096) {
      throw IoError(path + ": implausible block name length");
    }
    const std::string name = r.bytes(name_len);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows == 0 || cols == 0 ||
        static_cast<std::uint64_t>(rows) * cols > (std::uint64_t{1} << 24)) {
      throw IoError(path + ": implausible block shape in " + name);
    }
    Matrix m(rows, cols);
    for (std::uint32_t rr = 0; rr < rows; ++rr) {
      for (std::uint32_t cc = 0; cc < cols; ++cc) {
        m(rr, cc) = r.f64();
      }
    }
    if (!m.allFinite()) {
      throw IoError(path + ": non-finite values in block " + name);
    }
    blocks.insert(name, std::move(m));
  }

  HyperParams hyper;
  hyper.hidden = hidden;
  hyper.layers = layers;
  hyper.lr = blocks.take_scalar("hyper/lr");
  const double epochs = blocks.take_scalar("hyper/epochs");
  if (!(epochs >= 0) || epochs != std::floor(epochs) || epochs > 1e9) {
    throw IoError(path + ": invalid epochs value");
  }
  hyper.epochs = static_cast<int>(epochs);

  Ensemble ens;
  ens.config = config;
  ens.hyper = hyper;
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    const std::string base = "sub" + std::to_string(p + 1);
    SubModel& sub = ens.subs[p];
    if (config.encoder == Encoder::kMlp) {
      const std::vector<int> dims = {kFeatureDim, hidden, hidden, 1};
      sub.mlp = MlpParams::zeros(dims);
      for (size_t i = 0; i < sub.mlp.W.size(); ++i) {
        sub.mlp.W[i] = blocks.take(base + "/mlp/W" + std::to_string(i + 1), dims[i + 1], dims[i]);
        sub.mlp.b[i] = blocks.take(base + "/mlp/b" + std::to_string(i + 1), dims[i + 1], 1);
      }
    } else {
      for (int l = 0; l < layers; ++l) {
        const std::string prefix = base + "/layer" + std::to_string(l + 1) + "/";
        const int in = l == 0 ? kFeatureDim : hidden;
        GruLayerParams layer = GruLayerParams::zeros(in, hidden);
        layer.W_z = blocks.take(prefix + "W_z", hidden, in);
        layer.W_r = blocks.take(prefix + "W_r", hidden, in);
        layer.W_h = blocks.take(prefix + "W_h", hidden, in);
        layer.U_z = blocks.take(prefix + "U_z", hidden, hidden);
        layer.U_r = blocks.take(prefix + "U_r", hidden, hidden);
        layer.U_h = blocks.take(prefix + "U_h", hidden, hidden);
        layer.b_z = blocks.take(prefix + "b_z", hidden, 1);
        layer.b_r = blocks.take(prefix + "b_r", hidden, 1);
        layer.b_h = blocks.take(prefix + "b_h", hidden, 1);
        sub.gru.push_back(std::move(layer));
      }
      sub.head.w = blocks.take(base + "/head/w", 1, hidden).row(0).transpose();
      sub.head.b = blocks.take_scalar(base + "/head/b");
    }
  }
  blocks.expect_empty();
  return ens;
}

}  // namespace mobascore
