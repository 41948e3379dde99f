#include "mobascore/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace mobascore {
namespace {

namespace fs = std::filesystem;

struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long ties = 0;
  long n = 0;

  void add(Team predicted, Team actual, bool tie) {
    ++n;
    if (tie) {
      ++ties;
    }
    if (actual == Team::kBlue) {
      predicted == Team::kBlue ? ++tp : ++fn;
    } else {
      predicted == Team::kBlue ? ++fp : ++tn;
    }
  }

  DiscernmentMetrics finish() const {
    DiscernmentMetrics m;
    m.tie_count = ties;
    m.n_matches = n;
    if (n > 0) {
      m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
    }
    if (tp + fp > 0) {
      m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn > 0) {
      m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    if (m.precision + m.recall > 0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
  }
};

std::optional<Lane> lane_of(const MatchSample& sample, int player) {
  const auto& seq = sample.sequences[player];
  if (seq.empty()) {
    return std::nullopt;
  }
  for (int l = 0; l < 5; ++l) {
    if (seq[0][feature_slot::kTop + l] == 1.0) {
      return static_cast<Lane>(l);
    }
  }
  return std::nullopt;
}

std::array<double, kPlayersPerMatch> baseline_values(const MatchSample& sample,
                                                     BaselineMetric metric) {
  std::array<double, kPlayersPerMatch> values{};
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    const PlayerStats& st = sample.baselines[p];
    switch (metric) {
      case BaselineMetric::kKda:
        values[p] = st.kda();
        break;
      case BaselineMetric::kGold:
        values[p] = static_cast<double>(st.gold);
        break;
      case BaselineMetric::kCreep:
        values[p] = static_cast<double>(st.creep);
        break;
    }
  }
  return values;
}

std::array<int, kPlayersPerMatch> metric_ranks(const MatchSample& sample, RankMetric metric) {
  switch (metric) {
    case RankMetric::kKda:
      return rank_players(baseline_values(sample, BaselineMetric::kKda));
    case RankMetric::kGold:
      return rank_players(baseline_values(sample, BaselineMetric::kGold));
    case RankMetric::kCreep:
      return rank_players(baseline_values(sample, BaselineMetric::kCreep));
    case RankMetric::kAvgRank:
      break;
  }
  const auto rk = metric_ranks(sample, RankMetric::kKda);
  const auto rg = metric_ranks(sample, RankMetric::kGold);
  const auto rc = metric_ranks(sample, RankMetric::kCreep);
  std::array<double, kPlayersPerMatch> negated_avg{};
  for (int p = 0; p < kPlayersPerMatch; ++p) {
    negated_avg[p] = -(rk[p] + rg[p] + rc[p]) / 3.0;
  }
  return rank_players(negated_avg);
}

void check_aligned(const std::vector<MatchSample>& data, const std::vector<ScoreReport>& reports) {
  if (data.size() != reports.size()) {
    throw ValidationError("score reports do not align with the dataset");
  }
}

std::vector<double> midranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) {
      ranks[idx[k]] = avg;
    }
    i = j + 1;
  }
  return ranks;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  return out;
}

constexpr RankMetric kAllRankMetrics[] = {RankMetric::kKda, RankMetric::kGold, RankMetric::kCreep,
                                          RankMetric::kAvgRank};

}  // namespace

std::string to_string(BaselineMetric m) {
  switch (m) {
    case BaselineMetric::kKda: return "kda";
    case BaselineMetric::kGold: return "gold";
    case BaselineMetric::kCreep: return "creep";
  }
  return "?";
}

std::string to_string(RankMetric m) {
  switch (m) {
    case RankMetric::kKda: return "kda";
    case RankMetric::kGold: return "gold";
    case RankMetric::kCreep: return "creep";
    case RankMetric::kAvgRank: return "avgrank";
  }
  return "?";
}

std::vector<ScoreReport> score_dataset(const Ensemble& ens, const std::vector<MatchSample>& data) {
  std::vector<ScoreReport> reports;
  reports.reserve(data.size());
  for (const MatchSample& sample : data) {
    std::optional<Team> known_outcome;
    if (ens.config.h0 == InitialState::kOutcomeEncoded) {
      known_outcome = sample.winner;
    }
    reports.push_back(score_match(ens, sample, known_outcome));
  }
  return reports;
}

DiscernmentMetrics discernment_eval(const std::vector<MatchSample>& data,
                                    const std::vector<ScoreReport>& reports, DiscernMethod method) {
  check_aligned(data, reports);
  if (data.empty()) {
    throw ValidationError("discernment_eval: empty dataset");
  }
  Confusion conf;
  for (size_t i = 0; i < data.size(); ++i) {
    const Discernment d = discern(reports[i].team_blue, reports[i].team_red, method);
    conf.add(d.predicted, data[i].winner, d.tie);
  }
  return conf.finish();
}

DiscernmentMetrics discernment_eval(const Ensemble& ens, const std::vector<MatchSample>& data) {
  return discernment_eval(data, score_dataset(ens, data), ens.config.method());
}

DiscernmentMetrics baseline_eval(const std::vector<MatchSample>& data, BaselineMetric metric) {
  Confusion conf;
  for (const MatchSample& sample : data) {
    const auto values = baseline_values(sample, metric);
    double blue = 0.0;
    double red = 0.0;
    for (int p = 0; p < kPlayersPerMatch; ++p) {
      (team_of_participant(p + 1) == Team::kBlue ? blue : red) += values[p];
    }
    const Discernment d = discern(blue, red, DiscernMethod::kDeterministic);
    conf.add(d.predicted, sample.winner, d.tie);
  }
  return conf.finish();
}

std::array<int, kPlayersPerMatch> rank_players(const std::array<double, kPlayersPerMatch>& values) {
  std::array<int, kPlayersPerMatch> order{};
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (values[a] != values[b]) {
      return values[a] > values[b];
    }
    return a < b;
  });
  std::array<int, kPlayersPerMatch> ranks{};
  for (int pos = 0; pos < kPlayersPerMatch; ++pos) {
    ranks[order[pos]] = pos + 1;
  }
  return ranks;
}

RankingComparison ranking_comparison(const std::vector<MatchSample>& data,
                                     const std::vector<ScoreReport>& reports, RankMetric metric) {
  check_aligned(data, reports);
  RankingComparison cmp;
  cmp.n_matches = static_cast<long>(data.size());
  long long n = 0, sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    const auto mranks = metric_ranks(data[i], metric);
    const auto sranks = rank_players(reports[i].player_totals);
    for (int p = 0; p < kPlayersPerMatch; ++p) {
      const int x = mranks[p];
      const int y = sranks[p];
      ++cmp.counts[x - 1][y - 1];
      ++n;
      sx += x;
      sy += y;
      sxy += static_cast<long long>(x) * y;
      sxx += static_cast<long long>(x) * x;
      syy += static_cast<long long>(y) * y;
    }
  }
  // Pearson on pooled rank pairs; all sums are integer-exact in doubles.
  const double num = static_cast<double>(n) * static_cast<double>(sxy) -
                     static_cast<double>(sx) * static_cast<double>(sy);
  const double dx = static_cast<double>(n) * static_cast<double>(sxx) -
                    static_cast<double>(sx) * static_cast<double>(sx);
  const double dy = static_cast<double>(n) * static_cast<double>(syy) -
                    static_cast<double>(sy) * static_cast<double>(sy);
  if (dx > 0 && dy > 0) {
    cmp.spearman = num / (dx == dy ? dx : std::sqrt(dx * dy));
  }
  return cmp;
}

RankingComparison ranking_comparison(const Ensemble& ens, const std::vector<MatchSample>& data,
                                     RankMetric metric) {
  return ranking_comparison(data, score_dataset(ens, data), metric);
}

MisestimateReport misestimates(const std::vector<MatchSample>& data,
                               const std::vector<ScoreReport>& reports, RankMetric metric,
                               int threshold) {
  check_aligned(data, reports);
  MisestimateReport rep;
  rep.threshold = threshold;
  for (size_t i = 0; i < data.size(); ++i) {
    const auto mranks = metric_ranks(data[i], metric);
    const auto sranks = rank_players(reports[i].player_totals);
    for (int p = 0; p < kPlayersPerMatch; ++p) {
      const int diff = mranks[p] - sranks[p];
      if (diff <= threshold && -diff <= threshold) {
        continue;
      }
      const std::optional<Lane> lane = lane_of(data[i], p);
      if (!lane.has_value()) {
        continue;
      }
      const int li = static_cast<int>(*lane);
      if (diff > threshold) {
        ++rep.under[li];
      } else {
        ++rep.over[li];
      }
    }
  }
  return rep;
}

MisestimateReport misestimates(const Ensemble& ens, const std::vector<MatchSample>& data,
                               RankMetric metric, int threshold) {
  return misestimates(data, score_dataset(ens, data), metric, threshold);
}

PcaStudy pca_study(const std::vector<MatchSample>& data, const std::vector<ScoreReport>& reports) {
  check_aligned(data, reports);
  long n = 0;
  Vector sum = Vector::Zero(kFeatureDim);
  for (const MatchSample& sample : data) {
    for (const auto& seq : sample.sequences) {
      for (const ActionVector& v : seq) {
        sum += v;
        ++n;
      }
    }
  }
  if (n < 2) {
    throw ValidationError("pca_study: need at least 2 actions");
  }

  PcaStudy study;
  study.mean = sum / static_cast<double>(n);

  Matrix cov = Matrix::Zero(kFeatureDim, kFeatureDim);
  for (const MatchSample& sample : data) {
    for (const auto& seq : sample.sequences) {
      for (const ActionVector& v : seq) {
        const Vector d = v - study.mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(d, 1.0);
      }
    }
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  Vector comp;
  if (cov.cwiseAbs().maxCoeff() < 1e-24) {
    comp = Vector::Unit(kFeatureDim, 0);
  } else {
    comp = Vector::Constant(kFeatureDim, 1.0 / std::sqrt(static_cast<double>(kFeatureDim)));
    for (int iter = 0; iter < 10000; ++iter) {
      Vector next = cov * comp;
      const double norm = next.norm();
      if (norm < 1e-300) {
        comp = Vector::Unit(kFeatureDim, 0);
        break;
      }
      next /= norm;
      const double delta = (next - comp).norm();
      comp = std::move(next);
      if (delta < 1e-10) {
        break;
      }
    }
    Eigen::Index top = 0;
    comp.cwiseAbs().maxCoeff(&top);
    if (comp(top) < 0) {
      comp = -comp;
    }
  }
  study.component = comp;

  study.points.reserve(static_cast<size_t>(n));
  for (size_t i = 0; i < data.size(); ++i) {
    const MatchSample& sample = data[i];
    for (int p = 0; p < kPlayersPerMatch; ++p) {
      const bool winner = team_of_participant(p + 1) == sample.winner;
      const auto& seq = sample.sequences[p];
      const auto& scores = reports[i].action_scores[p];
      for (size_t a = 0; a < seq.size(); ++a) {
        PcaStudy::Point pt;
        pt.value = (seq[a] - study.mean).dot(study.component);
        pt.score = scores[a];
        pt.winner = winner;
        study.points.push_back(pt);
      }
    }
  }

  double lo = study.points[0].value;
  double hi = lo;
  for (const auto& pt : study.points) {
    lo = std::min(lo, pt.value);
    hi = std::max(hi, pt.value);
  }
  constexpr int kBins = 50;
  const double span = hi - lo;
  const double width = span / kBins;
  study.bins.resize(kBins);
  std::array<double, kBins> win_sum{};
  std::array<double, kBins> lose_sum{};
  for (int b = 0; b < kBins; ++b) {
    study.bins[b].lo = lo + b * width;
    study.bins[b].hi = lo + (b + 1) * width;
  }
  for (const auto& pt : study.points) {
    int b = 0;
    if (width > 0) {
      b = std::min(kBins - 1, static_cast<int>((pt.value - lo) / width));
    }
    if (pt.winner) {
      win_sum[b] += pt.score;
      ++study.bins[b].n_win;
    } else {
      lose_sum[b] += pt.score;
      ++study.bins[b].n_lose;
    }
  }
  double gap_sum = 0.0;
  long populated = 0;
  for (int b = 0; b < kBins; ++b) {
    PcaStudy::Bin& bin = study.bins[b];
    if (bin.n_win > 0) {
      bin.mean_win = win_sum[b] / static_cast<double>(bin.n_win);
    }
    if (bin.n_lose > 0) {
      bin.mean_lose = lose_sum[b] / static_cast<double>(bin.n_lose);
    }
    if (bin.n_win > 0 && bin.n_lose > 0) {
      gap_sum += std::abs(bin.mean_win - bin.mean_lose);
      ++populated;
    }
  }
  if (populated > 0) {
    study.divergence = gap_sum / static_cast<double>(populated);
  }
  return study;
}

PcaStudy pca_study(const Ensemble& ens, const std::vector<MatchSample>& data) {
  return pca_study(data, score_dataset(ens, data));
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw ValidationError("spearman: length mismatch");
  }
  if (a.size() < 2) {
    throw ValidationError("spearman: need at least 2 pairs");
  }
  const std::vector<double> ra = midranks(a);
  const std::vector<double> rb = midranks(b);
  const double n = static_cast<double>(ra.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0 || sbb <= 0) {
    return 0.0;
  }
  return sab / (saa == sbb ? saa : std::sqrt(saa * sbb));
}

void emit_report(const EvalReport& report, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create " + out_dir + ": " + ec.message());
  }
  const fs::path dir(out_dir);

  {
    std::ofstream out = open_out(dir / "discernment.csv");
    out << "model,accuracy,precision,recall,f1,ties\n";
    for (const auto& [name, m] : report.discernment) {
      out << name << ',' << format_float(m.accuracy) << ',' << format_float(m.precision) << ','
          << format_float(m.recall) << ',' << format_float(m.f1) << ',' << m.tie_count << '\n';
    }
  }

  for (RankMetric metric : kAllRankMetrics) {
    std::ofstream out = open_out(dir / ("heatmap_" + to_string(metric) + ".csv"));
    out << "metric_rank,model_rank,count\n";
    for (const auto& [m, cmp] : report.heatmaps) {
      if (m != metric) {
        continue;
      }
      for (int x = 0; x < kPlayersPerMatch; ++x) {
        for (int y = 0; y < kPlayersPerMatch; ++y) {
          out << (x + 1) << ',' << (y + 1) << ',' << cmp.counts[x][y] << '\n';
        }
      }
    }
  }

  for (RankMetric metric : kAllRankMetrics) {
    std::ofstream out = open_out(dir / ("misestimates_" + to_string(metric) + ".csv"));
    out << "lane,under,over\n";
    for (const auto& [m, rep] : report.misestimate_reports) {
      if (m != metric) {
        continue;
      }
      for (int l = 0; l < 5; ++l) {
        out << to_string(static_cast<Lane>(l)) << ',' << rep.under[l] << ',' << rep.over[l] << '\n';
      }
    }
  }

  {
    std::ofstream out = open_out(dir / "pca_curves.csv");
    out << "bin_low,bin_high,mean_win,mean_lose,n_win,n_lose\n";
    if (report.pca.has_value()) {
      for (const auto& bin : report.pca->bins) {
        out << format_float(bin.lo) << ',' << format_float(bin.hi) << ','
            << format_float(bin.mean_win) << ',' << format_float(bin.mean_lose) << ',' << bin.n_win
            << ',' << bin.n_lose << '\n';
      }
    }
  }

  {
    std::ofstream out = open_out(dir / "summary.txt");
    out << "discernment (positive class: blue wins)\n";
    for (const auto& [name, m] : report.discernment) {
      out << "  " << name << ": accuracy=" << format_float(m.accuracy)
          << " precision=" << format_float(m.precision) << " recall=" << format_float(m.recall)
          << " f1=" << format_float(m.f1) << " ties=" << m.tie_count << " n=" << m.n_matches
          << '\n';
    }
    if (!report.heatmaps.empty()) {
      out << "rank correlation (model score vs metric, pooled)\n";
      for (const auto& [m, cmp] : report.heatmaps) {
        out << "  " << to_string(m) << ": spearman=" << format_float(cmp.spearman)
            << " n_matches=" << cmp.n_matches << '\n';
      }
    }
    if (!report.misestimate_reports.empty()) {
      out << "misestimated players by lane (under / over)\n";
      for (const auto& [m, rep] : report.misestimate_reports) {
        out << "  " << to_string(m) << " (threshold " << rep.threshold << "):";
        for (int l = 0; l < 5; ++l) {
          out << ' ' << to_string(static_cast<Lane>(l)) << '=' << rep.under[l] << '/' << rep.over[l];
        }
        out << '\n';
      }
    }
    if (report.pca.has_value()) {
      out << "feature-component study\n";
      out << "  actions=" << report.pca->points.size()
          << " divergence=" << format_float(report.pca->divergence) << '\n';
    }
  }
}

}  // namespace mobascore
