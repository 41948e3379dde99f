#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mobascore/model.hpp"

namespace mobascore {

struct DiscernmentMetrics {
  double accuracy = 0.0;
  double precision = 0.0;  // positive class: blue wins
  double recall = 0.0;
  double f1 = 0.0;
  long tie_count = 0;
  long n_matches = 0;
};

enum class BaselineMetric { kKda, kGold, kCreep };
enum class RankMetric { kKda, kGold, kCreep, kAvgRank };

std::string to_string(BaselineMetric m);
std::string to_string(RankMetric m);

// Scores every match once so the analyses below can share the work.
// Outcome-encoded variants are fed the true winner (label leakage by design;
// reported as such).
std::vector<ScoreReport> score_dataset(const Ensemble& ens, const std::vector<MatchSample>& data);

DiscernmentMetrics discernment_eval(const Ensemble& ens, const std::vector<MatchSample>& data);
DiscernmentMetrics discernment_eval(const std::vector<MatchSample>& data,
                                    const std::vector<ScoreReport>& reports, DiscernMethod method);

// Predicts the winner from the larger team sum of a per-player aggregate.
DiscernmentMetrics baseline_eval(const std::vector<MatchSample>& data, BaselineMetric metric);

// Rank 1 = highest value; equal values are ordered by participant id, so the
// result is always a permutation of 1..10.
std::array<int, kPlayersPerMatch> rank_players(const std::array<double, kPlayersPerMatch>& values);

struct RankingComparison {
  // counts[metric_rank - 1][model_rank - 1], accumulated over all players of
  // all matches.
  std::array<std::array<long, kPlayersPerMatch>, kPlayersPerMatch> counts{};
  double spearman = 0.0;
  long n_matches = 0;
};

RankingComparison ranking_comparison(const std::vector<MatchSample>& data,
                                     const std::vector<ScoreReport>& reports, RankMetric metric);
RankingComparison ranking_comparison(const Ensemble& ens, const std::vector<MatchSample>& data,
                                     RankMetric metric);

struct MisestimateReport {
  // Indexed by Lane. A player counts as underestimated when the model ranks
  // them more than `threshold` places better than the metric does, and
  // overestimated in the opposite case.
  std::array<long, 5> under{};
  std::array<long, 5> over{};
  int threshold = 5;
};

MisestimateReport misestimates(const std::vector<MatchSample>& data,
                               const std::vector<ScoreReport>& reports, RankMetric metric,
                               int threshold = 5);
MisestimateReport misestimates(const Ensemble& ens, const std::vector<MatchSample>& data,
                               RankMetric metric, int threshold = 5);

struct PcaStudy {
  Vector component;  // unit-norm direction in feature space
  Vector mean;

  struct Point {
    double value = 0.0;  // projection onto the component
    double score = 0.0;
    bool winner = false;
  };
  std::vector<Point> points;

  struct Bin {
    double lo = 0.0;
    double hi = 0.0;
    double mean_win = 0.0;
    double mean_lose = 0.0;
    long n_win = 0;
    long n_lose = 0;
  };
  std::vector<Bin> bins;
  // Mean |mean_win - mean_lose| over bins populated by both sides.
  double divergence = 0.0;
};

PcaStudy pca_study(const std::vector<MatchSample>& data, const std::vector<ScoreReport>& reports);
PcaStudy pca_study(const Ensemble& ens, const std::vector<MatchSample>& data);

// Spearman rank correlation with midranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct EvalReport {
  std::vector<std::pair<std::string, DiscernmentMetrics>> discernment;
  std::vector<std::pair<RankMetric, RankingComparison>> heatmaps;
  std::vector<std::pair<RankMetric, MisestimateReport>> misestimate_reports;
  std::optional<PcaStudy> pca;
};

// Writes discernment.csv, heatmap_<metric>.csv and misestimates_<metric>.csv
// for every RankMetric, pca_curves.csv, and summary.txt into out_dir. Sections
// without data produce header-only files. Output is byte-deterministic.
void emit_report(const EvalReport& report, const std::string& out_dir);

}  // namespace mobascore
