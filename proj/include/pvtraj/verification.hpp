#pragma once

#include "pvtraj/core.hpp"
#include "pvtraj/random.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pvtraj {

/// Sample CRPS, E|X - y| - E|X - X'| / 2, with the pairwise mean taken over
/// the m(m - 1) ordered pairs of distinct members.
double crps_sample(std::span<const double> ensemble, double obs);
double crps_sample(const Eigen::Ref<const VectorXd>& ensemble, double obs);

/// Closed-form CRPS of N(mu, sigma^2).
double crps_gaussian(double mu, double sigma, double obs);

/// Linear-interpolation sample quantile (type 7).
double sample_quantile(std::span<const double> sorted, double p);

struct PointScores {
  double mae = 0.0;   ///< of the predictive median
  double rmse = 0.0;  ///< of the predictive mean
};

PointScores point_scores(const std::vector<VectorXd>& ensembles, const Eigen::Ref<const VectorXd>& observations);

/// Randomized PIT: uniform between the left and right limits of the
/// empirical CDF at `obs`.
double pit(const Eigen::Ref<const VectorXd>& ensemble, double obs, Rng& rng);

struct IntervalResult {
  double width = 0.0;
  bool covered = false;
};

/// Equal-tailed central interval from type-7 empirical quantiles.
IntervalResult interval_score(const Eigen::Ref<const VectorXd>& ensemble, double obs, double level = 0.8);

/// Modified band depth of each row of `curves` against all pairs of rows.
VectorXd modified_band_depth(const MatrixXd& curves);

/// Rank (1..m+1) of the observed curve's modified band depth among the pooled
/// curves, ties broken uniformly at random.
int band_depth_rank(const Eigen::Ref<const VectorXd>& obs_curve, const MatrixXd& ensemble_curves, Rng& rng);

enum class PathStatistic { sum, max };

std::string_view to_string(PathStatistic s);
double path_statistic(const Eigen::Ref<const RowVector<double>>& path, PathStatistic s);

struct AggregateScores {
  double mae = 0.0;
  double rmse = 0.0;
  double crps = 0.0;
};

/// Applies the statistic to each sampled path (rows of each trajectory
/// matrix) and scores the scalar ensemble against the statistic of the
/// realized path, averaging over cases.
AggregateScores aggregate_scores(const std::vector<MatrixXd>& trajectories, const std::vector<VectorXd>& observations,
                                 PathStatistic statistic);

struct HistogramBins {
  VectorXd edges;
  std::vector<long> counts;

  long total() const;
  double reference() const { return counts.empty() ? 0.0 : static_cast<double>(total()) / counts.size(); }
  /// Pearson statistic against the flat histogram.
  double chi_square() const;
};

/// Equal-width bins on [lo, hi]; the right edge is closed.
HistogramBins make_histogram(std::span<const double> values, int n_bins, double lo = 0.0, double hi = 1.0);

void write_histogram_csv(const std::filesystem::path& path, const HistogramBins& h);
void write_histogram_svg(const std::filesystem::path& path, const HistogramBins& h, std::string_view title);

inline constexpr std::array<std::string_view, 3> kDayBlocks{"day1", "day2", "day3"};

/// Running sums of per-lead marginal scores plus joint diagnostics.
class ScoreAccumulator {
 public:
  ScoreAccumulator();

  /// Scores one lead; `probabilistic` leads also feed PIT, interval and CRPS.
  void add_lead(int lead_h, const Eigen::Ref<const VectorXd>& ensemble, double obs, Rng& rng);
  void add_path(PathStatistic s, const Eigen::Ref<const VectorXd>& statistic_ensemble, double obs_statistic, Rng& rng);
  void add_band_depth_rank(int rank, int members);

  struct LeadSums {
    long n = 0;
    double crps = 0, abs_err = 0, sq_err = 0, width = 0, covered = 0;
  };

  const std::array<LeadSums, kHorizon>& leads() const { return leads_; }
  const std::vector<double>& pit_values(int day_block) const { return pit_[static_cast<std::size_t>(day_block)]; }
  const std::vector<double>& path_pits(PathStatistic s) const { return path_pit_[static_cast<std::size_t>(s)]; }
  const std::vector<double>& band_depth_positions() const { return band_depth_; }
  const LeadSums& path_sums(PathStatistic s) const { return path_[static_cast<std::size_t>(s)]; }

 private:
  std::array<LeadSums, kHorizon> leads_{};
  std::array<std::vector<double>, 3> pit_;
  std::array<LeadSums, 2> path_{};
  std::array<std::vector<double>, 2> path_pit_;
  std::vector<double> band_depth_;
};

struct ReportRow {
  std::string metric;
  std::string block;
  std::string model;
  double value = 0.0;
};

/// Day-block marginal metrics plus sum/max path metrics.
std::vector<ReportRow> summarize(const ScoreAccumulator& acc, std::string_view model);

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

}  // namespace pvtraj
