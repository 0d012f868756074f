#pragma once

#include "pvtraj/bayes_engine.hpp"
#include "pvtraj/copula.hpp"
#include "pvtraj/csv_io.hpp"
#include "pvtraj/verification.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pvtraj {

/// Declarative run settings; parsed from key=value lines, overridable per key.
struct RunConfig {
  ModelVariant variant = ModelVariant::full();
  int window_days = 20;
  int copula_window_days = 100;
  int gibbs_iters = 2000;
  int gibbs_burn = 500;
  int samples = 1000;
  bool copula = false;
  CopulaStructure copula_structure = CopulaStructure::full;
  std::uint64_t seed = 1;
  std::filesystem::path data_dir = ".";
  std::filesystem::path out_dir = "out";
  int threads = 1;
  double precision_prior_df = 3.0;
  double precision_prior_scale = 1.0;
  int min_training_rows = 3;
  std::vector<int> window_sweep;

  /// Throws UsageError naming the key on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Throws UsageError naming the first violated field.
  void validate() const;

  static RunConfig from_file(const std::filesystem::path& path);
  void merge_file(const std::filesystem::path& path);
  std::string to_text() const;

  EngineConfig engine() const;
  /// Report label, e.g. "indep" or "indep-copula".
  std::string model_label() const;
};

/// Quantized trajectories for one evaluated issue date. `coupled` is empty
/// when the copula is off.
struct DateResult {
  Date date;
  MatrixXd univariate;
  MatrixXd coupled;
  VectorXd observed;
  /// Copula correlation used for this date; empty when the copula is off.
  MatrixXd correlation;
  int modelled_leads = 0;
  int jitter_events = 0;
  double max_split_rhat = kMissing<double>;

  const MatrixXd& final_paths() const { return coupled.size() ? coupled : univariate; }
};

struct RunSummary {
  int evaluated = 0;
  int archive_dates = 0;
  int jitter_events = 0;
  double max_split_rhat = 1.0;
  /// Normal scores of every verified date, archive candidates included.
  std::map<Date, VectorXd> normal_scores;
};

/// Output precision (MW decimals) of trajectories; scoring uses the
/// quantized values so that re-scoring from files reproduces the report.
inline constexpr int kTrajectoryDecimals = 4;

/// Runs the fit / predict / couple loop over [from, to] in date order.
/// With the copula on, earlier dates are forecast first to fill the archive
/// of fully realized normal scores (dates at least four days before each
/// target).
RunSummary run_forecast(const RunConfig& config, const CaseMap& cases, Date from, Date to,
                        const std::function<void(const DateResult&)>& sink);

/// Adds one date's marginal, path and band-depth scores. Leads whose
/// samples are all equal are deterministic and only enter path statistics.
void score_date(ScoreAccumulator& acc, const MatrixXd& paths, const Eigen::Ref<const VectorXd>& observed, Rng& rng);

/// Scoring stream for a date; `label` separates final and univariate scores.
Rng verify_stream(std::uint64_t seed, std::string_view label, Date date);

/// Mean CRPS over leads 1..24 for each window length.
std::vector<std::pair<int, double>> window_sweep(const RunConfig& config, const CaseMap& cases, Date from, Date to,
                                                 const std::vector<int>& windows);

/// `forecast` subcommand: writes trajectories, observations, reports and
/// the resolved config into config.out_dir.
RunSummary forecast_command(const RunConfig& config, Date from, Date to);

/// `report` subcommand: re-scores a forecast directory and writes report.csv
/// plus histogram CSV/SVG files into `out_dir`.
void report_command(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir);

std::map<Date, MatrixXd> read_trajectories_csv(const std::filesystem::path& path);
std::map<Date, VectorXd> read_observations_csv(const std::filesystem::path& path);

void write_lead_report_csv(const std::filesystem::path& path, const std::vector<std::pair<std::string, const ScoreAccumulator*>>& accs);

}  // namespace pvtraj
