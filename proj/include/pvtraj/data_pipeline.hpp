#pragma once

#include "pvtraj/core.hpp"
#include "pvtraj/timeutil.hpp"

#include <map>
#include <vector>

namespace pvtraj {

using CellMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Raw NWP covariate for one initialization: accumulated GHI (W h / m^2) per
/// ensemble member, grid cell and native lead step.
struct GridForecastSeries {
  HourStamp issue_time;
  std::vector<int> steps;        ///< lead hours, ascending
  std::vector<MatrixXd> members; ///< one (cells x steps) block per member

  Index cells() const { return members.empty() ? 0 : members.front().rows(); }
};

/// Hourly regional production in MW. Hours without data hold NaN.
struct ProductionSeries {
  HourStamp start;
  std::vector<double> values;

  HourStamp end() const { return start + std::chrono::hours(static_cast<long>(values.size())); }
  /// NaN when `t` is outside the series or missing.
  double at(HourStamp t) const;
};

/// Covariates, observations and lagged observations for one 00 UTC issue.
struct ForecastCase {
  Date issue_date;
  VectorXd x;      ///< hourly interval-mean GHI, lead 1..72 (index lead-1)
  VectorXd y_obs;  ///< production valid at issue+lead; NaN when unknown
  VectorXd y_lag;  ///< latest observed production at the lead's hour of day; NaN if history is short

  bool has_lag() const { return y_lag.size() == kHorizon && !y_lag.hasNaN(); }
};

/// Lead times (1-based) split into modelled and deterministic sets.
struct LeadTimePartition {
  std::vector<int> t_plus;
  std::vector<int> t_zero;
};

using CaseMap = std::map<Date, ForecastCase>;

/// Pointwise mean over members; result is (cells x steps).
MatrixXd ensemble_mean(const GridForecastSeries& series);

/// Mean over the cells flagged in `mask`.
double spatial_average(const Eigen::Ref<const VectorXd>& cell_values, const CellMask& mask);

/// Turns an accumulated series sampled every `step_hours` (accumulated[k] is
/// the total up to lead (k+1)*step_hours) into 72 hourly interval means.
/// The block-mean rates are interpolated with a monotone piecewise cubic at
/// hourly midpoints, clamped at zero and rescaled so each native block keeps
/// its accumulated energy.
VectorXd interpolate_hourly(const Eigen::Ref<const VectorXd>& accumulated, int step_hours = kNativeStep);

/// Ensemble mean, hourly interpolation per cell, then regional average.
VectorXd preprocess_forecast(const GridForecastSeries& series, const CellMask& mask);

/// Most recent observation strictly before `issue` whose hour of day matches
/// each lead's valid hour (UTC). Looks back at most `max_days_back` days.
VectorXd latest_observed_lag(const ProductionSeries& production, HourStamp issue, int max_days_back = 7);

LeadTimePartition partition_lead_times(const ForecastCase& fc);

/// The `window_days` cases immediately preceding `target`, oldest first.
/// Observations that were not yet realized at the target's issue time are
/// blanked to NaN.
std::vector<ForecastCase> assemble_window(const CaseMap& cases, Date target, int window_days);

/// Builds one case per 00 UTC issue in `forecasts`.
CaseMap build_cases(const std::map<HourStamp, GridForecastSeries>& forecasts, const ProductionSeries& production,
                    const CellMask& mask);

/// True if production at issue(case_date)+lead is known before issue(target).
inline bool realized_before(Date case_date, int lead_h, Date target) {
  return issue_time(case_date) + std::chrono::hours(lead_h) < issue_time(target);
}

}  // namespace pvtraj
