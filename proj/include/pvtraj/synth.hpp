#pragma once

#include "pvtraj/core.hpp"
#include "pvtraj/data_pipeline.hpp"
#include "pvtraj/random.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace pvtraj {

/// Ground truth for the synthetic generator. Production follows the
/// log-linear model in the actual (not forecast) irradiance with an hourly
/// AR(1) residual, so consecutive lead times have a tridiagonal precision.
struct TruthConfig {
  std::uint64_t seed = 1;
  Date start = Date{std::chrono::year{2011} / 1 / 1};

  // daylight: whole lit hours per day, centred on the solar noon (UTC)
  double mean_day_length = 13.7;
  double day_length_amplitude = 5.0;
  double solar_noon = 11.5;
  double peak_ghi_mean = 500.0;
  double peak_ghi_amplitude = 350.0;

  // multiplicative lognormal cloud factors on the clear-sky curve
  double cloud_sd_daily = 0.35;
  double cloud_sd_hourly = 0.15;

  // forecast error: AR(1) across leads, sd growing linearly with lead
  double forecast_sd = 0.25;
  double forecast_sd_growth = 0.6;
  double forecast_rho = 0.8;
  int members = 3;
  int cells = 8;
  int region_cells = 6;
  double member_sd = 0.05;
  double cell_sd = 0.05;

  // production
  double beta0 = 2.7;
  double beta0_hour_amplitude = 0.15;
  double beta1 = 1.0;
  double beta1_hour_amplitude = 0.05;
  double beta0_drift_amplitude = 0.0;
  double beta0_drift_period_days = 90.0;
  double residual_sd = 0.4;
  double residual_rho = 0.6;

  /// Sets one field from text; throws UsageError naming the key.
  void set(std::string_view key, std::string_view value);
  void validate() const;
};

/// Lit hours of day (UTC hour of the interval start) for a date.
std::vector<int> daylight_hours(Date date, const TruthConfig& truth);

/// Clear-sky interval-mean GHI (W/m^2) for the hour [hour, hour+1) of `date`.
double clear_sky(Date date, int hour, const TruthConfig& truth);

double true_beta0(int hour_of_day, const TruthConfig& truth);
double true_beta1(int hour_of_day, const TruthConfig& truth);
/// Slow drift added to every intercept on a given date.
double beta0_drift(Date date, const TruthConfig& truth);

/// Precision of the residuals at the given (increasing) lead times: the
/// stationary AR(1) precision on runs of consecutive hours, block diagonal
/// across gaps.
MatrixXd truth_precision(std::span<const int> lead_times, const TruthConfig& truth);

struct SyntheticWeather {
  HourStamp start;             ///< first hour stamp; values[i] covers (start+i-1h, start+i]
  std::vector<double> actual;  ///< hourly interval-mean GHI driving production
  std::vector<Date> issues;
  std::vector<VectorXd> forecast;  ///< per issue, 72 hourly forecast GHI values (regional)
};

/// Hourly actual GHI over days+4 days from `truth.start`, plus one 00 UTC
/// forecast per day for the `days` issue dates starting the day after.
SyntheticWeather simulate_ghi(int days, const TruthConfig& truth, Rng& rng);

/// Production at hour stamps aligned with `ghi`; zero wherever ghi is zero.
ProductionSeries simulate_production(std::span<const double> ghi, HourStamp start, const TruthConfig& truth, Rng& rng);

/// Expands regional hourly forecasts into member/cell accumulated fields.
std::vector<GridForecastSeries> expand_forecasts(const SyntheticWeather& weather, const TruthConfig& truth, Rng& rng);

CellMask synthetic_mask(const TruthConfig& truth);

/// Writes forecasts.csv, production.csv, mask.csv and truth.csv.
void write_synthetic_dataset(const std::filesystem::path& dir, int days, const TruthConfig& truth);

}  // namespace pvtraj
