#include "pvtraj/synth.hpp"

#include "pvtraj/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace pvtraj {
namespace {

double seasonal_phase(Date date) {
  return std::sin(2.0 * std::numbers::pi * (day_of_year(date) - 80.0) / 365.25);
}

double parse_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw UsageError("truth field '" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
  return v;
}

}  // namespace

void TruthConfig::set(std::string_view key, std::string_view value) {
  const std::map<std::string_view, double*> reals{
      {"mean_day_length", &mean_day_length},
      {"day_length_amplitude", &day_length_amplitude},
      {"solar_noon", &solar_noon},
      {"peak_ghi_mean", &peak_ghi_mean},
      {"peak_ghi_amplitude", &peak_ghi_amplitude},
      {"cloud_sd_daily", &cloud_sd_daily},
      {"cloud_sd_hourly", &cloud_sd_hourly},
      {"forecast_sd", &forecast_sd},
      {"forecast_sd_growth", &forecast_sd_growth},
      {"forecast_rho", &forecast_rho},
      {"member_sd", &member_sd},
      {"cell_sd", &cell_sd},
      {"beta0", &beta0},
      {"beta0_hour_amplitude", &beta0_hour_amplitude},
      {"beta1", &beta1},
      {"beta1_hour_amplitude", &beta1_hour_amplitude},
      {"beta0_drift_amplitude", &beta0_drift_amplitude},
      {"beta0_drift_period_days", &beta0_drift_period_days},
      {"residual_sd", &residual_sd},
      {"residual_rho", &residual_rho},
  };
  if (auto it = reals.find(key); it != reals.end()) {
    *it->second = parse_double(key, value);
    return;
  }
  const std::map<std::string_view, int*> ints{{"members", &members}, {"cells", &cells}, {"region_cells", &region_cells}};
  if (auto it = ints.find(key); it != ints.end()) {
    const double v = parse_double(key, value);
    if (v != std::floor(v)) throw UsageError("truth field '" + std::string(key) + "' expects an integer");
    *it->second = static_cast<int>(v);
    return;
  }
  if (key == "seed") {
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
    if (ec != std::errc() || ptr != value.data() + value.size()) throw UsageError("truth field 'seed' expects an integer");
    return;
  }
  if (key == "start") {
    start = parse_date(value);
    return;
  }
  throw UsageError("unknown truth field '" + std::string(key) + "'");
}

void TruthConfig::validate() const {
  const auto require = [](bool ok, const char* msg) {
    if (!ok) throw UsageError(msg);
  };
  require(mean_day_length > 0 && mean_day_length < 24, "mean_day_length must lie in (0, 24)");
  require(day_length_amplitude >= 0, "day_length_amplitude must be >= 0");
  require(peak_ghi_mean > peak_ghi_amplitude && peak_ghi_amplitude >= 0, "peak_ghi_mean must exceed peak_ghi_amplitude");
  require(cloud_sd_daily >= 0 && cloud_sd_hourly >= 0, "cloud sds must be >= 0");
  require(forecast_sd >= 0 && forecast_sd_growth >= 0, "forecast_sd and forecast_sd_growth must be >= 0");
  require(std::abs(forecast_rho) < 1, "forecast_rho must lie in (-1, 1)");
  require(members >= 1, "members must be >= 1");
  require(region_cells >= 1 && cells >= region_cells, "need cells >= region_cells >= 1");
  require(member_sd >= 0 && cell_sd >= 0, "member_sd and cell_sd must be >= 0");
  require(residual_sd >= 0, "residual_sd must be >= 0");
  require(std::abs(residual_rho) < 1, "residual_rho must lie in (-1, 1)");
  require(beta0_drift_period_days > 0, "beta0_drift_period_days must be positive");
}

std::vector<int> daylight_hours(Date date, const TruthConfig& truth) {
  const long length = std::clamp<long>(std::lround(truth.mean_day_length + truth.day_length_amplitude * seasonal_phase(date)),
                                       1L, 23L);
  const long sunrise = std::clamp<long>(std::lround(truth.solar_noon - 0.5 * static_cast<double>(length)), 0L, 24L - length);
  std::vector<int> hours;
  for (long h = sunrise; h < sunrise + length; ++h) hours.push_back(static_cast<int>(h));
  return hours;
}

double clear_sky(Date date, int hour, const TruthConfig& truth) {
  const std::vector<int> lit = daylight_hours(date, truth);
  if (hour < lit.front() || hour > lit.back()) return 0.0;
  const double peak = truth.peak_ghi_mean + truth.peak_ghi_amplitude * seasonal_phase(date);
  const double phase = (hour - lit.front() + 0.5) / static_cast<double>(lit.size());
  return peak * std::pow(std::sin(std::numbers::pi * phase), 1.2);
}

double true_beta0(int hour_of_day, const TruthConfig& truth) {
  return truth.beta0 + truth.beta0_hour_amplitude * std::cos(2.0 * std::numbers::pi * (hour_of_day + 0.5 - 12.0) / 24.0);
}

double true_beta1(int hour_of_day, const TruthConfig& truth) {
  return truth.beta1 - truth.beta1_hour_amplitude * std::abs(hour_of_day + 0.5 - 12.0) / 12.0;
}

double beta0_drift(Date date, const TruthConfig& truth) {
  const double t = static_cast<double>((date - truth.start).count());
  return truth.beta0_drift_amplitude * std::sin(2.0 * std::numbers::pi * t / truth.beta0_drift_period_days);
}

MatrixXd truth_precision(std::span<const int> lead_times, const TruthConfig& truth) {
  const Index n = static_cast<Index>(lead_times.size());
  const double rho = truth.residual_rho, var = truth.residual_sd * truth.residual_sd;
  if (!(var > 0.0)) throw InputError("truth_precision: residual_sd must be positive");
  MatrixXd k = MatrixXd::Identity(n, n) / var;
  const double c = 1.0 / (var * (1.0 - rho * rho));
  Index start = 0;
  while (start < n) {
    Index end = start;
    while (end + 1 < n && lead_times[static_cast<std::size_t>(end + 1)] - lead_times[static_cast<std::size_t>(end)] == 1)
      ++end;
    for (Index i = start; i <= end && end > start; ++i) {
      k(i, i) = (i == start || i == end) ? c : c * (1.0 + rho * rho);
      if (i < end) k(i, i + 1) = k(i + 1, i) = -c * rho;
    }
    start = end + 1;
  }
  return k;
}

SyntheticWeather simulate_ghi(int days, const TruthConfig& truth, Rng& rng) {
  if (days < 1) throw UsageError("days must be >= 1");
  truth.validate();
  SyntheticWeather w;
  w.start = issue_time(truth.start) + std::chrono::hours(1);
  const int total_days = days + 4;
  w.actual.assign(static_cast<std::size_t>(total_days * kHoursPerDay), 0.0);
  const double sd_d = truth.cloud_sd_daily, sd_h = truth.cloud_sd_hourly;
  for (int d = 0; d < total_days; ++d) {
    const Date date = truth.start + std::chrono::days(d);
    const double daily = std::exp(sd_d * rng.normal() - 0.5 * sd_d * sd_d);
    for (int h = 0; h < kHoursPerDay; ++h) {
      const double hourly = std::exp(sd_h * rng.normal() - 0.5 * sd_h * sd_h);
      w.actual[static_cast<std::size_t>(d * kHoursPerDay + h)] = clear_sky(date, h, truth) * daily * hourly;
    }
  }

  for (int k = 1; k <= days; ++k) {
    const Date issue = truth.start + std::chrono::days(k);
    Rng frng = Rng::substream(truth.seed, "forecast-error", k);
    VectorXd fc(kHorizon);
    double eta = 0.0, prev_sd = 0.0;
    const double rho = truth.forecast_rho;
    for (int lead = 1; lead <= kHorizon; ++lead) {
      const double sd = truth.forecast_sd * (1.0 + truth.forecast_sd_growth * (lead - 1) / (kHorizon - 1.0));
      const double xi = frng.normal();
      eta = lead == 1 ? sd * xi : (prev_sd > 0 ? sd / prev_sd : 0.0) * rho * eta + sd * std::sqrt(1.0 - rho * rho) * xi;
      prev_sd = sd;
      fc(lead - 1) = w.actual[static_cast<std::size_t>(k * kHoursPerDay + lead - 1)] * std::exp(eta);
    }
    w.issues.push_back(issue);
    w.forecast.push_back(std::move(fc));
  }
  return w;
}

ProductionSeries simulate_production(std::span<const double> ghi, HourStamp start, const TruthConfig& truth, Rng& rng) {
  ProductionSeries p;
  p.start = start;
  p.values.assign(ghi.size(), 0.0);
  const double rho = truth.residual_rho, sd = truth.residual_sd;
  double eps = sd * rng.normal();
  for (std::size_t i = 0; i < ghi.size(); ++i) {
    if (i > 0) eps = rho * eps + sd * std::sqrt(1.0 - rho * rho) * rng.normal();
    if (!(ghi[i] > 0.0)) continue;
    const HourStamp interval_start = start + std::chrono::hours(static_cast<long>(i)) - std::chrono::hours(1);
    const int h = hour_of_day(interval_start);
    const double b0 = true_beta0(h, truth) + beta0_drift(date_of(interval_start), truth);
    p.values[i] = std::exp(b0 + true_beta1(h, truth) * std::log(ghi[i]) + eps);
  }
  return p;
}

std::vector<GridForecastSeries> expand_forecasts(const SyntheticWeather& weather, const TruthConfig& truth, Rng& rng) {
  std::vector<GridForecastSeries> out;
  const int n_steps = kHorizon / kNativeStep;
  for (std::size_t k = 0; k < weather.issues.size(); ++k) {
    GridForecastSeries s;
    s.issue_time = issue_time(weather.issues[k]);
    for (int st = 1; st <= n_steps; ++st) s.steps.push_back(st * kNativeStep);
    VectorXd cell_factor(truth.cells);
    for (int c = 0; c < truth.cells; ++c) {
      cell_factor(c) = std::exp(truth.cell_sd * rng.normal() - 0.5 * truth.cell_sd * truth.cell_sd);
      if (c >= truth.region_cells) cell_factor(c) *= 1.5;  // outside the region
    }
    for (int m = 0; m < truth.members; ++m) {
      MatrixXd block(truth.cells, n_steps);
      for (int c = 0; c < truth.cells; ++c) {
        double acc = 0.0;
        for (int lead = 1; lead <= kHorizon; ++lead) {
          const double noise = std::exp(truth.member_sd * rng.normal() - 0.5 * truth.member_sd * truth.member_sd);
          acc += weather.forecast[k](lead - 1) * cell_factor(c) * noise;
          if (lead % kNativeStep == 0) block(c, lead / kNativeStep - 1) = acc;
        }
      }
      s.members.push_back(std::move(block));
    }
    out.push_back(std::move(s));
  }
  return out;
}

CellMask synthetic_mask(const TruthConfig& truth) {
  CellMask mask(truth.cells);
  for (int c = 0; c < truth.cells; ++c) mask(c) = c < truth.region_cells;
  return mask;
}

void write_synthetic_dataset(const std::filesystem::path& dir, int days, const TruthConfig& truth) {
  Rng weather_rng = Rng::substream(truth.seed, "weather");
  const SyntheticWeather weather = simulate_ghi(days, truth, weather_rng);
  Rng production_rng = Rng::substream(truth.seed, "production");
  const ProductionSeries production = simulate_production(weather.actual, weather.start, truth, production_rng);
  Rng grid_rng = Rng::substream(truth.seed, "grid");
  const std::vector<GridForecastSeries> grids = expand_forecasts(weather, truth, grid_rng);

  std::filesystem::create_directories(dir);
  write_forecasts_csv(dir / "forecasts.csv", grids, {});
  write_production_csv(dir / "production.csv", production);
  write_mask_csv(dir / "mask.csv", synthetic_mask(truth));

  std::ofstream out = open_output(dir / "truth.csv");
  out << "parameter,lead_h,value\n";
  for (int lead = 1; lead <= kHorizon; ++lead)
    out << "beta0," << lead << ',' << format_fixed(true_beta0((lead - 1) % kHoursPerDay, truth), 6) << '\n';
  for (int lead = 1; lead <= kHorizon; ++lead)
    out << "beta1," << lead << ',' << format_fixed(true_beta1((lead - 1) % kHoursPerDay, truth), 6) << '\n';
  out << "residual_sd,0," << format_fixed(truth.residual_sd, 6) << '\n';
  out << "residual_rho,0," << format_fixed(truth.residual_rho, 6) << '\n';
  out << "forecast_sd,0," << format_fixed(truth.forecast_sd, 6) << '\n';
  out << "forecast_rho,0," << format_fixed(truth.forecast_rho, 6) << '\n';
  out << "beta0_drift_amplitude,0," << format_fixed(truth.beta0_drift_amplitude, 6) << '\n';
  if (!out) throw InputError("failed writing truth.csv");
}

}  // namespace pvtraj
