#include "pvtraj/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pvtraj {
namespace {

// Fritsch-Butland derivative estimates for uniformly spaced knots, with the
// three-point one-sided formula at the ends (limited to keep monotonicity).
VectorXd pchip_slopes(const VectorXd& y, double h) {
  const Index n = y.size();
  VectorXd d = VectorXd::Zero(n);
  if (n < 2) return d;
  VectorXd delta = (y.tail(n - 1) - y.head(n - 1)) / h;
  if (n == 2) {
    d.setConstant(delta(0));
    return d;
  }
  for (Index k = 1; k < n - 1; ++k) {
    if (delta(k - 1) * delta(k) > 0.0) d(k) = 2.0 / (1.0 / delta(k - 1) + 1.0 / delta(k));
  }
  auto edge = [](double d0, double d1) {
    double e = (3.0 * d0 - d1) / 2.0;
    if (e * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(e) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return e;
  };
  d(0) = edge(delta(0), delta(1));
  d(n - 1) = edge(delta(n - 2), delta(n - 3));
  return d;
}

double hermite(double y0, double y1, double d0, double d1, double h, double s) {
  const double t = s / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
}

}  // namespace

double ProductionSeries::at(HourStamp t) const {
  const auto offset = (t - start).count();
  if (offset < 0 || offset >= static_cast<long>(values.size())) return kMissing<double>;
  return values[static_cast<std::size_t>(offset)];
}

MatrixXd ensemble_mean(const GridForecastSeries& series) {
  if (series.members.empty()) throw InputError("ensemble_mean: forecast has no members");
  MatrixXd sum = series.members.front();
  for (std::size_t m = 1; m < series.members.size(); ++m) {
    if (series.members[m].rows() != sum.rows() || series.members[m].cols() != sum.cols())
      throw InputError("ensemble_mean: member grids differ in shape");
    sum += series.members[m];
  }
  return sum / static_cast<double>(series.members.size());
}

double spatial_average(const Eigen::Ref<const VectorXd>& cell_values, const CellMask& mask) {
  double total = 0.0;
  Index count = 0;
  for (Index c = 0; c < cell_values.size(); ++c) {
    if (c < mask.size() && mask(c)) {
      total += cell_values(c);
      ++count;
    }
  }
  if (count == 0) throw InputError("spatial_average: no cells inside the region mask");
  return total / static_cast<double>(count);
}

VectorXd interpolate_hourly(const Eigen::Ref<const VectorXd>& accumulated, int step_hours) {
  if (step_hours < 1 || kHorizon % step_hours != 0)
    throw InputError("interpolate_hourly: step must divide the horizon");
  const Index blocks = kHorizon / step_hours;
  if (accumulated.size() != blocks)
    throw InputError("interpolate_hourly: expected " + std::to_string(blocks) + " accumulation steps, got " +
                     std::to_string(accumulated.size()));

  VectorXd rate(blocks);
  double previous = 0.0;
  for (Index k = 0; k < blocks; ++k) {
    const double a = accumulated(k);
    if (!std::isfinite(a) || a < 0.0) throw InputError("interpolate_hourly: accumulation must be finite and >= 0");
    if (a < previous)
      throw InputError("interpolate_hourly: accumulation decreases at lead " + std::to_string((k + 1) * step_hours) +
                       " h");
    rate(k) = (a - previous) / step_hours;
    previous = a;
  }

  const double h = step_hours;
  const VectorXd slope = pchip_slopes(rate, h);
  VectorXd hourly(kHorizon);
  for (int t = 0; t < kHorizon; ++t) {
    // knot k sits at the block midpoint (k + 0.5) * h; hourly target at t + 0.5
    const double pos = (t + 0.5) / h - 0.5;
    Index k = static_cast<Index>(std::floor(pos));
    k = std::clamp<Index>(k, 0, std::max<Index>(blocks - 2, 0));
    if (blocks == 1) {
      hourly(t) = rate(0);
      continue;
    }
    hourly(t) = hermite(rate(k), rate(k + 1), slope(k), slope(k + 1), h, (pos - k) * h);
  }
  hourly = hourly.cwiseMax(0.0);

  for (Index k = 0; k < blocks; ++k) {
    auto block = hourly.segment(k * step_hours, step_hours);
    const double target = rate(k) * step_hours;
    if (target == 0.0) {
      block.setZero();
      continue;
    }
    const double have = block.sum();
    if (have > 0.0)
      block *= target / have;
    else
      block.setConstant(rate(k));
  }
  return hourly;
}

VectorXd preprocess_forecast(const GridForecastSeries& series, const CellMask& mask) {
  const MatrixXd mean = ensemble_mean(series);
  if (series.steps.empty()) throw InputError("forecast has no lead steps");
  const int step = series.steps.front();
  for (std::size_t k = 0; k < series.steps.size(); ++k) {
    if (series.steps[k] != static_cast<int>(k + 1) * step)
      throw InputError("forecast issued " + format_hour_stamp(series.issue_time) +
                       " does not cover every lead step up to 72 h");
  }
  MatrixXd hourly(mean.rows(), kHorizon);
  for (Index c = 0; c < mean.rows(); ++c) hourly.row(c) = interpolate_hourly(mean.row(c).transpose(), step);
  VectorXd x(kHorizon);
  for (int t = 0; t < kHorizon; ++t) x(t) = spatial_average(hourly.col(t), mask);
  return x;
}

VectorXd latest_observed_lag(const ProductionSeries& production, HourStamp issue, int max_days_back) {
  VectorXd by_hour(kHoursPerDay);
  for (int h = 0; h < kHoursPerDay; ++h) {
    double found = kMissing<double>;
    // latest stamp strictly before issue with this hour of day
    HourStamp t = issue - std::chrono::hours(kHoursPerDay - h);
    for (int back = 0; back < max_days_back && std::isnan(found); ++back, t -= std::chrono::hours(kHoursPerDay))
      found = production.at(t);
    if (std::isnan(found))
      throw InputError("no production observed at hour " + std::to_string(h) + " UTC in the " +
                       std::to_string(max_days_back) + " days before " + format_hour_stamp(issue));
    by_hour(h) = found;
  }
  VectorXd lag(kHorizon);
  for (int lead = 1; lead <= kHorizon; ++lead) lag(lead - 1) = by_hour(lead % kHoursPerDay);
  return lag;
}

LeadTimePartition partition_lead_times(const ForecastCase& fc) {
  LeadTimePartition p;
  for (int lead = 1; lead <= kHorizon; ++lead) {
    if (fc.y_lag(lead - 1) > 0.0 && fc.x(lead - 1) > 0.0)
      p.t_plus.push_back(lead);
    else
      p.t_zero.push_back(lead);
  }
  return p;
}

std::vector<ForecastCase> assemble_window(const CaseMap& cases, Date target, int window_days) {
  if (window_days < 1) throw InputError("assemble_window: window_days must be >= 1");
  std::vector<ForecastCase> window;
  std::vector<Date> missing;
  for (int back = window_days; back >= 1; --back) {
    const Date d = target - std::chrono::days(back);
    auto it = cases.find(d);
    if (it == cases.end()) {
      missing.push_back(d);
      continue;
    }
    ForecastCase fc = it->second;
    for (int lead = 1; lead <= kHorizon; ++lead) {
      if (!realized_before(d, lead, target)) fc.y_obs(lead - 1) = kMissing<double>;
    }
    window.push_back(std::move(fc));
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "training window for " << format_date(target) << " lacks " << missing.size() << " day(s):";
    for (const Date d : missing) msg << ' ' << format_date(d);
    throw InputError(msg.str());
  }
  return window;
}

CaseMap build_cases(const std::map<HourStamp, GridForecastSeries>& forecasts, const ProductionSeries& production,
                    const CellMask& mask) {
  CaseMap cases;
  for (const auto& [issue, series] : forecasts) {
    if (hour_of_day(issue) != 0) continue;  // only 00 UTC runs are used
    ForecastCase fc;
    fc.issue_date = date_of(issue);
    fc.x = preprocess_forecast(series, mask);
    fc.y_obs.resize(kHorizon);
    for (int lead = 1; lead <= kHorizon; ++lead)
      fc.y_obs(lead - 1) = production.at(issue + std::chrono::hours(lead));
    try {
      fc.y_lag = latest_observed_lag(production, issue);
    } catch (const InputError&) {
      fc.y_lag = VectorXd::Constant(kHorizon, kMissing<double>);
    }
    cases.emplace(fc.issue_date, std::move(fc));
  }
  return cases;
}

}  // namespace pvtraj
