#include "pvtraj/bayes_engine.hpp"

#include <numeric>

namespace pvtraj {

std::string_view ModelVariant::name() const {
  if (*this == full()) return "full";
  if (*this == fully_independent()) return "indep";
  if (*this == independent_residuals()) return "indep-resid";
  return "custom";
}

std::optional<ModelVariant> parse_model_variant(std::string_view text) {
  if (text == "full") return ModelVariant::full();
  if (text == "indep" || text == "fully-independent") return ModelVariant::fully_independent();
  if (text == "indep-resid" || text == "independent-residuals") return ModelVariant::independent_residuals();
  return std::nullopt;
}

double t0_fallback(std::span<const double> training_values) {
  if (training_values.empty()) throw InputError("t0_fallback: empty training window");
  return std::accumulate(training_values.begin(), training_values.end(), 0.0) /
         static_cast<double>(training_values.size());
}

VectorXd training_fallbacks(const std::vector<ForecastCase>& window, const ForecastCase& target) {
  std::vector<std::vector<double>> realized(kHorizon);
  for (const ForecastCase& fc : window)
    for (int lead = 1; lead <= kHorizon; ++lead)
      if (!std::isnan(fc.y_obs(lead - 1))) realized[static_cast<std::size_t>(lead - 1)].push_back(fc.y_obs(lead - 1));

  VectorXd out(kHorizon);
  for (int lead = 1; lead <= kHorizon; ++lead) {
    const auto& own = realized[static_cast<std::size_t>(lead - 1)];
    if (!own.empty()) {
      out(lead - 1) = t0_fallback(own);
      continue;
    }
    std::vector<double> same_hour;
    for (int other = lead % kHoursPerDay == 0 ? kHoursPerDay : lead % kHoursPerDay; other <= kHorizon;
         other += kHoursPerDay)
      for (double v : realized[static_cast<std::size_t>(other - 1)]) same_hour.push_back(v);
    if (!same_hour.empty())
      out(lead - 1) = t0_fallback(same_hour);
    else
      out(lead - 1) = std::isnan(target.y_lag(lead - 1)) ? 0.0 : target.y_lag(lead - 1);
  }
  return out;
}

namespace {

bool usable(const ForecastCase& fc, int lead) {
  const double x = fc.x(lead - 1), y = fc.y_obs(lead - 1), lag = fc.y_lag(lead - 1);
  return x > 0.0 && y > 0.0 && lag > 0.0;
}

}  // namespace

RegressionData<double> make_regression_data(const std::vector<ForecastCase>& window, std::span<const int> lead_times) {
  RegressionData<double> data;
  data.lead_times.assign(lead_times.begin(), lead_times.end());
  const Index n = static_cast<Index>(window.size());
  const Index L = static_cast<Index>(lead_times.size());
  data.log_x = MatrixXd::Constant(n, L, kMissing<double>);
  data.log_y = MatrixXd::Constant(n, L, kMissing<double>);
  for (Index d = 0; d < n; ++d) {
    const ForecastCase& fc = window[static_cast<std::size_t>(d)];
    for (Index j = 0; j < L; ++j) {
      const int lead = lead_times[static_cast<std::size_t>(j)];
      if (!usable(fc, lead)) continue;
      data.log_x(d, j) = std::log(fc.x(lead - 1));
      data.log_y(d, j) = std::log(fc.y_obs(lead - 1));
    }
  }
  return data;
}

CaseForecast forecast_case(const CaseMap& cases, Date target, const EngineConfig& config, std::uint64_t root_seed) {
  const auto it = cases.find(target);
  if (it == cases.end()) throw InputError("no forecast case issued on " + format_date(target));
  const ForecastCase& fc = it->second;
  if (!fc.has_lag()) throw InputError("no lagged production available for " + format_date(target));

  const std::vector<ForecastCase> window = assemble_window(cases, target, config.window_days);
  CaseForecast out;
  out.issue_date = target;
  out.partition = partition_lead_times(fc);

  std::vector<int> modelled;
  for (int lead : out.partition.t_plus) {
    const auto rows = std::count_if(window.begin(), window.end(), [&](const ForecastCase& w) { return usable(w, lead); });
    if (rows >= config.min_training_rows) modelled.push_back(lead);
  }

  PosteriorDraws<double> draws;
  draws.lead_times = modelled;
  if (!modelled.empty()) {
    const RegressionData<double> data = make_regression_data(window, modelled);
    const auto n = static_cast<Index>(modelled.size());
    const GWishartSpec<double> prior_k{config.precision_prior_df,
                                       config.precision_prior_scale * MatrixXd::Identity(n, n)};
    Rng fit_rng = Rng::substream(root_seed, "fit", date_key(target));
    draws = gibbs_fit(data, config.variant, config.prior_beta, prior_k, config.gibbs, fit_rng);
    out.jitter_events = draws.jitter_events;
    out.max_split_rhat = draws.max_split_rhat;
  }
  Rng predict_rng = Rng::substream(root_seed, "predict", date_key(target));
  out.trajectory = predict_trajectory<double>(draws, fc.x, out.partition, training_fallbacks(window, fc),
                                              config.samples, predict_rng);
  return out;
}

}  // namespace pvtraj
