#include "pvtraj/orchestrator.hpp"

#include <algorithm>
#include <charconv>
#include <future>
#include <sstream>

namespace pvtraj {
namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty())
    throw UsageError("config key '" + std::string(key) + "': bad value '" + std::string(value) + "'");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_constant(const Eigen::Ref<const VectorXd>& col) { return col.maxCoeff() == col.minCoeff(); }

MatrixXd quantized(const MatrixXd& m) {
  return m.unaryExpr([](double v) { return quantize(v, kTrajectoryDecimals); });
}

VectorXd archive_scores(const MatrixXd& paths, const VectorXd& observed, Rng& rng) {
  VectorXd z = VectorXd::Constant(kHorizon, kMissing<double>);
  for (Index j = 0; j < kHorizon; ++j) {
    if (std::isnan(observed(j)) || is_constant(paths.col(j))) continue;
    z(j) = normal_score(pit(paths.col(j), observed(j), rng));
  }
  return z;
}

void write_paths(std::ostream& out, Date date, const MatrixXd& paths) {
  const std::string d = format_date(date);
  for (Index s = 0; s < paths.rows(); ++s)
    for (Index j = 0; j < paths.cols(); ++j)
      out << d << ',' << s << ',' << (j + 1) << ',' << format_fixed(paths(s, j), kTrajectoryDecimals) << '\n';
}

void write_histograms(const std::filesystem::path& dir, std::string_view prefix, const ScoreAccumulator& acc) {
  constexpr int bins = 20;
  const auto emit = [&](std::string name, const std::vector<double>& values, std::string_view title) {
    const HistogramBins h = make_histogram(values, bins);
    write_histogram_csv(dir / (std::string(prefix) + name + ".csv"), h);
    write_histogram_svg(dir / (std::string(prefix) + name + ".svg"), h, title);
  };
  for (int b = 0; b < 3; ++b)
    emit("pit_" + std::string(kDayBlocks[static_cast<std::size_t>(b)]), acc.pit_values(b),
         "PIT, leads " + std::to_string(b * 24 + 1) + "-" + std::to_string(b * 24 + 24) + " h");
  emit("pit_sum", acc.path_pits(PathStatistic::sum), "PIT, 72 h total");
  emit("pit_max", acc.path_pits(PathStatistic::max), "PIT, 72 h maximum");
  emit("band_depth", acc.band_depth_positions(), "Band depth rank, leads 1-24 h");
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "model") {
    const auto v = parse_model_variant(value);
    if (!v) throw UsageError("config key 'model': expected full, indep or indep-resid, got '" + std::string(value) + "'");
    variant = *v;
  } else if (key == "window_days") {
    window_days = parse_number<int>(key, value);
  } else if (key == "copula_window_days") {
    copula_window_days = parse_number<int>(key, value);
  } else if (key == "gibbs_iters") {
    gibbs_iters = parse_number<int>(key, value);
  } else if (key == "gibbs_burn") {
    gibbs_burn = parse_number<int>(key, value);
  } else if (key == "samples") {
    samples = parse_number<int>(key, value);
  } else if (key == "copula") {
    if (value == "off" || value == "false" || value == "0") {
      copula = false;
    } else if (value == "on" || value == "true" || value == "1") {
      copula = true;
      copula_structure = CopulaStructure::full;
    } else if (const auto s = parse_copula_structure(value)) {
      copula = true;
      copula_structure = *s;
    } else {
      throw UsageError("config key 'copula': expected off, full or ar1, got '" + std::string(value) + "'");
    }
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "data_dir") {
    data_dir = std::string(value);
  } else if (key == "out_dir") {
    out_dir = std::string(value);
  } else if (key == "threads") {
    threads = parse_number<int>(key, value);
  } else if (key == "precision_prior_df") {
    precision_prior_df = parse_number<double>(key, value);
  } else if (key == "precision_prior_scale") {
    precision_prior_scale = parse_number<double>(key, value);
  } else if (key == "min_training_rows") {
    min_training_rows = parse_number<int>(key, value);
  } else if (key == "window_sweep") {
    window_sweep.clear();
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      window_sweep.push_back(parse_number<int>(key, trim(rest.substr(0, comma))));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  } else {
    throw UsageError("unknown config key '" + std::string(key) + "'");
  }
}

void RunConfig::validate() const {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
  };
  require(window_days >= 1, "window_days must be >= 1");
  require(copula_window_days >= 1, "copula_window_days must be >= 1");
  require(gibbs_burn >= 0, "gibbs_burn must be >= 0");
  require(gibbs_iters > gibbs_burn, "gibbs_iters must exceed gibbs_burn");
  require(samples >= 1, "samples must be >= 1");
  require(!copula || samples >= 2, "samples must be >= 2 when the copula is on");
  require(threads >= 1, "threads must be >= 1");
  require(precision_prior_df > 2.0, "precision_prior_df must exceed 2");
  require(precision_prior_scale > 0.0, "precision_prior_scale must be positive");
  require(min_training_rows >= 1, "min_training_rows must be >= 1");
  for (int w : window_sweep) require(w >= 1, "window_sweep entries must be >= 1");
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    set(s.substr(0, eq), s.substr(eq + 1));
  }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  RunConfig c;
  c.merge_file(path);
  return c;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "model=" << variant.name() << '\n'
      << "window_days=" << window_days << '\n'
      << "copula_window_days=" << copula_window_days << '\n'
      << "gibbs_iters=" << gibbs_iters << '\n'
      << "gibbs_burn=" << gibbs_burn << '\n'
      << "samples=" << samples << '\n'
      << "copula=" << (copula ? to_string(copula_structure) : "off") << '\n'
      << "seed=" << seed << '\n'
      << "data_dir=" << data_dir.string() << '\n'
      << "out_dir=" << out_dir.string() << '\n'
      << "threads=" << threads << '\n'
      << "precision_prior_df=" << format_fixed(precision_prior_df, 6) << '\n'
      << "precision_prior_scale=" << format_fixed(precision_prior_scale, 6) << '\n'
      << "min_training_rows=" << min_training_rows << '\n';
  if (!window_sweep.empty()) {
    out << "window_sweep=";
    for (std::size_t i = 0; i < window_sweep.size(); ++i) out << (i ? "," : "") << window_sweep[i];
    out << '\n';
  }
  return out.str();
}

EngineConfig RunConfig::engine() const {
  EngineConfig e;
  e.variant = variant;
  e.precision_prior_df = precision_prior_df;
  e.precision_prior_scale = precision_prior_scale;
  e.gibbs.iters = gibbs_iters;
  e.gibbs.burn = gibbs_burn;
  e.samples = samples;
  e.window_days = window_days;
  e.min_training_rows = min_training_rows;
  return e;
}

std::string RunConfig::model_label() const {
  return std::string(variant.name()) + (copula ? "-copula" : "");
}

Rng verify_stream(std::uint64_t seed, std::string_view label, Date date) {
  return Rng::substream(seed, label, date_key(date));
}

void score_date(ScoreAccumulator& acc, const MatrixXd& paths, const Eigen::Ref<const VectorXd>& observed, Rng& rng) {
  if (paths.cols() != kHorizon || observed.size() != kHorizon)
    throw InputError("score_date: trajectories and observations need 72 lead times");
  std::vector<Index> day1;
  for (Index j = 0; j < kHorizon; ++j) {
    if (std::isnan(observed(j)) || is_constant(paths.col(j))) continue;
    acc.add_lead(static_cast<int>(j + 1), paths.col(j), observed(j), rng);
    if (j < kHoursPerDay) day1.push_back(j);
  }
  if (!observed.hasNaN()) {
    for (PathStatistic s : {PathStatistic::sum, PathStatistic::max}) {
      VectorXd stats(paths.rows());
      for (Index r = 0; r < paths.rows(); ++r) stats(r) = path_statistic(paths.row(r), s);
      acc.add_path(s, stats, path_statistic(observed.transpose(), s), rng);
    }
  }
  if (!day1.empty() && paths.rows() >= 2) {
    const VectorXd obs = observed(day1);
    acc.add_band_depth_rank(band_depth_rank(obs, paths(Eigen::all, day1), rng), static_cast<int>(paths.rows()));
  }
}

RunSummary run_forecast(const RunConfig& config, const CaseMap& cases, Date from, Date to,
                        const std::function<void(const DateResult&)>& sink) {
  config.validate();
  if (to < from) throw UsageError("--to must not precede --from");
  const EngineConfig engine = config.engine();
  // archive for target d holds dates in [d - 3 - W, d - 4]
  const Date first = config.copula ? from - std::chrono::days(3 + config.copula_window_days) : from;
  std::vector<Date> dates;
  for (Date d = first; d <= to; d += std::chrono::days(1)) dates.push_back(d);

  RunSummary summary;
  std::map<Date, VectorXd> scores;
  const std::size_t batch = static_cast<std::size_t>(config.threads) * 2;

  for (std::size_t begin = 0; begin < dates.size(); begin += batch) {
    const std::size_t end = std::min(dates.size(), begin + batch);
    std::vector<std::optional<CaseForecast>> fits(end - begin);
    const auto fit_one = [&](Date d) -> std::optional<CaseForecast> {
      try {
        return forecast_case(cases, d, engine, config.seed);
      } catch (const InputError&) {
        if (d >= from) throw;
        return std::nullopt;  // warm-up dates without enough history are skipped
      }
    };
    if (config.threads == 1) {
      for (std::size_t i = begin; i < end; ++i) fits[i - begin] = fit_one(dates[i]);
    } else {
      std::vector<std::future<std::optional<CaseForecast>>> jobs;
      for (std::size_t i = begin; i < end; ++i) jobs.push_back(std::async(std::launch::async, fit_one, dates[i]));
      for (std::size_t i = begin; i < end; ++i) fits[i - begin] = jobs[i - begin].get();
    }

    for (std::size_t i = begin; i < end; ++i) {
      const Date d = dates[i];
      auto& fit = fits[i - begin];
      if (!fit) continue;
      const ForecastCase& fc = cases.at(d);
      DateResult result;
      result.date = d;
      result.univariate = quantized(fit->trajectory.samples);
      result.observed = fc.y_obs;
      result.modelled_leads = static_cast<int>(fit->trajectory.modelled.size());
      result.jitter_events = fit->jitter_events;
      result.max_split_rhat = fit->max_split_rhat;
      summary.jitter_events += fit->jitter_events;
      if (!std::isnan(fit->max_split_rhat)) summary.max_split_rhat = std::max(summary.max_split_rhat, fit->max_split_rhat);

      if (config.copula) {
        Rng archive_rng = Rng::substream(config.seed, "archive", date_key(d));
        scores.emplace(d, archive_scores(result.univariate, fc.y_obs, archive_rng));
      }
      if (d < from) continue;
      if (fc.y_obs.array().isNaN().all())
        throw InputError("no realized production to verify the forecast issued " + format_date(d));

      if (config.copula) {
        ResidualArchive archive(config.copula_window_days);
        for (auto it = scores.lower_bound(d - std::chrono::days(3 + config.copula_window_days));
             it != scores.end() && it->first <= d - std::chrono::days(4); ++it)
          archive.add(it->first, it->second);
        summary.archive_dates = std::max(summary.archive_dates, static_cast<int>(archive.size()));
        const CopulaCorrelation corr = archive.size() > 0
                                           ? estimate_correlation(archive.matrix(), config.copula_structure)
                                           : CopulaCorrelation{MatrixXd::Identity(kHorizon, kHorizon), {}};
        Rng copula_rng = Rng::substream(config.seed, "copula", date_key(d));
        result.coupled = couple_samples(result.univariate, corr, copula_rng);
        result.correlation = corr.matrix;
      }
      ++summary.evaluated;
      sink(result);
    }
  }
  summary.normal_scores = std::move(scores);
  return summary;
}

std::vector<std::pair<int, double>> window_sweep(const RunConfig& config, const CaseMap& cases, Date from, Date to,
                                                 const std::vector<int>& windows) {
  std::vector<std::pair<int, double>> curve;
  for (int w : windows) {
    RunConfig c = config;
    c.window_days = w;
    c.copula = false;
    double total = 0.0;
    long n = 0;
    run_forecast(c, cases, from, to, [&](const DateResult& r) {
      for (Index j = 0; j < kHoursPerDay; ++j) {
        if (std::isnan(r.observed(j))) continue;
        total += crps_sample(r.univariate.col(j), r.observed(j));
        ++n;
      }
    });
    curve.emplace_back(w, n ? total / static_cast<double>(n) : kMissing<double>);
  }
  return curve;
}

void write_lead_report_csv(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, const ScoreAccumulator*>>& accs) {
  std::ofstream out = open_output(path);
  out << "model,lead_h,n,crps,mae,rmse,width80,coverage80\n";
  for (const auto& [model, acc] : accs) {
    for (int lead = 1; lead <= kHorizon; ++lead) {
      const auto& s = acc->leads()[static_cast<std::size_t>(lead - 1)];
      if (s.n == 0) continue;
      const double n = static_cast<double>(s.n);
      out << model << ',' << lead << ',' << s.n << ',' << format_fixed(s.crps / n, 6) << ','
          << format_fixed(s.abs_err / n, 6) << ',' << format_fixed(std::sqrt(s.sq_err / n), 6) << ','
          << format_fixed(s.width / n, 6) << ',' << format_fixed(s.covered / n, 6) << '\n';
    }
  }
}

RunSummary forecast_command(const RunConfig& config, Date from, Date to) {
  config.validate();
  const Dataset data = load_dataset(config.data_dir);
  const auto& out_dir = config.out_dir;
  std::filesystem::create_directories(out_dir);

  std::ofstream traj = open_output(out_dir / "trajectories.csv");
  std::ofstream obs = open_output(out_dir / "observations.csv");
  std::optional<std::ofstream> uni;
  if (config.copula) uni = open_output(out_dir / "trajectories_univariate.csv");
  traj << "date,sample_id,lead_h,mw\n";
  if (uni) *uni << "date,sample_id,lead_h,mw\n";
  obs << "date,lead_h,mw\n";

  ScoreAccumulator final_acc, uni_acc;
  MatrixXd last_correlation;
  const RunSummary summary = run_forecast(config, data.cases, from, to, [&](const DateResult& r) {
    last_correlation = r.correlation;
    write_paths(traj, r.date, r.final_paths());
    for (Index j = 0; j < kHorizon; ++j)
      obs << format_date(r.date) << ',' << (j + 1) << ',' << format_fixed(r.observed(j), kTrajectoryDecimals) << '\n';
    Rng rng = verify_stream(config.seed, "verify", r.date);
    score_date(final_acc, r.final_paths(), r.observed, rng);
    if (uni) {
      write_paths(*uni, r.date, r.univariate);
      Rng urng = verify_stream(config.seed, "verify-univariate", r.date);
      score_date(uni_acc, r.univariate, r.observed, urng);
    }
  });
  if (!traj || !obs || (uni && !*uni)) throw InputError("failed writing forecast outputs in " + out_dir.string());

  std::vector<ReportRow> rows = summarize(final_acc, config.model_label());
  std::vector<std::pair<std::string, const ScoreAccumulator*>> accs{{config.model_label(), &final_acc}};
  if (config.copula) {
    const auto u = summarize(uni_acc, config.variant.name());
    rows.insert(rows.end(), u.begin(), u.end());
    accs.emplace_back(std::string(config.variant.name()), &uni_acc);
  }
  write_report_csv(out_dir / "report.csv", rows);
  write_lead_report_csv(out_dir / "report_leads.csv", accs);
  open_output(out_dir / "run.cfg") << config.to_text();
  if (config.copula) {
    std::ofstream archive = open_output(out_dir / "archive.csv");
    archive << "date,lead_h,z\n";
    for (const auto& [d, z] : summary.normal_scores)
      for (Index j = 0; j < kHorizon; ++j) archive << format_date(d) << ',' << (j + 1) << ',' << format_fixed(z(j), 6) << '\n';
    // correlation used for the last forecast date
    std::ofstream corr = open_output(out_dir / "correlation.csv");
    corr << "row_lead,col_lead,value\n";
    for (Index i = 0; i < last_correlation.rows(); ++i)
      for (Index j = 0; j < last_correlation.cols(); ++j)
        corr << (i + 1) << ',' << (j + 1) << ',' << format_fixed(last_correlation(i, j), 6) << '\n';
  }

  if (!config.window_sweep.empty()) {
    std::ofstream sweep = open_output(out_dir / "window_sweep.csv");
    sweep << "window_days,crps\n";
    for (const auto& [w, crps] : window_sweep(config, data.cases, from, to, config.window_sweep))
      sweep << w << ',' << format_fixed(crps, 6) << '\n';
  }
  return summary;
}

std::map<Date, MatrixXd> read_trajectories_csv(const std::filesystem::path& path) {
  CsvReader csv(path);
  const auto c_date = csv.column("date"), c_sample = csv.column("sample_id"), c_lead = csv.column("lead_h"),
             c_mw = csv.column("mw");
  std::map<Date, std::vector<double>> raw;
  std::string last_text;
  Date last{};
  while (csv.next()) {
    if (csv.field(c_date) != last_text) {
      last_text = std::string(csv.field(c_date));
      last = parse_date(last_text);
    }
    const long sample = csv.integer(c_sample), lead = csv.integer(c_lead);
    if (sample < 0 || lead < 1 || lead > kHorizon)
      throw InputError(path.string() + ":" + std::to_string(csv.line_number()) + ": bad sample_id or lead_h");
    auto& v = raw[last];
    const std::size_t idx = static_cast<std::size_t>(sample) * kHorizon + static_cast<std::size_t>(lead - 1);
    if (v.size() <= idx) v.resize((static_cast<std::size_t>(sample) + 1) * kHorizon, kMissing<double>);
    v[idx] = csv.number(c_mw);
  }
  std::map<Date, MatrixXd> out;
  for (auto& [d, v] : raw) {
    const Index m = static_cast<Index>(v.size() / kHorizon);
    MatrixXd paths = Eigen::Map<const Matrix<double>>(v.data(), kHorizon, m).transpose();
    if (paths.hasNaN()) throw InputError(path.string() + ": incomplete trajectories for " + format_date(d));
    out.emplace(d, std::move(paths));
  }
  return out;
}

std::map<Date, VectorXd> read_observations_csv(const std::filesystem::path& path) {
  CsvReader csv(path);
  const auto c_date = csv.column("date"), c_lead = csv.column("lead_h"), c_mw = csv.column("mw");
  std::map<Date, VectorXd> out;
  while (csv.next()) {
    const Date d = parse_date(csv.field(c_date));
    const long lead = csv.integer(c_lead);
    if (lead < 1 || lead > kHorizon) throw InputError(path.string() + ": lead_h outside 1..72");
    auto [it, fresh] = out.try_emplace(d, VectorXd::Constant(kHorizon, kMissing<double>));
    it->second(lead - 1) = csv.number(c_mw);
  }
  return out;
}

void report_command(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir) {
  const RunConfig config = RunConfig::from_file(in_dir / "run.cfg");
  const auto observations = read_observations_csv(in_dir / "observations.csv");
  std::filesystem::create_directories(out_dir);

  const auto score_file = [&](const std::filesystem::path& file, std::string_view label) {
    ScoreAccumulator acc;
    for (const auto& [d, paths] : read_trajectories_csv(file)) {
      const auto it = observations.find(d);
      if (it == observations.end()) throw InputError("no observations for " + format_date(d) + " in " + in_dir.string());
      Rng rng = verify_stream(config.seed, label, d);
      score_date(acc, paths, it->second, rng);
    }
    return acc;
  };

  const ScoreAccumulator final_acc = score_file(in_dir / "trajectories.csv", "verify");
  std::vector<ReportRow> rows = summarize(final_acc, config.model_label());
  std::vector<std::pair<std::string, const ScoreAccumulator*>> accs{{config.model_label(), &final_acc}};
  write_histograms(out_dir, "", final_acc);

  std::optional<ScoreAccumulator> uni_acc;
  if (std::filesystem::exists(in_dir / "trajectories_univariate.csv")) {
    uni_acc = score_file(in_dir / "trajectories_univariate.csv", "verify-univariate");
    const auto u = summarize(*uni_acc, config.variant.name());
    rows.insert(rows.end(), u.begin(), u.end());
    accs.emplace_back(std::string(config.variant.name()), &*uni_acc);
    write_histograms(out_dir, "univariate_", *uni_acc);
  }
  write_report_csv(out_dir / "report.csv", rows);
  write_lead_report_csv(out_dir / "report_leads.csv", accs);
}

}  // namespace pvtraj
