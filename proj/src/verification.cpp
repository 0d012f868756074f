#include "pvtraj/verification.hpp"

#include "pvtraj/csv_io.hpp"
#include "pvtraj/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace pvtraj {
namespace {

std::vector<double> sorted_copy(const Eigen::Ref<const VectorXd>& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return s;
}

double crps_sorted(const std::vector<double>& x, double obs) {
  const double m = static_cast<double>(x.size());
  double abs_dev = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    abs_dev += std::abs(x[i] - obs);
    spread += (2.0 * static_cast<double>(i) - m + 1.0) * x[i];  // sum over i<j of x_j - x_i
  }
  const double pairwise = x.size() > 1 ? 2.0 * spread / (m * (m - 1.0)) : 0.0;
  return std::max(0.0, abs_dev / m - 0.5 * pairwise);
}

double choose2(double n) { return 0.5 * n * (n - 1.0); }

// Band-depth counts summed over time points; integers held exactly in double.
VectorXd band_depth_counts(const MatrixXd& curves) {
  const Index n = curves.rows();
  VectorXd counts = VectorXd::Zero(n);
  std::vector<double> col(static_cast<std::size_t>(n));
  const double pairs = choose2(static_cast<double>(n));
  for (Index t = 0; t < curves.cols(); ++t) {
    for (Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = curves(i, t);
    std::sort(col.begin(), col.end());
    for (Index i = 0; i < n; ++i) {
      const double v = curves(i, t);
      const double below = static_cast<double>(std::lower_bound(col.begin(), col.end(), v) - col.begin());
      const double above = static_cast<double>(col.end() - std::upper_bound(col.begin(), col.end(), v));
      counts(i) += pairs - choose2(below) - choose2(above);
    }
  }
  return counts;
}

void accumulate(ScoreAccumulator::LeadSums& s, const std::vector<double>& sorted, double obs, bool with_interval) {
  const double median = sample_quantile(sorted, 0.5);
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  s.n += 1;
  s.crps += crps_sorted(sorted, obs);
  s.abs_err += std::abs(median - obs);
  s.sq_err += (mean - obs) * (mean - obs);
  if (with_interval) {
    const double lo = sample_quantile(sorted, 0.1), hi = sample_quantile(sorted, 0.9);
    s.width += hi - lo;
    s.covered += (obs >= lo && obs <= hi) ? 1.0 : 0.0;
  }
}

double pit_sorted(const std::vector<double>& sorted, double obs, Rng& rng) {
  const double m = static_cast<double>(sorted.size());
  const double left = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), obs) - sorted.begin()) / m;
  const double right = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), obs) - sorted.begin()) / m;
  return right > left ? left + rng.uniform() * (right - left) : left;
}

}  // namespace

double crps_sample(std::span<const double> ensemble, double obs) {
  if (ensemble.empty()) throw InputError("crps_sample: empty ensemble");
  std::vector<double> s(ensemble.begin(), ensemble.end());
  std::sort(s.begin(), s.end());
  return crps_sorted(s, obs);
}

double crps_sample(const Eigen::Ref<const VectorXd>& ensemble, double obs) {
  return crps_sample(std::span<const double>(ensemble.data(), static_cast<std::size_t>(ensemble.size())), obs);
}

double crps_gaussian(double mu, double sigma, double obs) {
  if (!(sigma > 0.0)) throw InputError("crps_gaussian: sigma must be positive");
  const double z = (obs - mu) / sigma;
  return sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - std::numbers::inv_sqrtpi);
}

double sample_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("sample_quantile: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

PointScores point_scores(const std::vector<VectorXd>& ensembles, const Eigen::Ref<const VectorXd>& observations) {
  if (static_cast<Index>(ensembles.size()) != observations.size())
    throw InputError("point_scores: ensembles and observations differ in length");
  if (ensembles.empty()) throw InputError("point_scores: no cases");
  ScoreAccumulator::LeadSums s;
  for (std::size_t i = 0; i < ensembles.size(); ++i) {
    if (ensembles[i].size() == 0) throw InputError("point_scores: empty ensemble");
    accumulate(s, sorted_copy(ensembles[i]), observations(static_cast<Index>(i)), false);
  }
  return {s.abs_err / static_cast<double>(s.n), std::sqrt(s.sq_err / static_cast<double>(s.n))};
}

double pit(const Eigen::Ref<const VectorXd>& ensemble, double obs, Rng& rng) {
  if (ensemble.size() == 0) throw InputError("pit: empty ensemble");
  return pit_sorted(sorted_copy(ensemble), obs, rng);
}

IntervalResult interval_score(const Eigen::Ref<const VectorXd>& ensemble, double obs, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("interval_score: level must lie in (0, 1)");
  if (ensemble.size() == 0) throw InputError("interval_score: empty ensemble");
  const std::vector<double> s = sorted_copy(ensemble);
  const double lo = sample_quantile(s, 0.5 * (1.0 - level));
  const double hi = sample_quantile(s, 0.5 * (1.0 + level));
  return {hi - lo, obs >= lo && obs <= hi};
}

VectorXd modified_band_depth(const MatrixXd& curves) {
  if (curves.rows() < 2 || curves.cols() < 1) throw InputError("modified_band_depth: need >= 2 curves");
  return band_depth_counts(curves) / (choose2(static_cast<double>(curves.rows())) * static_cast<double>(curves.cols()));
}

int band_depth_rank(const Eigen::Ref<const VectorXd>& obs_curve, const MatrixXd& ensemble_curves, Rng& rng) {
  const Index m = ensemble_curves.rows();
  if (m < 2) throw InputError("band_depth_rank: need at least two ensemble curves");
  if (obs_curve.size() != ensemble_curves.cols())
    throw InputError("band_depth_rank: observation and ensemble curves differ in length");
  MatrixXd pooled(m + 1, ensemble_curves.cols());
  pooled.row(0) = obs_curve.transpose();
  pooled.bottomRows(m) = ensemble_curves;
  const VectorXd c = band_depth_counts(pooled);
  int lower = 0, ties = 0;
  for (Index i = 1; i <= m; ++i) {
    if (c(i) < c(0))
      ++lower;
    else if (c(i) == c(0))
      ++ties;
  }
  return 1 + lower + static_cast<int>(rng.index(static_cast<std::size_t>(ties) + 1));
}

std::string_view to_string(PathStatistic s) { return s == PathStatistic::sum ? "sum" : "max"; }

double path_statistic(const Eigen::Ref<const RowVector<double>>& path, PathStatistic s) {
  if (path.size() != kHorizon || path.hasNaN()) throw InputError("path statistic needs a complete 72-hour path");
  return s == PathStatistic::sum ? path.sum() : path.maxCoeff();
}

AggregateScores aggregate_scores(const std::vector<MatrixXd>& trajectories, const std::vector<VectorXd>& observations,
                                 PathStatistic statistic) {
  if (trajectories.size() != observations.size() || trajectories.empty())
    throw InputError("aggregate_scores: need matching, nonempty trajectories and observations");
  ScoreAccumulator::LeadSums s;
  for (std::size_t c = 0; c < trajectories.size(); ++c) {
    const MatrixXd& paths = trajectories[c];
    if (paths.rows() == 0) throw InputError("aggregate_scores: empty trajectory ensemble");
    std::vector<double> stats(static_cast<std::size_t>(paths.rows()));
    for (Index r = 0; r < paths.rows(); ++r) stats[static_cast<std::size_t>(r)] = path_statistic(paths.row(r), statistic);
    std::sort(stats.begin(), stats.end());
    accumulate(s, stats, path_statistic(observations[c].transpose(), statistic), false);
  }
  const double n = static_cast<double>(s.n);
  return {s.abs_err / n, std::sqrt(s.sq_err / n), s.crps / n};
}

long HistogramBins::total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

double HistogramBins::chi_square() const {
  const double ref = reference();
  double chi = 0.0;
  for (long c : counts) chi += (static_cast<double>(c) - ref) * (static_cast<double>(c) - ref) / ref;
  return chi;
}

HistogramBins make_histogram(std::span<const double> values, int n_bins, double lo, double hi) {
  if (n_bins < 1 || !(hi > lo)) throw InputError("make_histogram: need n_bins >= 1 and hi > lo");
  HistogramBins h;
  h.edges = VectorXd::LinSpaced(n_bins + 1, lo, hi);
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  for (double v : values) {
    if (!(v >= lo && v <= hi)) throw InputError("make_histogram: value outside the histogram range");
    const auto b = std::min(n_bins - 1, static_cast<int>(std::floor((v - lo) / (hi - lo) * n_bins)));
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

void write_histogram_csv(const std::filesystem::path& path, const HistogramBins& h) {
  std::ofstream out = open_output(path);
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out << format_fixed(h.edges(static_cast<Index>(b)), 4) << ',' << format_fixed(h.edges(static_cast<Index>(b) + 1), 4)
        << ',' << h.counts[b] << '\n';
}

void write_histogram_svg(const std::filesystem::path& path, const HistogramBins& h, std::string_view title) {
  constexpr double width = 480, height = 300, margin = 40;
  const double peak = std::max<double>(h.reference() * 1.5,
                                       h.counts.empty() ? 1.0 : *std::max_element(h.counts.begin(), h.counts.end()));
  const double bar = (width - 2 * margin) / std::max<std::size_t>(h.counts.size(), 1);
  const auto y_of = [&](double c) { return height - margin - (height - 2 * margin) * c / peak; };

  std::ofstream out = open_output(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double y = y_of(static_cast<double>(h.counts[b]));
    out << "<rect x=\"" << format_fixed(margin + bar * static_cast<double>(b), 2) << "\" y=\"" << format_fixed(y, 2)
        << "\" width=\"" << format_fixed(bar * 0.95, 2) << "\" height=\"" << format_fixed(height - margin - y, 2)
        << "\" fill=\"#7a9cc6\"/>\n";
  }
  const double ref = y_of(h.reference());
  out << "<line x1=\"" << margin << "\" x2=\"" << width - margin << "\" y1=\"" << format_fixed(ref, 2) << "\" y2=\""
      << format_fixed(ref, 2) << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  out << "<line x1=\"" << margin << "\" x2=\"" << width - margin << "\" y1=\"" << height - margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  out << "</svg>\n";
}

ScoreAccumulator::ScoreAccumulator() = default;

void ScoreAccumulator::add_lead(int lead_h, const Eigen::Ref<const VectorXd>& ensemble, double obs, Rng& rng) {
  if (lead_h < 1 || lead_h > kHorizon) throw InputError("ScoreAccumulator: lead outside 1..72");
  if (ensemble.size() == 0) throw InputError("ScoreAccumulator: empty ensemble");
  const std::vector<double> s = sorted_copy(ensemble);
  accumulate(leads_[static_cast<std::size_t>(lead_h - 1)], s, obs, true);
  pit_[static_cast<std::size_t>(day_block(lead_h))].push_back(pit_sorted(s, obs, rng));
}

void ScoreAccumulator::add_path(PathStatistic stat, const Eigen::Ref<const VectorXd>& statistic_ensemble,
                                double obs_statistic, Rng& rng) {
  const std::vector<double> s = sorted_copy(statistic_ensemble);
  accumulate(path_[static_cast<std::size_t>(stat)], s, obs_statistic, true);
  path_pit_[static_cast<std::size_t>(stat)].push_back(pit_sorted(s, obs_statistic, rng));
}

void ScoreAccumulator::add_band_depth_rank(int rank, int members) {
  band_depth_.push_back((static_cast<double>(rank) - 0.5) / static_cast<double>(members + 1));
}

std::vector<ReportRow> summarize(const ScoreAccumulator& acc, std::string_view model) {
  std::vector<ReportRow> rows;
  const auto emit = [&](const ScoreAccumulator::LeadSums& s, std::string_view block, bool marginal) {
    const double n = static_cast<double>(s.n);
    const double nan = kMissing<double>;
    rows.push_back({"crps", std::string(block), std::string(model), s.n ? s.crps / n : nan});
    rows.push_back({"mae", std::string(block), std::string(model), s.n ? s.abs_err / n : nan});
    rows.push_back({"rmse", std::string(block), std::string(model), s.n ? std::sqrt(s.sq_err / n) : nan});
    if (marginal) {
      rows.push_back({"width80", std::string(block), std::string(model), s.n ? s.width / n : nan});
      rows.push_back({"coverage80", std::string(block), std::string(model), s.n ? s.covered / n : nan});
    }
  };
  for (int b = 0; b < 3; ++b) {
    ScoreAccumulator::LeadSums block;
    for (int lead = b * kHoursPerDay + 1; lead <= (b + 1) * kHoursPerDay; ++lead) {
      const auto& s = acc.leads()[static_cast<std::size_t>(lead - 1)];
      block.n += s.n;
      block.crps += s.crps, block.abs_err += s.abs_err, block.sq_err += s.sq_err;
      block.width += s.width, block.covered += s.covered;
    }
    emit(block, kDayBlocks[static_cast<std::size_t>(b)], true);
  }
  emit(acc.path_sums(PathStatistic::sum), "sum", false);
  emit(acc.path_sums(PathStatistic::max), "max", false);
  return rows;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream out = open_output(path);
  out << "metric,block,model,value\n";
  for (const auto& r : rows) out << r.metric << ',' << r.block << ',' << r.model << ',' << format_fixed(r.value, 6) << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  CsvReader csv(path);
  const auto c_metric = csv.column("metric"), c_block = csv.column("block"), c_model = csv.column("model"),
             c_value = csv.column("value");
  std::vector<ReportRow> rows;
  while (csv.next())
    rows.push_back({std::string(csv.field(c_metric)), std::string(csv.field(c_block)), std::string(csv.field(c_model)),
                    csv.number(c_value)});
  return rows;
}

}  // namespace pvtraj
