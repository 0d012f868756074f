#include "pvtraj/normal.hpp"
#include "pvtraj/verification.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace pvtraj;

namespace {

constexpr double kGaussianCrps01 = 0.23369497725510913;
constexpr double kChiSquare99_19 = 36.19086912927004;
constexpr double kKs99_10000 = 0.016259280113043572;

double crps_brute(const std::vector<double>& x, double y) {
  const double m = static_cast<double>(x.size());
  double a = 0.0, b = 0.0;
  for (double xi : x) a += std::abs(xi - y);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i != j) b += std::abs(x[i] - x[j]);
  return a / m - (x.size() > 1 ? 0.5 * b / (m * (m - 1.0)) : 0.0);
}

VectorXd mbd_brute(const MatrixXd& c) {
  const Index n = c.rows(), t = c.cols();
  VectorXd depth = VectorXd::Zero(n);
  double pairs = 0.0;
  for (Index j = 0; j < n; ++j)
    for (Index k = j + 1; k < n; ++k) {
      pairs += 1.0;
      for (Index i = 0; i < n; ++i)
        for (Index s = 0; s < t; ++s) {
          const double lo = std::min(c(j, s), c(k, s)), hi = std::max(c(j, s), c(k, s));
          depth(i) += (c(i, s) >= lo && c(i, s) <= hi) ? 1.0 : 0.0;
        }
    }
  return depth / (pairs * static_cast<double>(t));
}

double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    d = std::max({d, static_cast<double>(i + 1) / n - u[i], u[i] - static_cast<double>(i) / n});
  return d;
}

MatrixXd ar1_curves(Index n, Index len, Rng& rng) {
  MatrixXd c(n, len);
  for (Index i = 0; i < n; ++i) {
    c(i, 0) = rng.normal();
    for (Index t = 1; t < len; ++t) c(i, t) = 0.8 * c(i, t - 1) + 0.6 * rng.normal();
  }
  return c;
}

}  // namespace

TEST_CASE("sample CRPS examples") {
  CHECK(crps_sample(std::vector<double>{4.2}, 4.2) == 0.0);
  CHECK(crps_sample(std::vector<double>{0.0, 2.0}, 1.0) == doctest::Approx(0.0));
  CHECK(crps_sample(std::vector<double>{3.0}, 1.0) == 2.0);
  CHECK_THROWS_AS(crps_sample(std::vector<double>{}, 1.0), InputError);
  CHECK(crps_sample(std::vector<double>{5.0, 5.0, 5.0}, 5.0) == 0.0);
}

TEST_CASE("sample CRPS matches the all-pairs enumeration") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = 1 + rng.index(40);
    std::vector<double> x(m);
    for (double& v : x) v = rng.uniform() < 0.2 ? 0.0 : std::exp(rng.normal());
    const double y = rng.uniform() < 0.1 ? x[0] : 3.0 * rng.uniform();
    const double brute = crps_brute(x, y);
    CHECK(crps_sample(x, y) == doctest::Approx(std::max(0.0, brute)).epsilon(1e-10).scale(1.0));
    CHECK(crps_sample(x, y) >= 0.0);
  }
}

TEST_CASE("Gaussian CRPS closed form") {
  CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(kGaussianCrps01).epsilon(1e-14));
  CHECK(crps_gaussian(0.0, 2.0, 0.0) == doctest::Approx(2.0 * kGaussianCrps01).epsilon(1e-14));
  CHECK(crps_gaussian(1.3, 0.7, -0.4) == doctest::Approx(crps_gaussian(6.3, 0.7, 4.6)).epsilon(1e-12));
  CHECK_THROWS_AS(crps_gaussian(0.0, 0.0, 1.0), InputError);
  CHECK_THROWS_AS(crps_gaussian(0.0, -1.0, 1.0), InputError);
  Rng rng(3);
  std::vector<double> draws(100000);
  for (double& d : draws) d = 0.5 + 1.5 * rng.normal();
  CHECK(crps_sample(draws, 1.1) == doctest::Approx(crps_gaussian(0.5, 1.5, 1.1)).epsilon(0.015));
}

TEST_CASE("sample CRPS converges to the Gaussian value") {
  Rng rng(4);
  std::vector<double> rms;
  double last_mean = 0.0;
  for (std::size_t m : {100u, 1000u, 10000u}) {
    double sq = 0.0, sum = 0.0;
    constexpr int reps = 20;
    for (int r = 0; r < reps; ++r) {
      std::vector<double> x(m);
      for (double& v : x) v = rng.normal();
      const double c = crps_sample(x, 0.0);
      sq += (c - kGaussianCrps01) * (c - kGaussianCrps01) / reps;
      sum += c / reps;
    }
    rms.push_back(std::sqrt(sq));
    last_mean = sum;
  }
  CHECK(rms[1] < rms[0]);
  CHECK(rms[2] < rms[1]);
  CHECK(last_mean == doctest::Approx(kGaussianCrps01).epsilon(0.01));
  std::vector<double> big(100000);
  for (double& v : big) v = rng.normal();
  CHECK(std::abs(crps_sample(big, 0.0) - kGaussianCrps01) < 0.003);
}

TEST_CASE("type 7 quantiles") {
  const std::vector<double> s{1.0, 2.0, 4.0, 8.0};
  CHECK(sample_quantile(s, 0.0) == 1.0);
  CHECK(sample_quantile(s, 1.0) == 8.0);
  CHECK(sample_quantile(s, 0.5) == 3.0);
  CHECK(sample_quantile(s, 0.25) == doctest::Approx(1.75));
  CHECK(sample_quantile(std::vector<double>{7.0}, 0.9) == 7.0);
}

TEST_CASE("point scores") {
  std::vector<VectorXd> ens{Eigen::Vector3d(0.0, 1.0, 9.0), Eigen::Vector3d(2.0, 4.0, 5.0)};
  CHECK(point_scores(ens, Eigen::Vector2d(1.0, 4.0)).mae == 0.0);
  CHECK(point_scores({Eigen::Vector2d(2.0, 4.0)}, Eigen::Matrix<double, 1, 1>(1.0)).rmse == doctest::Approx(2.0));
  std::vector<VectorXd> constant(5, VectorXd::Constant(7, 3.0));
  const PointScores p = point_scores(constant, VectorXd::Constant(5, 1.5));
  CHECK(p.mae == doctest::Approx(1.5));
  CHECK(p.rmse == doctest::Approx(1.5));
  CHECK_THROWS_AS(point_scores(constant, VectorXd::Zero(4)), InputError);
}

TEST_CASE("randomized PIT") {
  Rng rng(5);
  CHECK(pit(Eigen::Vector3d(1.0, 2.0, 3.0), 0.5, rng) == 0.0);
  CHECK(pit(Eigen::Vector3d(1.0, 2.0, 3.0), 3.5, rng) == 1.0);
  CHECK(pit(Eigen::Vector3d(1.0, 2.0, 3.0), 2.0, rng) >= 1.0 / 3.0);
  VectorXd odd(101);
  for (Index i = 0; i < 101; ++i) odd(i) = static_cast<double>(i);
  CHECK(pit(odd, 50.0, rng) == doctest::Approx(0.5).epsilon(0.01));
  // atom at zero: PIT spread over the atom's CDF jump
  const VectorXd atom = (VectorXd(4) << 0.0, 0.0, 0.0, 5.0).finished();
  for (int i = 0; i < 100; ++i) {
    const double u = pit(atom, 0.0, rng);
    CHECK(u >= 0.0);
    CHECK(u <= 0.75);
  }
}

TEST_CASE("PIT of self-sampled observations is uniform") {
  Rng rng(6);
  std::vector<double> u;
  u.reserve(10000);
  for (int rep = 0; rep < 10000; ++rep) {
    VectorXd ens(20);
    for (Index i = 0; i < 20; ++i) ens(i) = rng.uniform() < 0.3 ? 0.0 : std::exp(rng.normal());
    const double obs = ens(static_cast<Index>(rng.index(20)));
    u.push_back(pit(ens, obs, rng));
  }
  CHECK(ks_uniform(u) < kKs99_10000);
}

TEST_CASE("central interval width and coverage") {
  VectorXd q(1000);
  for (Index i = 0; i < 1000; ++i) q(i) = normal_quantile((static_cast<double>(i) + 0.5) / 1000.0);
  CHECK(interval_score(q, 0.0).width == doctest::Approx(2.0 * 1.2815515655446004).epsilon(0.02));
  const IntervalResult flat = interval_score(VectorXd::Constant(5, 2.0), 2.0);
  CHECK(flat.width == 0.0);
  CHECK(flat.covered);
  CHECK(!interval_score(VectorXd::Constant(5, 2.0), 2.1).covered);
  CHECK_THROWS_AS(interval_score(q, 0.0, 1.0), InputError);

  Rng rng(7);
  int covered = 0;
  for (int rep = 0; rep < 10000; ++rep) covered += interval_score(rng.normal_vector(200), rng.normal()).covered;
  CHECK(covered / 10000.0 == doctest::Approx(0.80).epsilon(0.02 / 0.8));
}

TEST_CASE("modified band depth agrees with pair enumeration") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd c = ar1_curves(3 + static_cast<Index>(rng.index(10)), 1 + static_cast<Index>(rng.index(30)), rng);
    if (trial % 3 == 0) c.row(1) = c.row(0);  // exact ties
    if (trial % 4 == 0) c.col(0).setZero();
    CHECK((modified_band_depth(c) - mbd_brute(c)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(modified_band_depth(MatrixXd::Zero(1, 4)), InputError);
}

TEST_CASE("band depth rank enclosure and ties") {
  Rng rng(9);
  MatrixXd two(2, 72);
  two.row(0).setConstant(1.0);
  two.row(1).setConstant(3.0);
  CHECK(band_depth_rank(VectorXd::Constant(72, 2.0), two, rng) == 3);
  CHECK_THROWS_AS(band_depth_rank(VectorXd::Constant(71, 2.0), two, rng), InputError);

  // the observation duplicates the deepest member: ranks 3 and 4 equally likely
  MatrixXd ens(3, 1);
  ens << 0.0, 1.0, 2.0;
  int r3 = 0, r4 = 0;
  for (int i = 0; i < 4000; ++i) {
    const int r = band_depth_rank(Eigen::Matrix<double, 1, 1>(1.0), ens, rng);
    REQUIRE((r == 3 || r == 4));
    (r == 3 ? r3 : r4)++;
  }
  CHECK(r3 / 4000.0 == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("band depth ranks are uniform under exchangeability") {
  Rng rng(10);
  constexpr int m = 19;
  std::vector<double> positions;
  for (int rep = 0; rep < 10000; ++rep) {
    const MatrixXd curves = ar1_curves(m + 1, 24, rng);
    const int rank = band_depth_rank(curves.row(0).transpose(), curves.bottomRows(m), rng);
    REQUIRE(rank >= 1);
    REQUIRE(rank <= m + 1);
    positions.push_back((rank - 0.5) / (m + 1));
  }
  CHECK(make_histogram(positions, 20).chi_square() < kChiSquare99_19);
}

TEST_CASE("aggregate path scores") {
  const MatrixXd obs_path = RowVector<double>::LinSpaced(72, 0.0, 71.0);
  const AggregateScores exact = aggregate_scores({obs_path}, {obs_path.transpose()}, PathStatistic::max);
  CHECK(exact.crps == 0.0);
  CHECK(exact.mae == 0.0);
  CHECK(exact.rmse == 0.0);

  MatrixXd pair(2, 72);
  pair.row(0).setConstant(1.0);
  pair.row(1).setConstant(3.0);
  const AggregateScores s = aggregate_scores({pair}, {VectorXd::Constant(72, 2.0)}, PathStatistic::sum);
  CHECK(s.mae == 0.0);
  CHECK(s.rmse == 0.0);

  MatrixXd gap = pair;
  gap(0, 10) = kMissing<double>;
  CHECK_THROWS_AS(aggregate_scores({gap}, {VectorXd::Constant(72, 2.0)}, PathStatistic::sum), InputError);
  CHECK_THROWS_AS(path_statistic(RowVector<double>::Zero(24), PathStatistic::sum), InputError);
}

TEST_CASE("joint dependence moves the max score but not the sum mean") {
  Rng rng(11);
  std::vector<MatrixXd> comonotone, independent;
  std::vector<VectorXd> observed;
  constexpr Index m = 200;
  for (int c = 0; c < 200; ++c) {
    MatrixXd marg(m, 72);
    for (Index j = 0; j < 72; ++j)
      for (Index i = 0; i < m; ++i) marg(i, j) = std::exp(0.3 * std::sin(j / 10.0) + 0.5 * rng.normal());
    MatrixXd co = marg, ind = marg;
    for (Index j = 0; j < 72; ++j) {
      std::sort(co.col(j).begin(), co.col(j).end());
      std::vector<Index> perm(static_cast<std::size_t>(m));
      std::iota(perm.begin(), perm.end(), Index{0});
      std::shuffle(perm.begin(), perm.end(), rng.engine());
      for (Index i = 0; i < m; ++i) ind(i, j) = marg(perm[static_cast<std::size_t>(i)], j);
    }
    // truth is comonotone: one shared quantile level per path
    const double u = normal_quantile(rng.uniform());
    VectorXd y(72);
    for (Index j = 0; j < 72; ++j) y(j) = std::exp(0.3 * std::sin(j / 10.0) + 0.5 * u);
    comonotone.push_back(co);
    independent.push_back(ind);
    observed.push_back(y);
  }
  const AggregateScores co_max = aggregate_scores(comonotone, observed, PathStatistic::max);
  const AggregateScores ind_max = aggregate_scores(independent, observed, PathStatistic::max);
  CHECK(co_max.crps < 0.75 * ind_max.crps);
  const AggregateScores co_sum = aggregate_scores(comonotone, observed, PathStatistic::sum);
  const AggregateScores ind_sum = aggregate_scores(independent, observed, PathStatistic::sum);
  CHECK(co_sum.rmse == doctest::Approx(ind_sum.rmse).epsilon(1e-9));
  CHECK(co_sum.crps != doctest::Approx(ind_sum.crps));
}

TEST_CASE("histograms") {
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100.0);
  const HistogramBins even = make_histogram(grid, 20);
  CHECK(std::all_of(even.counts.begin(), even.counts.end(), [](long c) { return c == 5; }));
  CHECK(even.chi_square() == 0.0);

  const HistogramBins one = make_histogram(std::vector<double>{0.37}, 20);
  CHECK(one.total() == 1);
  CHECK(std::count(one.counts.begin(), one.counts.end(), 0L) == 19);
  CHECK(one.counts[7] == 1);
  CHECK(make_histogram(std::vector<double>{1.0}, 20).counts[19] == 1);
  CHECK_THROWS_AS(make_histogram(std::vector<double>{1.2}, 20), InputError);

  Rng rng(12);
  std::vector<double> pits(9741);
  for (double& p : pits) p = rng.uniform();
  const HistogramBins h = make_histogram(pits, 20);
  CHECK(h.total() == 9741);
  CHECK(h.reference() == doctest::Approx(487.05));

  testutil::TempDir dir("hist");
  write_histogram_csv(dir / "h.csv", h);
  write_histogram_svg(dir / "h.svg", h, "PIT");
  const std::string csv = testutil::slurp(dir / "h.csv");
  CHECK(csv.rfind("bin_lo,bin_hi,count\n0.0000,0.0500,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
  CHECK(testutil::slurp(dir / "h.svg").find("stroke-dasharray") != std::string::npos);
}

TEST_CASE("forecasting the true distribution minimizes mean CRPS") {
  Rng rng(13);
  constexpr int cases = 10000;
  constexpr Index m = 100;
  const std::array<std::pair<double, double>, 6> forecasts{
      {{0.0, 1.0}, {0.5, 1.0}, {-0.3, 1.0}, {0.0, 0.5}, {0.0, 2.0}, {0.4, 1.5}}};
  std::array<double, 6> mean{};
  VectorXd z(m);
  for (int c = 0; c < cases; ++c) {
    const double y = rng.normal();
    for (std::size_t f = 0; f < forecasts.size(); ++f) {
      for (Index i = 0; i < m; ++i) z(i) = forecasts[f].first + forecasts[f].second * rng.normal();
      mean[f] += crps_sample(z, y) / cases;
    }
  }
  for (std::size_t f = 1; f < forecasts.size(); ++f) CHECK(mean[0] < mean[f]);
}

TEST_CASE("score accumulator and report") {
  Rng rng(14);
  ScoreAccumulator acc;
  for (int lead = 1; lead <= 72; ++lead) acc.add_lead(lead, rng.normal_vector(50).array().exp().matrix(), 1.0, rng);
  acc.add_path(PathStatistic::sum, rng.normal_vector(50), 0.0, rng);
  acc.add_band_depth_rank(1, 19);
  acc.add_band_depth_rank(20, 19);
  CHECK(acc.pit_values(0).size() == 24);
  CHECK(acc.path_pits(PathStatistic::sum).size() == 1);
  CHECK(acc.band_depth_positions() == std::vector<double>{0.025, 0.975});
  CHECK_THROWS_AS(acc.add_lead(73, VectorXd::Ones(3), 1.0, rng), InputError);

  const auto rows = summarize(acc, "full");
  CHECK(rows.size() == 3 * 5 + 2 * 3);
  for (const auto& r : rows)
    if (r.block != "max") CHECK(r.value >= 0.0);
  const auto max_crps = std::find_if(rows.begin(), rows.end(), [](const ReportRow& r) { return r.block == "max"; });
  REQUIRE(max_crps != rows.end());
  CHECK(std::isnan(max_crps->value));

  testutil::TempDir dir("report");
  write_report_csv(dir / "report.csv", rows);
  const auto back = read_report_csv(dir / "report.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].metric == rows[i].metric);
    CHECK(back[i].block == rows[i].block);
    CHECK(back[i].model == "full");
    if (std::isnan(rows[i].value))
      CHECK(std::isnan(back[i].value));
    else
      CHECK(back[i].value == doctest::Approx(rows[i].value).epsilon(1e-6).scale(1.0));
  }
  CHECK(testutil::slurp(dir / "report.csv").find(",max,full,NA\n") != std::string::npos);
}
