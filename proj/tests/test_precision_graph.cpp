#include "pvtraj/gwishart.hpp"
#include "pvtraj/precision_graph.hpp"

#include <doctest.h>

#include <array>

using namespace pvtraj;

namespace {

using EdgeList = std::vector<std::pair<Index, Index>>;

bool pattern_matches(const MatrixXd& k, const PrecisionGraph& g) {
  for (Index i = 0; i < k.rows(); ++i)
    for (Index j = 0; j < k.cols(); ++j)
      if (i != j && !g.adjacent(i, j) && k(i, j) != 0.0) return false;
  return true;
}

bool positive_definite(const MatrixXd& k) { return Eigen::LLT<MatrixXd>(k).info() == Eigen::Success; }

MatrixXd pad(const MatrixXd& block, const std::vector<Index>& idx, Index n) {
  MatrixXd out = MatrixXd::Zero(n, n);
  out(idx, idx) = block;
  return out;
}

MatrixXd spd_scale() {
  MatrixXd d(3, 3);
  d << 2.0, 0.6, 0.2, 0.6, 1.5, -0.4, 0.2, -0.4, 1.0;
  return d;
}

}  // namespace

TEST_CASE("build_graph band rule") {
  const std::vector<int> gap{5, 6, 9};
  CHECK(build_graph(GraphKind::ar1, gap).edges() == EdgeList{{0, 1}});

  const std::vector<int> consecutive{1, 2, 3};
  CHECK(build_graph(GraphKind::ar2, consecutive).edges() == EdgeList{{0, 1}, {0, 2}, {1, 2}});
  CHECK(build_graph(GraphKind::ar1, consecutive).edges() == EdgeList{{0, 1}, {1, 2}});

  const std::vector<int> many{1, 2, 3, 7, 8, 30};
  CHECK(build_graph(GraphKind::independent, many).edges().empty());
  CHECK(build_graph(GraphKind::ar2, std::vector<int>{1, 3, 4}).edges() == EdgeList{{0, 1}, {1, 2}});
  CHECK(build_graph(GraphKind::ar2, std::vector<int>{1, 4, 6}).edges() == EdgeList{{1, 2}});
}

TEST_CASE("build_graph produces symmetric loop-free adjacency") {
  std::vector<int> leads;
  for (int t = 1; t <= 72; ++t)
    if ((t % 24) > 4 && (t % 24) < 20 && t != 40) leads.push_back(t);
  for (GraphKind kind : {GraphKind::independent, GraphKind::ar1, GraphKind::ar2}) {
    const PrecisionGraph g = build_graph(kind, leads);
    for (Index i = 0; i < g.size(); ++i) {
      CHECK(!g.adjacent(i, i));
      for (Index j = 0; j < g.size(); ++j) {
        CHECK(g.adjacent(i, j) == g.adjacent(j, i));
        const bool band = std::abs(i - j) <= band_order(kind) &&
                          std::abs(leads[static_cast<std::size_t>(i)] - leads[static_cast<std::size_t>(j)]) <= band_order(kind);
        CHECK(g.adjacent(i, j) == (i != j && band));
      }
    }
    CHECK_NOTHROW(perfect_clique_sequence(g));
  }
}

TEST_CASE("graph kind names round-trip") {
  for (GraphKind kind : {GraphKind::independent, GraphKind::ar1, GraphKind::ar2})
    CHECK(parse_graph_kind(to_string(kind)) == kind);
  CHECK(!parse_graph_kind("ar7").has_value());
}

TEST_CASE("non-decomposable graphs are rejected") {
  PrecisionGraph cycle(std::vector<int>{1, 2, 3, 4});
  cycle.add_edge(0, 1);
  cycle.add_edge(1, 2);
  cycle.add_edge(2, 3);
  cycle.add_edge(3, 0);
  CHECK_THROWS_AS(perfect_clique_sequence(cycle), UnsupportedStructure);
  Rng rng(1);
  CHECK_THROWS_AS(sample_gwishart(GWishartSpec<double>::identity(4), cycle, rng), UnsupportedStructure);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(GWishartSpec<double>::identity(2, 2.0).validate(), InputError);
  GWishartSpec<double> asym{3.0, MatrixXd::Identity(2, 2)};
  asym.scale(0, 1) = 0.5;
  CHECK_THROWS_AS(asym.validate(), InputError);
  GWishartSpec<double> indefinite{3.0, MatrixXd::Identity(2, 2)};
  indefinite.scale(1, 1) = -1.0;
  CHECK_THROWS_AS(indefinite.validate(), InputError);
}

TEST_CASE("one-dimensional draws follow gamma(df/2, rate 1/2)") {
  Rng rng(42);
  const PrecisionGraph g(std::vector<int>{7});
  const GWishartSampler<double> sampler(g);
  const auto spec = GWishartSpec<double>::identity(1, 3.0);
  constexpr int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = sampler.sample(spec, rng)(0, 0);
    sum += k;
    sum_sq += k * k;
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.05 / 3.0));
  // variance of chi-square(3) is 6
  CHECK(sum_sq / n - mean * mean == doctest::Approx(6.0).epsilon(0.05));
}

TEST_CASE("complete graph matches the unconstrained Wishart moments") {
  // |K|^((df-2)/2) on p=3 vertices is Wishart(df + 2, D^-1)
  Rng rng(7);
  const std::vector<int> leads{1, 2, 3};
  const PrecisionGraph g = build_graph(GraphKind::ar2, leads);
  const GWishartSampler<double> sampler(g);
  const GWishartSpec<double> spec{3.0, spd_scale()};
  const MatrixXd sigma = spd_scale().inverse();
  const double nu = spec.df + 2.0;
  constexpr int n = 100000;
  MatrixXd sum = MatrixXd::Zero(3, 3), sum_sq = MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const MatrixXd k = sampler.sample(spec, rng);
    sum += k;
    sum_sq += k.cwiseProduct(k);
  }
  const MatrixXd mean = sum / n;
  const MatrixXd var = sum_sq / n - mean.cwiseProduct(mean);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      const double expected_mean = nu * sigma(i, j);
      const double expected_var = nu * (sigma(i, j) * sigma(i, j) + sigma(i, i) * sigma(j, j));
      const double mc_se = std::sqrt(expected_var / n);
      CHECK(std::abs(mean(i, j) - expected_mean) <= std::max(0.02 * std::abs(expected_mean), 4.0 * mc_se));
      CHECK(var(i, j) == doctest::Approx(expected_var).epsilon(0.05));
    }
}

TEST_CASE("complete graph draws agree with a direct Bartlett construction") {
  Rng a(99), b(99);
  const GWishartSpec<double> spec{4.0, spd_scale()};
  const PrecisionGraph g = build_graph(GraphKind::ar2, std::vector<int>{1, 2, 3});
  constexpr int n = 40000;
  MatrixXd mean_sampler = MatrixXd::Zero(3, 3), mean_bartlett = MatrixXd::Zero(3, 3);
  const GWishartSampler<double> sampler(g);
  for (int i = 0; i < n; ++i) {
    mean_sampler += sampler.sample(spec, a) / n;
    mean_bartlett += sample_wishart<double>(b, spec.df + 2.0, spec.scale.inverse()) / n;
  }
  CHECK((mean_sampler - mean_bartlett).cwiseAbs().maxCoeff() < 0.03 * mean_bartlett.cwiseAbs().maxCoeff());
}

TEST_CASE("draws keep the exact zero pattern and stay positive definite") {
  Rng rng(3);
  const std::vector<int> leads{1, 2, 3, 5, 6, 7, 8, 12};
  for (GraphKind kind : {GraphKind::independent, GraphKind::ar1, GraphKind::ar2}) {
    const PrecisionGraph g = build_graph(kind, leads);
    const GWishartSampler<double> sampler(g);
    MatrixXd scale = MatrixXd::Identity(8, 8);
    scale.diagonal() = VectorXd::LinSpaced(8, 0.5, 4.0);
    const GWishartSpec<double> spec{3.0, scale + 0.1 * MatrixXd::Ones(8, 8)};
    for (int i = 0; i < 500; ++i) {
      const MatrixXd k = sampler.sample(spec, rng);
      REQUIRE(pattern_matches(k, g));
      REQUIRE(positive_definite(k));
      REQUIRE(k == k.transpose());
    }
  }
}

TEST_CASE("path graph mean equals the clique decomposition of the hyper inverse Wishart") {
  Rng rng(17);
  const PrecisionGraph g = build_graph(GraphKind::ar1, std::vector<int>{1, 2, 3});
  const GWishartSampler<double> sampler(g);
  const GWishartSpec<double> spec{3.0, spd_scale()};
  const double df = spec.df;
  const std::vector<Index> c1{0, 1}, c2{1, 2}, s{1};
  const MatrixXd expected = pad((df + 1.0) * MatrixXd(spec.scale(c1, c1)).inverse(), c1, 3) +
                            pad((df + 1.0) * MatrixXd(spec.scale(c2, c2)).inverse(), c2, 3) -
                            pad(MatrixXd::Constant(1, 1, df / spec.scale(1, 1)), s, 3);
  constexpr int n = 100000;
  MatrixXd mean = MatrixXd::Zero(3, 3);
  MatrixXd clique_inverse_mean = MatrixXd::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const MatrixXd k = sampler.sample(spec, rng);
    mean += k / n;
    // clique marginal covariance is inverse Wishart, so its inverse is Wishart(df + 1, D_C^-1)
    clique_inverse_mean += MatrixXd(k.inverse()(c1, c1)).inverse() / n;
  }
  CHECK(expected(0, 2) == 0.0);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      if (expected(i, j) != 0.0) CHECK(mean(i, j) == doctest::Approx(expected(i, j)).epsilon(0.02));
  const MatrixXd clique_expected = (df + 1.0) * MatrixXd(spec.scale(c1, c1)).inverse();
  CHECK((clique_inverse_mean - clique_expected).cwiseAbs().maxCoeff() < 0.02 * clique_expected.cwiseAbs().maxCoeff());
}

TEST_CASE("path graph mean agrees with a random-walk Metropolis chain on the density") {
  // free parameters: diagonal (3) and the two band entries
  const MatrixXd d = spd_scale();
  const double df = 3.0;
  const auto log_density = [&](const std::array<double, 5>& v) {
    MatrixXd k(3, 3);
    k << v[0], v[3], 0.0, v[3], v[1], v[4], 0.0, v[4], v[2];
    Eigen::LLT<MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return 0.5 * (df - 2.0) * log_det - 0.5 * (d * k).trace();
  };
  Rng rng(2024);
  std::array<double, 5> state{1.0, 1.0, 1.0, 0.0, 0.0};
  double current = log_density(state);
  constexpr int burn = 20000, steps = 3000000;
  std::array<double, 5> sum{};
  for (int it = 0; it < burn + steps; ++it) {
    auto proposal = state;
    for (double& x : proposal) x += 0.45 * rng.normal();
    const double next = log_density(proposal);
    if (std::log(rng.uniform()) < next - current) {
      state = proposal;
      current = next;
    }
    if (it >= burn)
      for (std::size_t i = 0; i < 5; ++i) sum[i] += state[i] / steps;
  }

  Rng draw_rng(5);
  const GWishartSampler<double> sampler(build_graph(GraphKind::ar1, std::vector<int>{1, 2, 3}));
  MatrixXd mean = MatrixXd::Zero(3, 3);
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) mean += sampler.sample(GWishartSpec<double>{df, d}, draw_rng) / n;
  const std::array<double, 5> exact{mean(0, 0), mean(1, 1), mean(2, 2), mean(0, 1), mean(1, 2)};
  const double scale = mean.cwiseAbs().maxCoeff();
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(sum[i] - exact[i]) < 0.05 * scale);
}

TEST_CASE("conjugate posterior update") {
  const auto prior = GWishartSpec<double>::identity(3);
  const auto same = gwishart_posterior<double>(prior, MatrixXd::Zero(3, 3), 0);
  CHECK(same.df == 3.0);
  CHECK(same.scale == prior.scale);

  const auto post = gwishart_posterior<double>(prior, MatrixXd(10.0 * MatrixXd::Identity(3, 3)), 10);
  CHECK(post.df == 13.0);
  CHECK(post.scale == MatrixXd(11.0 * MatrixXd::Identity(3, 3)));

  MatrixXd asym = MatrixXd::Identity(3, 3);
  asym(0, 2) = 0.3;
  CHECK_THROWS_AS(gwishart_posterior<double>(prior, asym, 5), InputError);
  CHECK_THROWS_AS(gwishart_posterior<double>(prior, MatrixXd::Identity(2, 2), 5), InputError);
}

TEST_CASE("posterior draws recover a known banded precision") {
  MatrixXd k_true(4, 4);
  k_true << 2.0, -0.8, 0.0, 0.0, -0.8, 2.5, -0.9, 0.0, 0.0, -0.9, 2.2, -0.7, 0.0, 0.0, -0.7, 1.8;
  const PrecisionGraph g = build_graph(GraphKind::ar1, std::vector<int>{10, 11, 12, 13});
  const MatrixXd cov_root = Eigen::LLT<MatrixXd>(k_true.inverse()).matrixL();

  Rng rng(12);
  constexpr Index n_obs = 1000;
  const MatrixXd e = (cov_root * rng.normal_matrix(4, n_obs)).transpose();
  const auto post = gwishart_posterior<double>(GWishartSpec<double>::identity(4), MatrixXd(e.transpose() * e), n_obs);

  const GWishartSampler<double> sampler(g);
  constexpr int draws = 4000;
  MatrixXd mean = MatrixXd::Zero(4, 4), sq = MatrixXd::Zero(4, 4);
  for (int i = 0; i < draws; ++i) {
    const MatrixXd k = sampler.sample(post, rng);
    mean += k / draws;
    sq += k.cwiseProduct(k) / draws;
  }
  const MatrixXd sd = (sq - mean.cwiseProduct(mean)).cwiseSqrt();
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) {
      if (k_true(i, j) == 0.0) {
        CHECK(mean(i, j) == 0.0);
        continue;
      }
      CHECK(std::abs(mean(i, j) - k_true(i, j)) < 3.0 * sd(i, j));
    }
}
