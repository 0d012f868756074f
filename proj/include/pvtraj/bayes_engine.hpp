#pragma once

#include "pvtraj/core.hpp"
#include "pvtraj/data_pipeline.hpp"
#include "pvtraj/gwishart.hpp"
#include "pvtraj/precision_graph.hpp"
#include "pvtraj/random.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pvtraj {

/// Dependence structure on the regression coefficients and the residuals.
struct ModelVariant {
  GraphKind coefficient_graph = GraphKind::independent;
  GraphKind residual_graph = GraphKind::independent;

  static constexpr ModelVariant full() { return {GraphKind::ar1, GraphKind::ar1}; }
  static constexpr ModelVariant fully_independent() { return {GraphKind::independent, GraphKind::independent}; }
  static constexpr ModelVariant independent_residuals() { return {GraphKind::ar1, GraphKind::independent}; }

  /// "full", "indep", "indep-resid", or "custom".
  std::string_view name() const;
  friend bool operator==(const ModelVariant&, const ModelVariant&) = default;
};

std::optional<ModelVariant> parse_model_variant(std::string_view text);

/// Normal prior on (beta0, beta1). With an ar1 coefficient graph, neighbouring
/// lead times within each block follow a stationary AR(1) prior.
template <typename Scalar>
struct CoefficientPrior {
  Scalar intercept_mean = Scalar(0);
  Scalar slope_mean = Scalar(1);
  Scalar variance = Scalar(100);
  Scalar adjacent_correlation = Scalar(0.5);
};

/// Prior precision for one coefficient block (L x L).
template <typename Scalar>
Matrix<Scalar> coefficient_block_precision(const CoefficientPrior<Scalar>& prior, GraphKind graph,
                                           std::span<const int> lead_times) {
  const Index n = static_cast<Index>(lead_times.size());
  if (!(prior.variance > Scalar(0))) throw InputError("coefficient prior variance must be positive");
  Matrix<Scalar> p = Matrix<Scalar>::Identity(n, n) / prior.variance;
  if (graph == GraphKind::independent) return p;
  if (graph != GraphKind::ar1) throw InputError("coefficient graph must be independent or ar1");
  const Scalar rho = prior.adjacent_correlation;
  if (!(std::abs(rho) < Scalar(1))) throw InputError("coefficient prior correlation must lie in (-1, 1)");
  const Scalar c = Scalar(1) / (prior.variance * (Scalar(1) - rho * rho));
  // runs of consecutive lead times are independent AR(1) segments
  Index start = 0;
  while (start < n) {
    Index end = start;
    while (end + 1 < n && lead_times[static_cast<std::size_t>(end + 1)] - lead_times[static_cast<std::size_t>(end)] <= 1)
      ++end;
    if (end > start) {
      for (Index i = start; i <= end; ++i) {
        p(i, i) = (i == start || i == end) ? c : c * (Scalar(1) + rho * rho);
        if (i < end) p(i, i + 1) = p(i + 1, i) = -c * rho;
      }
    }
    start = end + 1;
  }
  return p;
}

/// Stacked training data on a fixed set of lead times. Rows are training
/// cases; NaN marks leads a case does not contribute (zero production, zero
/// covariate, or not yet observed).
template <typename Scalar>
struct RegressionData {
  std::vector<int> lead_times;
  Matrix<Scalar> log_x;
  Matrix<Scalar> log_y;

  Index cases() const { return log_y.rows(); }
  Index leads() const { return static_cast<Index>(lead_times.size()); }
  std::vector<Index> observed(Index row) const {
    std::vector<Index> idx;
    for (Index j = 0; j < leads(); ++j)
      if (!std::isnan(log_y(row, j))) idx.push_back(j);
    return idx;
  }
};

/// X = [I | Diag(log x)] for strictly positive covariates.
template <typename Derived>
Matrix<typename Derived::Scalar> build_design(const Eigen::MatrixBase<Derived>& x_active) {
  using Scalar = typename Derived::Scalar;
  const Index n = x_active.size();
  Matrix<Scalar> x = Matrix<Scalar>::Zero(n, 2 * n);
  for (Index i = 0; i < n; ++i) {
    if (!(x_active(i) > Scalar(0))) throw InputError("design covariates must be strictly positive");
    x(i, i) = Scalar(1);
    x(i, n + i) = std::log(x_active(i));
  }
  return x;
}

template <typename Scalar>
struct GibbsOptions {
  int iters = 2000;
  int burn = 500;
  /// Holds K fixed instead of sampling it (used to isolate the beta update).
  std::optional<Matrix<Scalar>> fixed_precision;
};

template <typename Scalar>
struct PosteriorDraws {
  std::vector<int> lead_times;
  Matrix<Scalar> betas;  ///< draws x 2L, intercepts then slopes
  std::vector<Matrix<Scalar>> precisions;
  int burn_in = 0;
  int jitter_events = 0;
  Scalar max_split_rhat = std::numeric_limits<Scalar>::quiet_NaN();

  Index size() const { return betas.rows(); }
  Vector<Scalar> beta_mean() const { return betas.colwise().mean().transpose(); }
  Vector<Scalar> beta_sd() const {
    const RowVector<Scalar> mu = betas.colwise().mean();
    return ((betas.rowwise() - mu).array().square().colwise().sum() / Scalar(std::max<Index>(size() - 1, 1)))
        .sqrt()
        .transpose();
  }
};

/// Largest split-chain potential scale reduction over the given columns.
template <typename Scalar>
Scalar split_rhat(const Matrix<Scalar>& chain, Index first_col, Index cols) {
  const Index n = chain.rows() / 2;
  if (n < 2) return std::numeric_limits<Scalar>::quiet_NaN();
  Scalar worst = Scalar(1);
  for (Index j = first_col; j < first_col + cols; ++j) {
    const auto a = chain.col(j).head(n);
    const auto b = chain.col(j).segment(n, n);
    const Scalar ma = a.mean(), mb = b.mean();
    const Scalar va = (a.array() - ma).square().sum() / Scalar(n - 1);
    const Scalar vb = (b.array() - mb).square().sum() / Scalar(n - 1);
    const Scalar w = Scalar(0.5) * (va + vb);
    if (!(w > Scalar(0))) continue;
    const Scalar m = Scalar(0.5) * (ma + mb);
    const Scalar b_over_n = (ma - m) * (ma - m) + (mb - m) * (mb - m);
    const Scalar var_plus = Scalar(n - 1) / Scalar(n) * w + b_over_n;
    worst = std::max(worst, std::sqrt(var_plus / w));
  }
  return worst;
}

/// Gibbs sampler for log y = beta0 + beta1 log x + eps, eps ~ N(0, K^-1).
///
/// Each sweep draws beta | K from its Gaussian full conditional (cases with
/// unobserved leads contribute through the marginal precision of their
/// observed block), then imputes the unobserved residuals given the observed
/// ones, and draws K from the conjugate G-Wishart on the completed scatter.
template <typename Scalar>
PosteriorDraws<Scalar> gibbs_fit(const RegressionData<Scalar>& data, const ModelVariant& variant,
                                 const CoefficientPrior<Scalar>& prior_beta, const GWishartSpec<Scalar>& prior_k,
                                 const GibbsOptions<Scalar>& options, Rng& rng) {
  const Index n_cases = data.cases();
  const Index L = data.leads();
  if (L == 0) throw InputError("gibbs_fit: no lead times to model");
  if (options.iters <= options.burn || options.burn < 0) throw InputError("gibbs_fit: need iters > burn >= 0");
  if (prior_k.scale.rows() != L) throw InputError("gibbs_fit: precision prior has the wrong dimension");
  prior_k.validate();

  // Split cases into fully observed ones (summarized once) and partial ones.
  struct Partial {
    std::vector<Index> obs, miss;
    Vector<Scalar> lx, ly;
  };
  std::vector<Partial> partial;
  std::vector<Index> full_rows;
  Index total_rows = 0;
  for (Index d = 0; d < n_cases; ++d) {
    Partial p;
    p.obs = data.observed(d);
    total_rows += static_cast<Index>(p.obs.size());
    if (p.obs.empty()) continue;
    if (static_cast<Index>(p.obs.size()) == L) {
      full_rows.push_back(d);
      continue;
    }
    for (Index j = 0, k = 0; j < L; ++j) {
      if (k < static_cast<Index>(p.obs.size()) && p.obs[static_cast<std::size_t>(k)] == j)
        ++k;
      else
        p.miss.push_back(j);
    }
    p.lx.resize(static_cast<Index>(p.obs.size()));
    p.ly.resize(static_cast<Index>(p.obs.size()));
    for (std::size_t i = 0; i < p.obs.size(); ++i) {
      p.lx(static_cast<Index>(i)) = data.log_x(d, p.obs[i]);
      p.ly(static_cast<Index>(i)) = data.log_y(d, p.obs[i]);
    }
    partial.push_back(std::move(p));
  }
  if (total_rows == 0) throw InputError("gibbs_fit: training window has no usable observations");
  const Index n_used = static_cast<Index>(full_rows.size() + partial.size());

  Matrix<Scalar> full_lx(static_cast<Index>(full_rows.size()), L), full_ly(static_cast<Index>(full_rows.size()), L);
  for (std::size_t i = 0; i < full_rows.size(); ++i) {
    full_lx.row(static_cast<Index>(i)) = data.log_x.row(full_rows[i]);
    full_ly.row(static_cast<Index>(i)) = data.log_y.row(full_rows[i]);
  }
  const Scalar n_full = Scalar(full_rows.size());
  const Vector<Scalar> s_lx = full_lx.colwise().sum().transpose();
  const Vector<Scalar> s_y = full_ly.colwise().sum().transpose();
  const Matrix<Scalar> s_lxlx = full_lx.transpose() * full_lx;
  const Matrix<Scalar> s_ylx = full_ly.transpose() * full_lx;  // (b, a) = sum_d y_b lx_a

  // Prior on beta.
  const Matrix<Scalar> p_block = coefficient_block_precision(prior_beta, variant.coefficient_graph, data.lead_times);
  Matrix<Scalar> q_prior = Matrix<Scalar>::Zero(2 * L, 2 * L);
  q_prior.topLeftCorner(L, L) = p_block;
  q_prior.bottomRightCorner(L, L) = p_block;
  Vector<Scalar> mu_prior(2 * L);
  mu_prior.head(L).setConstant(prior_beta.intercept_mean);
  mu_prior.tail(L).setConstant(prior_beta.slope_mean);
  const Vector<Scalar> b_prior = q_prior * mu_prior;

  const GWishartSampler<Scalar> k_sampler(build_graph(variant.residual_graph, data.lead_times));

  PosteriorDraws<Scalar> out;
  out.lead_times = data.lead_times;
  out.burn_in = options.burn;
  out.betas.resize(options.iters - options.burn, 2 * L);
  out.precisions.reserve(static_cast<std::size_t>(options.iters - options.burn));

  Matrix<Scalar> k = options.fixed_precision ? *options.fixed_precision
                                             : Matrix<Scalar>(prior_k.df * prior_k.scale.inverse());
  if (k.rows() != L) throw InputError("gibbs_fit: fixed precision has the wrong dimension");
  Vector<Scalar> beta = mu_prior;
  Matrix<Scalar> q(2 * L, 2 * L);
  Vector<Scalar> b(2 * L);
  Matrix<Scalar> resid(n_used, L);

  for (int it = 0; it < options.iters; ++it) {
    // beta | K
    q = q_prior;
    b = b_prior;
    q.topLeftCorner(L, L) += n_full * k;
    const Matrix<Scalar> q01 = k * s_lx.asDiagonal();
    q.topRightCorner(L, L) += q01;
    q.bottomRightCorner(L, L) += k.cwiseProduct(s_lxlx);
    b.head(L) += k * s_y;
    b.tail(L) += k.cwiseProduct(s_ylx.transpose()).rowwise().sum();
    for (const Partial& p : partial) {
      const Index r = static_cast<Index>(p.obs.size());
      // marginal precision of the observed block: K_AA - K_AB K_BB^-1 K_BA
      Matrix<Scalar> prec = k(p.obs, p.obs);
      if (!p.miss.empty()) {
        const Matrix<Scalar> k_bb = k(p.miss, p.miss);
        const Matrix<Scalar> k_ba = k(p.miss, p.obs);
        prec -= k_ba.transpose() * Eigen::LLT<Matrix<Scalar>>(k_bb).solve(k_ba);
      }
      const Vector<Scalar> py = prec * p.ly;
      for (Index i = 0; i < r; ++i) {
        const Index ai = p.obs[static_cast<std::size_t>(i)];
        b(ai) += py(i);
        b(L + ai) += p.lx(i) * py(i);
        for (Index j = 0; j < r; ++j) {
          const Index aj = p.obs[static_cast<std::size_t>(j)];
          q(ai, aj) += prec(i, j);
          q(ai, L + aj) += prec(i, j) * p.lx(j);
          q(L + ai, L + aj) += p.lx(i) * prec(i, j) * p.lx(j);
        }
      }
    }
    q.bottomLeftCorner(L, L) = q.topRightCorner(L, L).transpose();

    Eigen::LLT<Matrix<Scalar>> llt(q);
    if (llt.info() != Eigen::Success) {
      ++out.jitter_events;
      q.diagonal().array() += Scalar(1e-8) * q.trace() / Scalar(2 * L);
      llt.compute(q);
      if (llt.info() != Eigen::Success)
        throw NumericalError("coefficient full conditional is singular even after diagonal jitter");
    }
    beta = llt.solve(b) + llt.matrixU().solve(rng.normal_vector<Scalar>(2 * L));

    if (!options.fixed_precision) {
      // residuals; unobserved leads drawn from eps_B | eps_A ~ N(-K_BB^-1 K_BA eps_A, K_BB^-1)
      const auto beta0 = beta.head(L);
      const auto beta1 = beta.tail(L);
      Index row = 0;
      for (Index d : full_rows) {
        resid.row(row++) =
            data.log_y.row(d) - beta0.transpose() - beta1.transpose().cwiseProduct(data.log_x.row(d));
      }
      for (const Partial& p : partial) {
        Vector<Scalar> e_obs(static_cast<Index>(p.obs.size()));
        for (std::size_t i = 0; i < p.obs.size(); ++i)
          e_obs(static_cast<Index>(i)) = p.ly(static_cast<Index>(i)) - beta0(p.obs[i]) - beta1(p.obs[i]) * p.lx(static_cast<Index>(i));
        const Matrix<Scalar> k_bb = k(p.miss, p.miss);
        const Eigen::LLT<Matrix<Scalar>> kb(k_bb);
        const Vector<Scalar> cond_mean = -kb.solve(Matrix<Scalar>(k(p.miss, p.obs)) * e_obs);
        const Vector<Scalar> e_miss =
            cond_mean + kb.matrixU().solve(rng.normal_vector<Scalar>(static_cast<Index>(p.miss.size())));
        for (std::size_t i = 0; i < p.obs.size(); ++i) resid(row, p.obs[i]) = e_obs(static_cast<Index>(i));
        for (std::size_t i = 0; i < p.miss.size(); ++i) resid(row, p.miss[i]) = e_miss(static_cast<Index>(i));
        ++row;
      }
      const Matrix<Scalar> scatter = resid.transpose() * resid;
      k = k_sampler.sample(gwishart_posterior(prior_k, scatter, n_used), rng);
    }

    if (it >= options.burn) {
      out.betas.row(it - options.burn) = beta.transpose();
      out.precisions.push_back(k);
    }
  }
  out.max_split_rhat = split_rhat(out.betas, L, L);
  return out;
}

/// Mean of the training-window production for one lead time.
double t0_fallback(std::span<const double> training_values);

template <typename Scalar>
struct PredictiveTrajectory {
  Matrix<Scalar> samples;     ///< m x 72 production paths (MW)
  std::vector<int> modelled;  ///< leads drawn from the posterior predictive
  Vector<Scalar> fallback;    ///< deterministic value per lead, NaN where modelled
};

/// Posterior predictive paths: per sample, a retained (beta, K) draw is picked
/// uniformly, log production is drawn from N(X beta, K^-1) on the modelled
/// leads and exponentiated; every other lead takes its fallback value.
template <typename Scalar>
PredictiveTrajectory<Scalar> predict_trajectory(const PosteriorDraws<Scalar>& draws,
                                                const Eigen::Ref<const Vector<Scalar>>& x,
                                                const LeadTimePartition& partition,
                                                const Eigen::Ref<const Vector<Scalar>>& fallbacks, Index m, Rng& rng) {
  if (m < 1) throw InputError("predict_trajectory: need at least one sample");
  if (x.size() != kHorizon || fallbacks.size() != kHorizon)
    throw InputError("predict_trajectory: covariates and fallbacks need 72 lead times");
  PredictiveTrajectory<Scalar> out;
  out.samples.resize(m, kHorizon);
  out.fallback = fallbacks;
  out.modelled = draws.lead_times;
  for (int lead : draws.lead_times) {
    if (std::find(partition.t_plus.begin(), partition.t_plus.end(), lead) == partition.t_plus.end())
      throw InputError("predict_trajectory: modelled lead " + std::to_string(lead) + " is not in T+");
    out.fallback(lead - 1) = std::numeric_limits<Scalar>::quiet_NaN();
  }
  for (int lead = 1; lead <= kHorizon; ++lead) {
    if (!std::isnan(out.fallback(lead - 1))) {
      out.samples.col(lead - 1).setConstant(out.fallback(lead - 1));
    } else if (std::find(draws.lead_times.begin(), draws.lead_times.end(), lead) == draws.lead_times.end()) {
      throw InputError("predict_trajectory: no fallback for lead " + std::to_string(lead));
    }
  }
  const Index L = static_cast<Index>(draws.lead_times.size());
  if (L == 0) return out;
  if (draws.size() == 0) throw StateError("predict_trajectory: posterior has no retained draws");

  Vector<Scalar> log_x(L);
  for (Index i = 0; i < L; ++i) {
    const Scalar xi = x(draws.lead_times[static_cast<std::size_t>(i)] - 1);
    if (!(xi > Scalar(0))) throw InputError("predict_trajectory: covariates must be positive on modelled leads");
    log_x(i) = std::log(xi);
  }
  std::vector<std::optional<Eigen::LLT<Matrix<Scalar>>>> factors(static_cast<std::size_t>(draws.size()));
  for (Index s = 0; s < m; ++s) {
    const std::size_t d = rng.index(static_cast<std::size_t>(draws.size()));
    if (!factors[d]) {
      factors[d].emplace(draws.precisions[d]);
      if (factors[d]->info() != Eigen::Success) throw NumericalError("posterior precision draw is not SPD");
    }
    const auto beta = draws.betas.row(static_cast<Index>(d));
    const Vector<Scalar> eps = factors[d]->matrixU().solve(rng.normal_vector<Scalar>(L));
    for (Index i = 0; i < L; ++i)
      out.samples(s, draws.lead_times[static_cast<std::size_t>(i)] - 1) =
          std::exp(beta(i) + beta(L + i) * log_x(i) + eps(i));
  }
  return out;
}

/// Settings for one issue date's fit-and-predict.
struct EngineConfig {
  ModelVariant variant = ModelVariant::fully_independent();
  CoefficientPrior<double> prior_beta;
  double precision_prior_df = 3.0;
  double precision_prior_scale = 1.0;
  GibbsOptions<double> gibbs;
  int samples = 1000;
  int window_days = 20;
  /// Leads in T+ with fewer training rows than this use the fallback value.
  int min_training_rows = 3;
};

/// Fallback value per lead: mean realized production at that lead over the
/// window; leads never realized in the window use realized leads sharing the
/// hour of day, then the lagged observation.
VectorXd training_fallbacks(const std::vector<ForecastCase>& window, const ForecastCase& target);

RegressionData<double> make_regression_data(const std::vector<ForecastCase>& window, std::span<const int> lead_times);

struct CaseForecast {
  Date issue_date;
  LeadTimePartition partition;
  PredictiveTrajectory<double> trajectory;
  int jitter_events = 0;
  double max_split_rhat = std::numeric_limits<double>::quiet_NaN();
};

/// Assembles the window, fits the variant and samples predictive paths for
/// `target`. Randomness comes from the "fit" and "predict" substreams of
/// `root_seed` keyed by the target date.
CaseForecast forecast_case(const CaseMap& cases, Date target, const EngineConfig& config, std::uint64_t root_seed);

/// Days since the Unix epoch; the substream index for date-keyed randomness.
inline std::int64_t date_key(Date d) { return d.time_since_epoch().count(); }

}  // namespace pvtraj
