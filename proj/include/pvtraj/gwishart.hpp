#pragma once

#include "pvtraj/core.hpp"
#include "pvtraj/precision_graph.hpp"
#include "pvtraj/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pvtraj {

/// G-Wishart W_G(df, scale) with density proportional to
/// |K|^((df-2)/2) exp(-tr(scale K)/2) on graph-constrained SPD matrices.
/// For a complete graph on p vertices this is Wishart(df + p - 1, scale^-1).
template <typename Scalar>
struct GWishartSpec {
  Scalar df = Scalar(3);
  Matrix<Scalar> scale;

  static GWishartSpec identity(Index n, Scalar df = Scalar(3)) { return {df, Matrix<Scalar>::Identity(n, n)}; }

  void validate() const {
    if (!(df > Scalar(2))) throw InputError("G-Wishart degrees of freedom must exceed 2");
    if (scale.rows() != scale.cols()) throw InputError("G-Wishart scale must be square");
    if (!scale.isApprox(scale.transpose(), Scalar(1e-10)))
      throw InputError("G-Wishart scale must be symmetric");
    if (Eigen::LLT<Matrix<Scalar>>(scale).info() != Eigen::Success)
      throw InputError("G-Wishart scale must be positive definite");
  }
};

/// Wishart(df, scale) draw via the Bartlett decomposition; mean df * scale.
/// `scale_root` is any square root R with R R^T = scale.
template <typename Scalar, typename Derived>
Matrix<Scalar> sample_wishart_root(Rng& rng, Scalar df, const Eigen::MatrixBase<Derived>& scale_root) {
  const Index p = scale_root.rows();
  Matrix<Scalar> a = Matrix<Scalar>::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(static_cast<Scalar>(rng.chi_square(static_cast<double>(df) - static_cast<double>(i))));
    for (Index j = 0; j < i; ++j) a(i, j) = static_cast<Scalar>(rng.normal());
  }
  const Matrix<Scalar> b = scale_root * a.template triangularView<Eigen::Lower>();
  return b * b.transpose();
}

template <typename Scalar>
Matrix<Scalar> sample_wishart(Rng& rng, Scalar df, const Matrix<Scalar>& scale) {
  if (!(df > Scalar(scale.rows() - 1))) throw InputError("Wishart degrees of freedom too small for dimension");
  Eigen::LLT<Matrix<Scalar>> llt(scale);
  if (llt.info() != Eigen::Success) throw NumericalError("Wishart scale is not positive definite");
  return sample_wishart_root(rng, df, llt.matrixL().toDenseMatrix());
}

/// Exact sampler for G-Wishart distributions on decomposable graphs whose
/// lead-time order is a perfect elimination ordering.
///
/// The covariance K^-1 of a decomposable G-Wishart is hyper-inverse Wishart:
/// its clique blocks are drawn in perfect order (first clique inverse-Wishart,
/// later cliques through the residual/separator conditional), and K is then
/// the sum of padded clique precisions minus padded separator precisions.
/// Entries outside the graph are never touched, so the zero pattern is exact.
template <typename Scalar>
class GWishartSampler {
 public:
  explicit GWishartSampler(PrecisionGraph graph) : graph_(std::move(graph)), seq_(perfect_clique_sequence(graph_)) {}

  const PrecisionGraph& graph() const { return graph_; }

  Matrix<Scalar> sample(const GWishartSpec<Scalar>& spec, Rng& rng) const {
    const Index n = graph_.size();
    if (spec.scale.rows() != n || spec.scale.cols() != n)
      throw InputError("G-Wishart scale dimension does not match the graph");
    const Scalar df = spec.df;
    Matrix<Scalar> sigma = Matrix<Scalar>::Zero(n, n);
    Matrix<Scalar> k = Matrix<Scalar>::Zero(n, n);

    for (std::size_t c = 0; c < seq_.cliques.size(); ++c) {
      const auto& clique = seq_.cliques[c];
      const auto& sep = seq_.separators[c];
      std::vector<Index> rest;
      for (Index v : clique)
        if (std::find(sep.begin(), sep.end(), v) == sep.end()) rest.push_back(v);
      const Index ns = static_cast<Index>(sep.size());
      const Index nr = static_cast<Index>(rest.size());

      const Matrix<Scalar> d_rr = spec.scale(rest, rest);
      if (ns == 0) {
        // Sigma_RR ~ IW(df, D_RR)  <=>  Sigma_RR^-1 ~ Wishart(df + |R| - 1, D_RR^-1)
        const Matrix<Scalar> w = wishart_with_inverse_scale(rng, df + Scalar(nr - 1), d_rr);
        const Matrix<Scalar> s_rr = invert_spd(w);
        sigma(rest, rest) = s_rr;
        k(rest, rest) += w;
        continue;
      }

      const Matrix<Scalar> d_ss = spec.scale(sep, sep);
      const Matrix<Scalar> d_rs = spec.scale(rest, sep);
      const Eigen::LLT<Matrix<Scalar>> d_ss_llt(d_ss);
      const Matrix<Scalar> d_ss_inv = d_ss_llt.solve(Matrix<Scalar>::Identity(ns, ns));
      const Matrix<Scalar> mean_u = d_rs * d_ss_inv;
      const Matrix<Scalar> d_cond = d_rr - mean_u * d_rs.transpose();

      // Sigma_{R|S} ~ IW(df + |S|, D_{RR.S})
      const Matrix<Scalar> w = wishart_with_inverse_scale(rng, df + Scalar(ns + nr - 1), d_cond);
      const Matrix<Scalar> s_cond = invert_spd(w);
      // Sigma_RS Sigma_SS^-1 ~ MN(D_RS D_SS^-1, Sigma_{R|S}, D_SS^-1)
      const Matrix<Scalar> l_cond = Eigen::LLT<Matrix<Scalar>>(s_cond).matrixL().toDenseMatrix();
      const Matrix<Scalar> l_ss_inv = Eigen::LLT<Matrix<Scalar>>(d_ss_inv).matrixL().toDenseMatrix();
      const Matrix<Scalar> u = mean_u + l_cond * rng.normal_matrix<Scalar>(nr, ns) * l_ss_inv.transpose();

      const Matrix<Scalar> s_ss = sigma(sep, sep);
      const Matrix<Scalar> s_rs = u * s_ss;
      sigma(rest, sep) = s_rs;
      sigma(sep, rest) = s_rs.transpose();
      sigma(rest, rest) = s_cond + s_rs * u.transpose();

      k(clique, clique) += invert_spd(Matrix<Scalar>(sigma(clique, clique)));
      k(sep, sep) -= invert_spd(s_ss);
    }
    return Scalar(0.5) * (k + k.transpose());
  }

 private:
  static Matrix<Scalar> invert_spd(const Matrix<Scalar>& m) {
    Eigen::LLT<Matrix<Scalar>> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError("G-Wishart clique block lost positive definiteness");
    return llt.solve(Matrix<Scalar>::Identity(m.rows(), m.cols()));
  }

  // Wishart(df, d^-1) using the inverse transpose of chol(d) as the scale root.
  static Matrix<Scalar> wishart_with_inverse_scale(Rng& rng, Scalar df, const Matrix<Scalar>& d) {
    Eigen::LLT<Matrix<Scalar>> llt(d);
    if (llt.info() != Eigen::Success) throw NumericalError("G-Wishart scale block is not positive definite");
    const Index p = d.rows();
    const Matrix<Scalar> root = llt.matrixU().solve(Matrix<Scalar>::Identity(p, p));
    return sample_wishart_root(rng, df, root);
  }

  PrecisionGraph graph_;
  CliqueSequence seq_;
};

template <typename Scalar>
Matrix<Scalar> sample_gwishart(const GWishartSpec<Scalar>& spec, const PrecisionGraph& graph, Rng& rng) {
  spec.validate();
  return GWishartSampler<Scalar>(graph).sample(spec, rng);
}

/// Conjugate update W_G(df, D) -> W_G(df + n_obs, D + S).
template <typename Scalar>
GWishartSpec<Scalar> gwishart_posterior(const GWishartSpec<Scalar>& prior, const Matrix<Scalar>& scatter,
                                        Index n_obs) {
  if (scatter.rows() != prior.scale.rows() || scatter.cols() != prior.scale.cols())
    throw InputError("residual scatter dimension does not match the prior scale");
  if (scatter.size() > 0) {
    const Scalar tol = Scalar(1e-10) * std::max(Scalar(1), scatter.cwiseAbs().maxCoeff());
    if ((scatter - scatter.transpose()).cwiseAbs().maxCoeff() > tol)
      throw InputError("residual scatter must be symmetric");
  }
  if (n_obs < 0) throw InputError("number of observations must be >= 0");
  return {prior.df + Scalar(n_obs), prior.scale + scatter};
}

}  // namespace pvtraj
