#include "pvtraj/copula.hpp"

#include "pvtraj/normal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <vector>

namespace pvtraj {

double normal_score(double pit) {
  if (!(pit >= 0.0 && pit <= 1.0)) throw InputError("PIT value outside [0, 1]");
  return normal_quantile(std::clamp(pit, kPitClamp, 1.0 - kPitClamp));
}

VectorXd normal_scores(const Eigen::Ref<const VectorXd>& pit) {
  VectorXd z(pit.size());
  for (Index i = 0; i < pit.size(); ++i) z(i) = std::isnan(pit(i)) ? kMissing<double> : normal_score(pit(i));
  return z;
}

ResidualArchive::ResidualArchive(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw InputError("residual archive capacity must be >= 1");
}

void ResidualArchive::add(Date date, VectorXd z) {
  if (!entries_.empty() && date <= entries_.back().first)
    throw InputError("residual archive dates must be increasing");
  if (!entries_.empty() && z.size() != entries_.front().second.size())
    throw InputError("residual archive vectors must share one length");
  for (Index i = 0; i < z.size(); ++i)
    if (std::isinf(z(i))) throw InputError("residual archive scores must be finite");
  entries_.emplace_back(date, std::move(z));
  while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

MatrixXd ResidualArchive::matrix() const {
  if (entries_.empty()) return {};
  MatrixXd z(size(), entries_.front().second.size());
  Index r = 0;
  for (const auto& [date, v] : entries_) z.row(r++) = v.transpose();
  return z;
}

std::string_view to_string(CopulaStructure s) { return s == CopulaStructure::full ? "full" : "ar1"; }

std::optional<CopulaStructure> parse_copula_structure(std::string_view text) {
  if (text == "full") return CopulaStructure::full;
  if (text == "ar1" || text == "ar1-band") return CopulaStructure::ar1_band;
  return std::nullopt;
}

MatrixXd repair_correlation(const MatrixXd& c, double floor) {
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (c + c.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("eigen-decomposition of the copula correlation failed");
  if (eig.eigenvalues().minCoeff() >= floor) {
    MatrixXd out = 0.5 * (c + c.transpose());
    out.diagonal().setOnes();
    return out;
  }
  const VectorXd lambda = eig.eigenvalues().cwiseMax(floor);
  MatrixXd out = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  const VectorXd s = out.diagonal().cwiseSqrt().cwiseInverse();
  out = s.asDiagonal() * out * s.asDiagonal();
  out = 0.5 * (out + out.transpose());
  out.diagonal().setOnes();
  return out;
}

CopulaCorrelation estimate_correlation(const MatrixXd& z, CopulaStructure structure, Index min_pairs) {
  const Index d = z.cols();
  CopulaCorrelation out;
  out.matrix = MatrixXd::Identity(d, d);
  out.valid.setConstant(d, d, false);
  const MatrixXd present = (z.array() == z.array()).cast<double>().matrix();  // 1 where not NaN
  const MatrixXd filled = z.array().isNaN().select(0.0, z);
  const MatrixXd counts = present.transpose() * present;

  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      if (counts(i, j) < static_cast<double>(min_pairs)) continue;
      if (i == j) {
        out.valid(i, i) = true;
        continue;
      }
      if (structure == CopulaStructure::ar1_band && j - i > 1) continue;
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (Index r = 0; r < z.rows(); ++r) {
        if (present(r, i) == 0.0 || present(r, j) == 0.0) continue;
        const double a = filled(r, i), b = filled(r, j);
        sx += a, sy += b, sxx += a * a, syy += b * b, sxy += a * b;
      }
      const double n = counts(i, j);
      const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
      if (!(vx > 0.0 && vy > 0.0)) continue;
      const double r = std::clamp((sxy - sx * sy / n) / std::sqrt(vx * vy), -1.0, 1.0);
      out.matrix(i, j) = out.matrix(j, i) = r;
      out.valid(i, j) = out.valid(j, i) = true;
    }
  }
  out.matrix = repair_correlation(out.matrix);
  return out;
}

MatrixXd couple_samples(const MatrixXd& marginal, const CopulaCorrelation& correlation, Rng& rng) {
  const Index m = marginal.rows(), d = marginal.cols();
  if (m < 2) throw InputError("copula coupling needs at least two samples");
  if (correlation.matrix.rows() != d || correlation.matrix.cols() != d)
    throw InputError("copula correlation dimension does not match the samples");

  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(correlation.matrix);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-8)
    throw StateError("copula correlation is not positive semi-definite");
  const MatrixXd root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const MatrixXd joint = rng.normal_matrix(m, d) * root.transpose();

  MatrixXd out = marginal;
  std::vector<Index> order(static_cast<std::size_t>(m)), value_order(static_cast<std::size_t>(m));
  for (Index j = 0; j < d; ++j) {
    const auto col = marginal.col(j);
    if (col.maxCoeff() == col.minCoeff()) continue;
    std::iota(value_order.begin(), value_order.end(), Index{0});
    std::stable_sort(value_order.begin(), value_order.end(), [&](Index a, Index b) { return col(a) < col(b); });
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return joint(a, j) < joint(b, j); });
    // the sample with the k-th smallest normal draw receives the k-th smallest value
    for (Index k = 0; k < m; ++k) out(order[static_cast<std::size_t>(k)], j) = col(value_order[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace pvtraj
