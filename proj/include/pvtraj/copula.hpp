#pragma once

#include "pvtraj/core.hpp"
#include "pvtraj/random.hpp"
#include "pvtraj/timeutil.hpp"

#include <deque>
#include <optional>
#include <string_view>
#include <utility>

namespace pvtraj {

/// PITs are clamped to [kPitClamp, 1 - kPitClamp] before the normal quantile.
inline constexpr double kPitClamp = 1e-6;

double normal_score(double pit);

/// Element-wise normal score; NaN entries (undefined PITs) stay NaN.
VectorXd normal_scores(const Eigen::Ref<const VectorXd>& pit);

/// Rolling store of normal-score vectors, one per verified issue date.
class ResidualArchive {
 public:
  explicit ResidualArchive(int capacity = 100);

  /// Dates must arrive in increasing order; the oldest entry is evicted once
  /// the archive is full.
  void add(Date date, VectorXd z);
  Index size() const { return static_cast<Index>(entries_.size()); }
  int capacity() const { return capacity_; }
  const std::deque<std::pair<Date, VectorXd>>& entries() const { return entries_; }

  /// size() x 72 matrix of scores, NaN where undefined.
  MatrixXd matrix() const;

 private:
  int capacity_;
  std::deque<std::pair<Date, VectorXd>> entries_;
};

enum class CopulaStructure { full, ar1_band };

std::string_view to_string(CopulaStructure s);
std::optional<CopulaStructure> parse_copula_structure(std::string_view text);

struct CopulaCorrelation {
  MatrixXd matrix;
  /// False where an entry had too few complete pairs and was set to zero.
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
};

/// Nearest correlation by eigenvalue clipping at `floor`, then unit diagonal.
MatrixXd repair_correlation(const MatrixXd& c, double floor = 1e-6);

/// Pairwise-complete correlation of the columns of `z` (rows are dates).
CopulaCorrelation estimate_correlation(const MatrixXd& z, CopulaStructure structure, Index min_pairs = 10);

/// Reorders every non-constant column of `marginal` (m x d) to follow the
/// ranks of m joint normal draws with the given correlation. Each output
/// column is a permutation of the input column.
MatrixXd couple_samples(const MatrixXd& marginal, const CopulaCorrelation& correlation, Rng& rng);

}  // namespace pvtraj
