#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace pvtraj {

/// Forecast horizon in hours.
inline constexpr int kHorizon = 72;
/// Native step of the NWP accumulation fields.
inline constexpr int kNativeStep = 3;
inline constexpr int kHoursPerDay = 24;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Eigen::Index;
using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

template <typename Scalar = double>
inline constexpr Scalar kMissing = std::numeric_limits<Scalar>::quiet_NaN();

/// Bad caller input: malformed files, violated preconditions, missing history.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation invoked on an object that cannot support it (e.g. no posterior draws).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Factorization or sampling failure that survived the jitter retry.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Graph outside the decomposable band family the samplers support.
class UnsupportedStructure : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration or command-line misuse.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Day block (0, 1, 2) of a 1-based lead time.
constexpr int day_block(int lead_h) { return (lead_h - 1) / kHoursPerDay; }

}  // namespace pvtraj
