#pragma once

#include "pvtraj/core.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace pvtraj {

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seeded random stream. All randomness in the engine flows through this
/// type so that a run is reproducible from one root seed.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  /// Independent stream for (root, label, index), e.g. ("fit", date).
  static Rng substream(std::uint64_t root, std::string_view label, std::int64_t index = 0) {
    return Rng(mix_seed(root ^ mix_seed(hash_label(label) ^ mix_seed(static_cast<std::uint64_t>(index)))));
  }

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }

  /// Gamma(shape, scale = 1).
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
  double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  template <typename Scalar = double>
  Vector<Scalar> normal_vector(Index n) {
    Vector<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v(i) = static_cast<Scalar>(normal());
    return v;
  }

  template <typename Scalar = double>
  Matrix<Scalar> normal_matrix(Index rows, Index cols) {
    Matrix<Scalar> m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(normal());
    return m;
  }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pvtraj
