#pragma once

#include "pvtraj/core.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace pvtraj {

enum class GraphKind { independent, ar1, ar2 };

std::string_view to_string(GraphKind kind);
std::optional<GraphKind> parse_graph_kind(std::string_view text);

/// Band order of a graph kind (0 for independent).
constexpr int band_order(GraphKind kind) {
  switch (kind) {
    case GraphKind::ar1: return 1;
    case GraphKind::ar2: return 2;
    default: return 0;
  }
}

/// Undirected conditional-independence graph over active lead times.
class PrecisionGraph {
 public:
  PrecisionGraph() = default;
  /// Edgeless graph over strictly increasing lead times.
  explicit PrecisionGraph(std::vector<int> lead_times);

  Index size() const { return static_cast<Index>(lead_times_.size()); }
  const std::vector<int>& lead_times() const { return lead_times_; }

  bool adjacent(Index i, Index j) const { return i != j && adjacency_(i, j); }
  void add_edge(Index i, Index j);
  std::vector<std::pair<Index, Index>> edges() const;

 private:
  std::vector<int> lead_times_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency_;
};

/// Band graph: (i, j) is an edge iff |i - j| <= k and |t_i - t_j| <= k.
PrecisionGraph build_graph(GraphKind kind, std::span<const int> lead_times);

/// Maximal cliques in a perfect sequence with their separators
/// (separators[0] is empty).
struct CliqueSequence {
  std::vector<std::vector<Index>> cliques;
  std::vector<std::vector<Index>> separators;
};

/// Requires the natural vertex order to be a perfect elimination ordering;
/// throws UnsupportedStructure otherwise.
CliqueSequence perfect_clique_sequence(const PrecisionGraph& graph);

}  // namespace pvtraj
