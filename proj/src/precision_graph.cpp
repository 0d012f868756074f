#include "pvtraj/precision_graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace pvtraj {

std::string_view to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::independent: return "independent";
    case GraphKind::ar1: return "ar1";
    case GraphKind::ar2: return "ar2";
  }
  return "?";
}

std::optional<GraphKind> parse_graph_kind(std::string_view text) {
  if (text == "independent" || text == "indep") return GraphKind::independent;
  if (text == "ar1") return GraphKind::ar1;
  if (text == "ar2") return GraphKind::ar2;
  return std::nullopt;
}

PrecisionGraph::PrecisionGraph(std::vector<int> lead_times) : lead_times_(std::move(lead_times)) {
  for (std::size_t i = 1; i < lead_times_.size(); ++i)
    if (lead_times_[i] <= lead_times_[i - 1]) throw InputError("graph lead times must be strictly increasing");
  adjacency_.setConstant(size(), size(), false);
}

void PrecisionGraph::add_edge(Index i, Index j) {
  if (i == j) throw InputError("self-loops are not allowed in a precision graph");
  adjacency_(i, j) = adjacency_(j, i) = true;
}

std::vector<std::pair<Index, Index>> PrecisionGraph::edges() const {
  std::vector<std::pair<Index, Index>> e;
  for (Index i = 0; i < size(); ++i)
    for (Index j = i + 1; j < size(); ++j)
      if (adjacency_(i, j)) e.emplace_back(i, j);
  return e;
}

PrecisionGraph build_graph(GraphKind kind, std::span<const int> lead_times) {
  PrecisionGraph g(std::vector<int>(lead_times.begin(), lead_times.end()));
  const int k = band_order(kind);
  for (Index i = 0; i < g.size(); ++i)
    for (Index j = i + 1; j <= std::min<Index>(i + k, g.size() - 1); ++j)
      if (std::abs(lead_times[static_cast<std::size_t>(j)] - lead_times[static_cast<std::size_t>(i)]) <= k)
        g.add_edge(i, j);
  return g;
}

CliqueSequence perfect_clique_sequence(const PrecisionGraph& graph) {
  const Index n = graph.size();
  std::vector<std::vector<Index>> candidates;
  for (Index v = 0; v < n; ++v) {
    std::vector<Index> clique{v};
    for (Index u = v + 1; u < n; ++u)
      if (graph.adjacent(v, u)) clique.push_back(u);
    for (std::size_t a = 1; a < clique.size(); ++a)
      for (std::size_t b = a + 1; b < clique.size(); ++b)
        if (!graph.adjacent(clique[a], clique[b]))
          throw UnsupportedStructure("precision graph is not decomposable in lead-time order (vertex " +
                                     std::to_string(v) + ")");
    const bool contained = std::any_of(candidates.begin(), candidates.end(), [&](const auto& c) {
      return std::includes(c.begin(), c.end(), clique.begin(), clique.end());
    });
    if (!contained) candidates.push_back(std::move(clique));
  }

  CliqueSequence seq;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const auto& clique : candidates) {
    std::vector<Index> sep;
    for (Index v : clique)
      if (seen[static_cast<std::size_t>(v)]) sep.push_back(v);
    // running intersection: the separator must sit inside one earlier clique
    if (!sep.empty()) {
      const bool covered = std::any_of(seq.cliques.begin(), seq.cliques.end(), [&](const auto& c) {
        return std::includes(c.begin(), c.end(), sep.begin(), sep.end());
      });
      if (!covered) throw UnsupportedStructure("precision graph cliques violate the running intersection property");
    }
    for (Index v : clique) seen[static_cast<std::size_t>(v)] = true;
    seq.cliques.push_back(clique);
    seq.separators.push_back(std::move(sep));
  }
  return seq;
}

}  // namespace pvtraj
