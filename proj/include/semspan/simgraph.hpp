#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semspan/matrix.hpp"
#include "semspan/semspace.hpp"

namespace semspan {

/// Thresholded cosine-similarity graph over labeled centroids. Edge (i, j)
/// exists iff i != j and similarity(i, j) >= tau.
struct SimilarityGraph {
  std::vector<NodeLabel> nodes;
  Matrix similarity;  // symmetric, unit diagonal
  double tau = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted

  std::size_t size() const { return nodes.size(); }
  bool has_edge(std::size_t i, std::size_t j) const {
    return i != j && similarity(i, j) >= tau;
  }

  bool operator==(const SimilarityGraph&) const = default;
};

enum class SubGraphKind { kClique, kPartial, kSingleton };

std::string_view to_string(SubGraphKind kind);
SubGraphKind parse_subgraph_kind(std::string_view text);

/// One connected component with its classification.
struct SubGraph {
  std::vector<std::size_t> members;  // node indices, ascending
  std::vector<NodeLabel> labels;     // parallel to members
  SubGraphKind kind = SubGraphKind::kSingleton;
  std::size_t edge_count = 0;
  std::vector<std::string> communities;  // sorted, distinct
};

/// Throws UsageError on duplicate labels, mismatched dimensions or a zero
/// centroid.
SimilarityGraph build_graph(std::span<const Centroid> centroids, double tau);

/// Same nodes and similarities, edges recomputed at a new threshold.
SimilarityGraph rethreshold(const SimilarityGraph& graph, double tau);

/// Components ordered by their lexicographically smallest member label.
std::vector<SubGraph> connected_components(const SimilarityGraph& graph);

/// Pools the documents of every cluster in the sub-graph. A node without a
/// cluster ordinal stands for all documents of its community. Throws
/// DataError for labels that no span provides.
std::vector<std::string> assign_documents(const SubGraph& sub, std::span<const SemanticSpan> spans);

enum class GraphFormat { kDot, kJson };

std::string to_dot(const SimilarityGraph& graph, std::span<const SubGraph> subs);

/// {nodes:[{label, community, cluster}], tau, sim, edges, components:[{members, kind, communities}]}
nlohmann::ordered_json graph_to_json(const SimilarityGraph& graph, std::span<const SubGraph> subs);
/// Rebuilds the graph; edges must agree with sim >= tau.
SimilarityGraph graph_from_json(const nlohmann::json& j);

/// Writes the graph in the requested format. Throws DataError when the path
/// cannot be written.
void export_graph(const SimilarityGraph& graph, std::span<const SubGraph> subs, GraphFormat format,
                  const std::filesystem::path& path);

struct SweepRow {
  double tau = 0.0;
  std::size_t edges = 0;
  std::size_t components = 0;
  std::size_t cliques = 0;
  std::size_t partials = 0;
  std::size_t singletons = 0;
};

/// Component structure of the graph at each threshold.
std::vector<SweepRow> tau_sweep(const SimilarityGraph& graph, std::span<const double> taus);
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace semspan
