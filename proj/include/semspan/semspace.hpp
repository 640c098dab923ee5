#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semspan/matrix.hpp"

namespace semspan {

/// Identifies a point of comparison: a whole community, or one of its
/// clusters when `cluster` is set.
struct NodeLabel {
  std::string community;
  std::optional<std::size_t> cluster;

  /// "community" or "community#ordinal".
  std::string str() const;
  static NodeLabel parse(std::string_view text);

  auto operator<=>(const NodeLabel&) const = default;
  bool operator==(const NodeLabel&) const = default;
};

struct Centroid {
  std::vector<double> vector;
  NodeLabel label;
  std::size_t support = 0;
};

/// (a . b) / (|a| |b|). Throws UsageError on length mismatch or a zero vector.
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// Coordinate-wise mean of the rows. Throws DataError when there are none.
Centroid community_centroid(const Matrix& rows, std::string community);

/// Copies the selected rows into a new matrix.
Matrix gather_rows(const Matrix& points, std::span<const std::size_t> rows);

using Assignments = std::vector<std::size_t>;

struct KMeansResult {
  Matrix centroids;  // c x dim
  Assignments assignments;
  double inertia = 0.0;
  /// Inertia after every Lloyd iteration of the winning restart.
  std::vector<double> trace;
  std::size_t best_restart = 0;
};

/// Lloyd's algorithm with k-means++ seeding and Euclidean distance; the
/// restart with the lowest final inertia wins (lowest index on ties). A
/// cluster that empties out takes the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, std::size_t c, std::uint64_t seed,
                    std::size_t restarts = 10, std::size_t max_iterations = 300);

/// Sum of squared distances from each point to its assigned centroid.
double inertia(const Matrix& points, const Matrix& centroids, std::span<const std::size_t> assignments);

/// (BGSS / (C - 1)) / (WGSS / (N - C)). Requires 2 <= C < N and no empty
/// cluster. Returns +inf when WGSS = 0 < BGSS and 0 when both vanish.
double calinski_harabasz(const Matrix& points, std::span<const std::size_t> assignments);

/// Mean silhouette width. Members of singleton clusters score 0, as do
/// points with a = b = 0. Requires at least two non-empty clusters.
double silhouette(const Matrix& points, std::span<const std::size_t> assignments);

struct SelectionParams {
  std::size_t c_min = 2;
  std::size_t c_max = 10;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
};

struct SelectionRow {
  std::size_t c = 0;
  double inertia = 0.0;
  double calinski = 0.0;
  double silhouette = 0.0;
};

struct ClusterSelection {
  std::size_t c_min = 0;
  std::size_t c_max = 0;
  std::vector<SelectionRow> table;
  std::size_t chosen = 0;
  std::string rule;
};

/// Runs k-means for every c in [c_min, c_max] and picks the silhouette
/// maximum, breaking ties by the larger Calinski-Harabasz score and then the
/// smaller c. Inertia is recorded but not used. Requires 2 <= c_min <= c_max < N.
ClusterSelection select_cluster_count(const Matrix& points, const SelectionParams& params);

/// The c x k matrix of cluster centroids of one community.
struct SemanticSpan {
  std::string community;
  Matrix centroids;
  std::vector<std::size_t> support;
  std::vector<std::string> doc_ids;
  Assignments assignments;  // parallel to doc_ids
  ClusterSelection selection;
  std::vector<std::string> warnings;

  std::size_t size() const { return centroids.rows; }
  std::vector<Centroid> labeled_centroids() const;
  /// Indices into doc_ids of the members of one cluster.
  std::vector<std::size_t> members(std::size_t cluster) const;

  nlohmann::ordered_json to_json() const;
  /// c,inertia,calinski_harabasz,silhouette
  std::string metrics_csv() const;
};

/// Selects c and clusters one community's document vectors. Communities too
/// small for the candidate range, or whose best silhouette is not positive,
/// collapse to a single centroid and carry a warning.
SemanticSpan semantic_span(std::string community, const Matrix& points,
                           std::vector<std::string> doc_ids, const SelectionParams& params);

}  // namespace semspan
