#include "semspan/semspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "semspan/error.hpp"
#include "semspan/rng.hpp"

namespace semspan {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t cluster_count(std::span<const std::size_t> assignments) {
  std::size_t c = 0;
  for (auto a : assignments) c = std::max(c, a + 1);
  return c;
}

std::vector<std::size_t> cluster_sizes(std::span<const std::size_t> assignments, std::size_t c) {
  std::vector<std::size_t> sizes(c, 0);
  for (auto a : assignments) ++sizes[a];
  return sizes;
}

Matrix cluster_means(const Matrix& points, std::span<const std::size_t> assignments, std::size_t c) {
  Matrix means(c, points.cols, 0.0);
  std::vector<std::size_t> sizes(c, 0);
  for (std::size_t i = 0; i < points.rows; ++i) {
    auto row = points.row(i);
    auto m = means.row(assignments[i]);
    for (std::size_t j = 0; j < points.cols; ++j) m[j] += row[j];
    ++sizes[assignments[i]];
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (sizes[k] == 0) continue;
    for (double& v : means.row(k)) v /= static_cast<double>(sizes[k]);
  }
  return means;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string NodeLabel::str() const {
  return cluster ? community + "#" + std::to_string(*cluster) : community;
}

NodeLabel NodeLabel::parse(std::string_view text) {
  const auto hash = text.rfind('#');
  if (hash != std::string_view::npos && hash + 1 < text.size() &&
      std::all_of(text.begin() + static_cast<std::ptrdiff_t>(hash) + 1, text.end(),
                  [](char ch) { return ch >= '0' && ch <= '9'; })) {
    return {std::string(text.substr(0, hash)), std::stoul(std::string(text.substr(hash + 1)))};
  }
  return {std::string(text), std::nullopt};
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("cosine_sim: vectors differ in length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw UsageError("cosine_sim: undefined for a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Centroid community_centroid(const Matrix& rows, std::string community) {
  if (rows.rows == 0) throw DataError("community '" + community + "' has no documents");
  Centroid c;
  c.vector.assign(rows.cols, 0.0);
  for (std::size_t i = 0; i < rows.rows; ++i) {
    auto r = rows.row(i);
    for (std::size_t j = 0; j < rows.cols; ++j) c.vector[j] += r[j];
  }
  for (double& v : c.vector) v /= static_cast<double>(rows.rows);
  c.label = {std::move(community), std::nullopt};
  c.support = rows.rows;
  return c;
}

Matrix gather_rows(const Matrix& points, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), points.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = points.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// K-Means

namespace {

Matrix kmeans_plus_plus(const Matrix& points, std::size_t c, Rng& rng) {
  const std::size_t n = points.rows;
  Matrix centers(c, points.cols);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t k = 0; k < c; ++k) {
    auto src = points.row(pick);
    std::copy(src.begin(), src.end(), centers.row(k).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(k)));
      total += d2[i];
    }
    if (k + 1 == c) break;
    if (total <= 0.0) {
      pick = rng.below(n);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centers;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iterations) {
  const std::size_t n = points.rows;
  const std::size_t c = centroids.rows;
  KMeansResult r;
  r.assignments.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
      const double d = squared_distance(points.row(i), centroids.row(k));
      if (d < best) {
        best = d;
        r.assignments[i] = k;
      }
    }
    dist[i] = best;
  }

  // Moves the point farthest from its centroid into each empty cluster.
  // Returns whether anything moved.
  auto repair = [&] {
    auto sizes = cluster_sizes(r.assignments, c);
    bool moved = false;
    for (std::size_t k = 0; k < c; ++k) {
      if (sizes[k] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[r.assignments[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      }
      if (far == n) throw InvariantError("kmeans: cannot repair an empty cluster");
      --sizes[r.assignments[far]];
      r.assignments[far] = k;
      dist[far] = 0.0;
      sizes[k] = 1;
      moved = true;
    }
    return moved;
  };

  bool converged = false;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    repair();
    centroids = cluster_means(points, r.assignments, c);
    r.trace.push_back(inertia(points, centroids, r.assignments));

    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best_k = r.assignments[i];
      double best = squared_distance(points.row(i), centroids.row(best_k));
      for (std::size_t k = 0; k < c; ++k) {
        const double d = squared_distance(points.row(i), centroids.row(k));
        if (d < best) {
          best = d;
          best_k = k;
        }
      }
      dist[i] = best;
      if (best_k != r.assignments[i]) {
        r.assignments[i] = best_k;
        changed = true;
      }
    }
    if (!changed) {
      converged = true;
      break;
    }
  }
  // Out of iterations right after a reassignment: the last step may have
  // emptied a cluster (coincident points and rounding in the means).
  if (!converged && repair()) {
    centroids = cluster_means(points, r.assignments, c);
    r.trace.push_back(inertia(points, centroids, r.assignments));
  }
  r.centroids = std::move(centroids);
  r.inertia = inertia(points, r.centroids, r.assignments);
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t c, std::uint64_t seed, std::size_t restarts,
                    std::size_t max_iterations) {
  if (c < 1) throw UsageError("kmeans: c must be at least 1");
  if (c > points.rows) throw UsageError("kmeans: c exceeds the number of points");
  restarts = std::max<std::size_t>(restarts, 1);
  KMeansResult best;
  for (std::size_t rs = 0; rs < restarts; ++rs) {
    Rng rng(derive_seed(seed, rs));
    auto run = lloyd(points, kmeans_plus_plus(points, c, rng), max_iterations);
    run.best_restart = rs;
    if (rs == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

double inertia(const Matrix& points, const Matrix& centroids, std::span<const std::size_t> assignments) {
  if (assignments.size() != points.rows || centroids.cols != points.cols) {
    throw UsageError("inertia: inconsistent shapes");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    if (assignments[i] >= centroids.rows) throw UsageError("inertia: assignment out of range");
    s += squared_distance(points.row(i), centroids.row(assignments[i]));
  }
  return s;
}

double calinski_harabasz(const Matrix& points, std::span<const std::size_t> assignments) {
  if (assignments.size() != points.rows) throw UsageError("calinski_harabasz: inconsistent shapes");
  const std::size_t n = points.rows;
  const std::size_t c = cluster_count(assignments);
  if (c < 2) throw UsageError("calinski_harabasz: needs at least two clusters");
  if (n <= c) throw UsageError("calinski_harabasz: needs more points than clusters");
  const auto sizes = cluster_sizes(assignments, c);
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw UsageError("calinski_harabasz: empty cluster");
  }
  const Matrix means = cluster_means(points, assignments, c);
  std::vector<double> global(points.cols, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < points.cols; ++j) global[j] += points(i, j);
  }
  for (double& g : global) g /= static_cast<double>(n);

  double between = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    between += static_cast<double>(sizes[k]) * squared_distance(means.row(k), global);
  }
  const double within = inertia(points, means, assignments);
  if (within == 0.0) return between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return (between / static_cast<double>(c - 1)) / (within / static_cast<double>(n - c));
}

double silhouette(const Matrix& points, std::span<const std::size_t> assignments) {
  if (assignments.size() != points.rows) throw UsageError("silhouette: inconsistent shapes");
  const std::size_t n = points.rows;
  const std::size_t c = cluster_count(assignments);
  const auto sizes = cluster_sizes(assignments, c);
  if (c < 2) throw UsageError("silhouette: needs at least two clusters");
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw UsageError("silhouette: empty cluster");
  }
  std::vector<double> sums(c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[assignments[j]] += std::sqrt(squared_distance(points.row(i), points.row(j)));
    }
    const std::size_t own = assignments[i];
    if (sizes[own] == 1) continue;
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
      if (k != own) b = std::min(b, sums[k] / static_cast<double>(sizes[k]));
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Cluster-count selection

ClusterSelection select_cluster_count(const Matrix& points, const SelectionParams& params) {
  if (params.c_min < 2 || params.c_min > params.c_max || params.c_max >= points.rows) {
    throw UsageError("select_cluster_count: need 2 <= c_min <= c_max < N (got [" +
                     std::to_string(params.c_min) + ", " + std::to_string(params.c_max) +
                     "] with N = " + std::to_string(points.rows) + ")");
  }
  ClusterSelection sel;
  sel.c_min = params.c_min;
  sel.c_max = params.c_max;
  sel.rule = "max silhouette; ties: max calinski-harabasz, then min c";
  constexpr double kTie = 1e-12;
  const SelectionRow* best = nullptr;
  sel.table.reserve(params.c_max - params.c_min + 1);
  for (std::size_t c = params.c_min; c <= params.c_max; ++c) {
    const auto km = kmeans(points, c, derive_seed(params.seed, c), params.restarts);
    sel.table.push_back({c, km.inertia, calinski_harabasz(points, km.assignments),
                         silhouette(points, km.assignments)});
  }
  for (const auto& row : sel.table) {
    if (!best || row.silhouette > best->silhouette + kTie ||
        (std::abs(row.silhouette - best->silhouette) <= kTie && row.calinski > best->calinski)) {
      best = &row;
    }
  }
  sel.chosen = best->c;
  return sel;
}

std::vector<Centroid> SemanticSpan::labeled_centroids() const {
  std::vector<Centroid> out;
  for (std::size_t k = 0; k < centroids.rows; ++k) {
    auto row = centroids.row(k);
    out.push_back({std::vector<double>(row.begin(), row.end()), {community, k}, support[k]});
  }
  return out;
}

std::vector<std::size_t> SemanticSpan::members(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == cluster) out.push_back(i);
  }
  return out;
}

nlohmann::ordered_json SemanticSpan::to_json() const {
  nlohmann::ordered_json j;
  j["community"] = community;
  j["chosen_c"] = centroids.rows;
  j["rule"] = selection.rule;
  j["candidate_range"] = {selection.c_min, selection.c_max};
  j["warnings"] = warnings;
  j["centroids"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < centroids.rows; ++k) {
    auto row = centroids.row(k);
    nlohmann::ordered_json c;
    c["ordinal"] = k;
    c["support"] = support[k];
    c["vector"] = std::vector<double>(row.begin(), row.end());
    j["centroids"].push_back(std::move(c));
  }
  j["selection"] = nlohmann::ordered_json::array();
  for (const auto& row : selection.table) {
    nlohmann::ordered_json r;
    r["c"] = row.c;
    r["inertia"] = row.inertia;
    r["calinski"] = std::isfinite(row.calinski) ? nlohmann::ordered_json(row.calinski)
                                                : nlohmann::ordered_json("inf");
    r["silhouette"] = row.silhouette;
    j["selection"].push_back(std::move(r));
  }
  nlohmann::ordered_json assign = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < doc_ids.size(); ++i) assign[doc_ids[i]] = assignments[i];
  j["assignments"] = std::move(assign);
  return j;
}

std::string SemanticSpan::metrics_csv() const {
  std::ostringstream out;
  out << "c,inertia,calinski_harabasz,silhouette\n";
  for (const auto& row : selection.table) {
    out << row.c << ',' << fmt17(row.inertia) << ',' << fmt17(row.calinski) << ','
        << fmt17(row.silhouette) << '\n';
  }
  return out.str();
}

SemanticSpan semantic_span(std::string community, const Matrix& points,
                           std::vector<std::string> doc_ids, const SelectionParams& params) {
  if (points.rows == 0) throw DataError("community '" + community + "' has no documents");
  if (doc_ids.size() != points.rows) throw UsageError("semantic_span: id list does not match points");
  SemanticSpan span;
  span.community = std::move(community);
  span.doc_ids = std::move(doc_ids);

  SelectionParams effective = params;
  effective.c_max = std::min(params.c_max, points.rows - 1);
  std::size_t chosen = 1;
  if (effective.c_min < 2 || effective.c_max < effective.c_min) {
    span.selection.c_min = params.c_min;
    span.selection.c_max = params.c_max;
    span.selection.rule = "fallback: too few documents for the candidate range";
    span.warnings.push_back("community '" + span.community + "' has " +
                            std::to_string(points.rows) +
                            " document(s), too few to cluster; using a single centroid");
  } else {
    span.selection = select_cluster_count(points, effective);
    chosen = span.selection.chosen;
    double best = -1.0;
    for (const auto& row : span.selection.table) best = std::max(best, row.silhouette);
    if (!(best > 0.0)) {
      chosen = 1;
      span.selection.rule += "; fallback: no candidate has positive silhouette";
      span.warnings.push_back("community '" + span.community +
                              "' shows no cluster structure; using a single centroid");
    }
  }
  span.selection.chosen = chosen;

  const auto km = kmeans(points, chosen, derive_seed(params.seed, chosen), params.restarts);
  span.centroids = km.centroids;
  span.assignments = km.assignments;
  span.support = cluster_sizes(span.assignments, chosen);
  return span;
}

}  // namespace semspan
