#include "semspan/simgraph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "semspan/error.hpp"

namespace semspan {

namespace {

std::vector<std::pair<std::size_t, std::size_t>> threshold_edges(const Matrix& sim, double tau) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < sim.rows; ++i) {
    for (std::size_t j = i + 1; j < sim.cols; ++j) {
      if (sim(i, j) >= tau) edges.emplace_back(i, j);
    }
  }
  return edges;
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// ColorBrewer Set3.
constexpr const char* kPalette[] = {"#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
                                    "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f"};

}  // namespace

std::string_view to_string(SubGraphKind kind) {
  switch (kind) {
    case SubGraphKind::kClique: return "clique";
    case SubGraphKind::kPartial: return "partial";
    case SubGraphKind::kSingleton: return "singleton";
  }
  return "unknown";
}

SubGraphKind parse_subgraph_kind(std::string_view text) {
  if (text == "clique") return SubGraphKind::kClique;
  if (text == "partial") return SubGraphKind::kPartial;
  if (text == "singleton") return SubGraphKind::kSingleton;
  throw DataError("unknown sub-graph kind '" + std::string(text) + "'");
}

SimilarityGraph build_graph(std::span<const Centroid> centroids, double tau) {
  SimilarityGraph g;
  g.tau = tau;
  std::set<NodeLabel> seen;
  for (const auto& c : centroids) {
    if (!seen.insert(c.label).second) throw UsageError("build_graph: duplicate label " + c.label.str());
    if (c.vector.size() != centroids.front().vector.size()) {
      throw UsageError("build_graph: centroids differ in dimension");
    }
    g.nodes.push_back(c.label);
  }
  const std::size_t n = centroids.size();
  g.similarity = Matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    g.similarity(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = cosine_sim(centroids[i].vector, centroids[j].vector);
      g.similarity(i, j) = s;
      g.similarity(j, i) = s;
    }
  }
  g.edges = threshold_edges(g.similarity, tau);
  return g;
}

SimilarityGraph rethreshold(const SimilarityGraph& graph, double tau) {
  SimilarityGraph g = graph;
  g.tau = tau;
  g.edges = threshold_edges(g.similarity, tau);
  return g;
}

std::vector<SubGraph> connected_components(const SimilarityGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [i, j] : graph.edges) {
    const auto a = find(i), b = find(j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::size_t, SubGraph> by_root;
  for (std::size_t i = 0; i < n; ++i) {
    auto& sub = by_root[find(i)];
    sub.members.push_back(i);
    sub.labels.push_back(graph.nodes[i]);
  }
  for (const auto& [i, j] : graph.edges) ++by_root[find(i)].edge_count;

  std::vector<SubGraph> out;
  for (auto& [root, sub] : by_root) {
    const std::size_t m = sub.members.size();
    if (m == 1) {
      sub.kind = SubGraphKind::kSingleton;
    } else if (sub.edge_count == m * (m - 1) / 2) {
      sub.kind = SubGraphKind::kClique;
    } else {
      sub.kind = SubGraphKind::kPartial;
    }
    std::set<std::string> comms;
    for (const auto& l : sub.labels) comms.insert(l.community);
    sub.communities.assign(comms.begin(), comms.end());
    out.push_back(std::move(sub));
  }
  auto smallest = [](const SubGraph& s) {
    return std::min_element(s.labels.begin(), s.labels.end(),
                            [](const auto& a, const auto& b) { return a.str() < b.str(); })
        ->str();
  };
  std::sort(out.begin(), out.end(),
            [&](const SubGraph& a, const SubGraph& b) { return smallest(a) < smallest(b); });
  return out;
}

std::vector<std::string> assign_documents(const SubGraph& sub, std::span<const SemanticSpan> spans) {
  std::vector<std::string> docs;
  for (const auto& label : sub.labels) {
    auto span = std::find_if(spans.begin(), spans.end(),
                             [&](const SemanticSpan& s) { return s.community == label.community; });
    if (span == spans.end()) throw DataError("assign_documents: no span for community " + label.community);
    if (!label.cluster) {
      docs.insert(docs.end(), span->doc_ids.begin(), span->doc_ids.end());
      continue;
    }
    if (*label.cluster >= span->size()) throw DataError("assign_documents: unknown node " + label.str());
    for (auto i : span->members(*label.cluster)) docs.push_back(span->doc_ids[i]);
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Export

std::string to_dot(const SimilarityGraph& graph, std::span<const SubGraph> subs) {
  std::map<std::string, std::size_t> color_of;
  for (const auto& node : graph.nodes) color_of.try_emplace(node.community, color_of.size());

  std::ostringstream out;
  out << "graph similarity {\n";
  out << "  graph [label=\"cosine similarity >= " << fixed3(graph.tau) << "\", fontsize=10];\n";
  out << "  node [style=filled, shape=ellipse, fontsize=10];\n";
  std::vector<bool> placed(graph.size(), false);
  auto node_line = [&](std::size_t i, const char* indent) {
    const auto& label = graph.nodes[i];
    out << indent << 'n' << i << " [label=\"" << dot_escape(label.str()) << "\", fillcolor=\""
        << kPalette[color_of[label.community] % std::size(kPalette)] << "\"];\n";
    placed[i] = true;
  };
  for (std::size_t s = 0; s < subs.size(); ++s) {
    out << "  subgraph cluster_" << s << " {\n";
    out << "    label=\"sub-graph " << (s + 1) << " (" << to_string(subs[s].kind) << ")\";\n";
    for (auto i : subs[s].members) node_line(i, "    ");
    out << "  }\n";
  }
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (!placed[i]) node_line(i, "  ");
  }
  for (const auto& [i, j] : graph.edges) {
    out << "  n" << i << " -- n" << j << " [label=\"" << fixed3(graph.similarity(i, j)) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

nlohmann::ordered_json graph_to_json(const SimilarityGraph& graph, std::span<const SubGraph> subs) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : graph.nodes) {
    nlohmann::ordered_json node;
    node["label"] = n.str();
    node["community"] = n.community;
    node["cluster"] = n.cluster ? nlohmann::ordered_json(*n.cluster) : nlohmann::ordered_json();
    j["nodes"].push_back(std::move(node));
  }
  j["tau"] = graph.tau;
  j["sim"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < graph.size(); ++i) {
    auto row = graph.similarity.row(i);
    j["sim"].push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& [a, b] : graph.edges) j["edges"].push_back({a, b});
  j["components"] = nlohmann::ordered_json::array();
  for (const auto& s : subs) {
    nlohmann::ordered_json c;
    c["members"] = s.members;
    c["kind"] = to_string(s.kind);
    c["communities"] = s.communities;
    j["components"].push_back(std::move(c));
  }
  return j;
}

SimilarityGraph graph_from_json(const nlohmann::json& j) {
  SimilarityGraph g;
  try {
    for (const auto& node : j.at("nodes")) {
      NodeLabel label;
      label.community = node.at("community").get<std::string>();
      if (node.contains("cluster") && !node.at("cluster").is_null()) {
        label.cluster = node.at("cluster").get<std::size_t>();
      }
      g.nodes.push_back(std::move(label));
    }
    g.tau = j.at("tau").get<double>();
    const std::size_t n = g.nodes.size();
    g.similarity = Matrix(n, n);
    const auto& sim = j.at("sim");
    if (sim.size() != n) throw DataError("graph JSON: sim has the wrong number of rows");
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = sim[i].get<std::vector<double>>();
      if (row.size() != n) throw DataError("graph JSON: sim row has the wrong length");
      std::copy(row.begin(), row.end(), g.similarity.row(i).begin());
    }
    for (const auto& e : j.at("edges")) {
      g.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("graph JSON: ") + e.what());
  }
  if (g.edges != threshold_edges(g.similarity, g.tau)) {
    throw DataError("graph JSON: edge list disagrees with sim >= tau");
  }
  return g;
}

void export_graph(const SimilarityGraph& graph, std::span<const SubGraph> subs, GraphFormat format,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write graph file: " + path.string());
  if (format == GraphFormat::kDot) {
    out << to_dot(graph, subs);
  } else {
    out << graph_to_json(graph, subs).dump(2) << '\n';
  }
  if (!out) throw DataError("failed writing graph file: " + path.string());
}

std::vector<SweepRow> tau_sweep(const SimilarityGraph& graph, std::span<const double> taus) {
  std::vector<SweepRow> rows;
  for (double tau : taus) {
    const auto g = rethreshold(graph, tau);
    SweepRow row;
    row.tau = tau;
    row.edges = g.edges.size();
    for (const auto& s : connected_components(g)) {
      ++row.components;
      switch (s.kind) {
        case SubGraphKind::kClique: ++row.cliques; break;
        case SubGraphKind::kPartial: ++row.partials; break;
        case SubGraphKind::kSingleton: ++row.singletons; break;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "tau,edges,components,cliques,partials,singletons\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6g", r.tau);
    out << buf << ',' << r.edges << ',' << r.components << ',' << r.cliques << ',' << r.partials << ','
        << r.singletons << '\n';
  }
  return out.str();
}

}  // namespace semspan
