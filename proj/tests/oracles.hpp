// Independent reference implementations used by the tests. They share no
// code with the library beyond plain containers, and favor the most direct
// evaluation of each formula over speed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;
using Counts = std::vector<std::vector<int>>;

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)));
}

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Smoothed idf with L2-normalized rows, evaluated cell by cell.
inline Dense tfidf(const Counts& counts) {
  const std::size_t n = counts.size();
  const std::size_t v = n ? counts[0].size() : 0;
  Dense out(n, std::vector<double>(v, 0.0));
  for (std::size_t t = 0; t < v; ++t) {
    int df = 0;
    for (std::size_t d = 0; d < n; ++d) df += counts[d][t] > 0;
    const double idf = std::log((1.0 + n) / (1.0 + df)) + 1.0;
    for (std::size_t d = 0; d < n; ++d) out[d][t] = counts[d][t] * idf;
  }
  for (auto& row : out) {
    double norm = 0.0;
    for (double x : row) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (double& x : row) x /= norm;
    }
  }
  return out;
}

// Sum over the subset rows; sort every positive term; keep n.
inline std::vector<std::pair<std::string, double>> top_terms(const Dense& w, const std::vector<std::size_t>& rows,
                                                             const std::vector<std::string>& terms, std::size_t n) {
  std::vector<std::pair<std::string, double>> all;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    double s = 0.0;
    for (auto r : rows) s += w[r][t];
    if (s > 0) all.emplace_back(terms[t], s);
  }
  // Scores equal to 12 significant digits tie.
  auto key = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.11e", x);
    return std::strtod(buf, nullptr);
  };
  std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
    if (key(a.second) != key(b.second)) return key(a.second) > key(b.second);
    return a.first < b.first;
  });
  if (all.size() > n) all.resize(n);
  return all;
}

// Within- and total dispersion from pairwise distances:
//   WGSS = sum_c (1 / 2n_c) sum_{i,j in c} |xi - xj|^2
//   TSS  = (1 / 2N) sum_{i,j} |xi - xj|^2,   BGSS = TSS - WGSS
inline double calinski_harabasz(const Dense& x, const std::vector<std::size_t>& a) {
  const std::size_t n = x.size();
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[a[i]].push_back(i);
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) tss += sqdist(x[i], x[j]);
  }
  tss /= 2.0 * n;
  double wgss = 0.0;
  for (const auto& [c, members] : groups) {
    double s = 0.0;
    for (auto i : members) {
      for (auto j : members) s += sqdist(x[i], x[j]);
    }
    wgss += s / (2.0 * members.size());
  }
  const double bgss = tss - wgss;
  const double k = static_cast<double>(groups.size());
  return (bgss / (k - 1.0)) / (wgss / (static_cast<double>(n) - k));
}

inline double silhouette(const Dense& x, const std::vector<std::size_t>& a) {
  const std::size_t n = x.size();
  std::set<std::size_t> labels(a.begin(), a.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t own = 0;
    for (std::size_t j = 0; j < n; ++j) own += a[j] == a[i];
    if (own == 1) continue;  // scores 0
    double in = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && a[j] == a[i]) in += std::sqrt(sqdist(x[i], x[j]));
    }
    in /= static_cast<double>(own - 1);
    double out = std::numeric_limits<double>::infinity();
    for (auto l : labels) {
      if (l == a[i]) continue;
      double s = 0.0;
      std::size_t m = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (a[j] == l) {
          s += std::sqrt(sqdist(x[i], x[j]));
          ++m;
        }
      }
      out = std::min(out, s / static_cast<double>(m));
    }
    const double denom = std::max(in, out);
    total += denom > 0 ? (out - in) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

// Minimum inertia over every split of the points into two non-empty groups.
inline double best_two_partition_inertia(const Dense& x) {
  const std::size_t n = x.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask + 1 < (1ULL << n); ++mask) {
    if (mask & 1ULL) continue;  // each split once
    double s = 0.0;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> mu(x[0].size(), 0.0);
      std::size_t m = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1ULL) == static_cast<std::uint64_t>(side)) {
          for (std::size_t d = 0; d < mu.size(); ++d) mu[d] += x[i][d];
          ++m;
        }
      }
      for (double& v : mu) v /= static_cast<double>(m);
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1ULL) == static_cast<std::uint64_t>(side)) s += sqdist(x[i], mu);
      }
    }
    best = std::min(best, s);
  }
  return best;
}

// Brute-force component classification from an adjacency matrix.
struct Component {
  std::vector<std::size_t> members;
  std::string kind;
};

inline std::vector<Component> components(const std::vector<std::vector<bool>>& adj) {
  const std::size_t n = adj.size();
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (adj[u][v] && comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  std::vector<Component> out(next);
  for (std::size_t i = 0; i < n; ++i) out[comp[i]].members.push_back(i);
  for (auto& c : out) {
    if (c.members.size() == 1) {
      c.kind = "singleton";
      continue;
    }
    bool full = true;
    for (auto i : c.members) {
      for (auto j : c.members) full = full && (i == j || adj[i][j]);
    }
    c.kind = full ? "clique" : "partial";
  }
  return out;
}

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t dim, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(dim);
  for (double& x : v) x = u(gen);
  return v;
}

}  // namespace oracle
