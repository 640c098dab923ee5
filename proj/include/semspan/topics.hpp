#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semspan/matrix.hpp"
#include "semspan/text.hpp"

namespace semspan {

struct LdaOptions {
  std::size_t k = 20;
  /// Symmetric document-topic prior; 50 / k when unset.
  std::optional<double> alpha;
  double beta = 0.01;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  /// When positive, phi is the mean of the per-sweep estimates over the last
  /// `average_last` sweeps instead of the final sample alone.
  std::size_t average_last = 0;

  double resolved_alpha() const { return alpha.value_or(50.0 / static_cast<double>(k)); }
};

/// Fitted topic-term distributions. Immutable once returned by fit_lda.
struct LdaModel {
  std::size_t k = 0;
  std::size_t num_terms = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::string vocabulary_hash;
  Matrix phi;  // k x num_terms, rows on the simplex

  nlohmann::json to_json() const;
  /// Refuses the model when `expected_vocabulary_hash` is non-empty and
  /// differs from the stored one.
  static LdaModel from_json(const nlohmann::json& j, const std::string& expected_vocabulary_hash = "");

  void save(const std::filesystem::path& path) const;
  static LdaModel load(const std::filesystem::path& path,
                       const std::string& expected_vocabulary_hash = "");

  bool operator==(const LdaModel&) const = default;
};

/// Collapsed Gibbs sampling over token-topic assignments. Documents and
/// their tokens are visited in a fixed order, so (counts, options) fully
/// determine the result. Throws DataError when the matrix has no tokens.
LdaModel fit_lda(const DocTermMatrix& counts, const LdaOptions& options,
                 Warnings* warnings = nullptr);

/// Documents as points on the k-simplex.
struct DocTopicMatrix {
  Matrix theta;  // N x k
  std::vector<std::string> row_ids;
  std::vector<std::string> communities;  // parallel to row_ids when known
};

/// Per-document Gibbs sampling with phi held fixed. Each document uses its
/// own stream derived from (seed, row), so rows are independent.
DocTopicMatrix infer_theta(const LdaModel& model, const DocTermMatrix& counts,
                           std::size_t iterations = 100, std::uint64_t seed = 0);

/// exp(-sum_d sum_w n_dw ln(sum_z theta_dz phi_zw) / total tokens).
double perplexity(const LdaModel& model, const DocTopicMatrix& theta, const DocTermMatrix& counts);

struct NmfOptions {
  std::size_t k = 20;
  std::size_t iterations = 200;
  std::uint64_t seed = 0;
};

struct NmfModel {
  Matrix w;  // N x k
  Matrix h;  // k x V
  /// Squared Frobenius reconstruction error after each iteration.
  std::vector<double> objective;
  std::vector<std::string> warnings;
};

/// Lee-Seung multiplicative updates for min ||X - WH||_F^2 with W, H >= 0.
/// X is only touched through its non-zeros; WH is never materialized.
NmfModel fit_nmf(const TfidfMatrix& x, const NmfOptions& options);

}  // namespace semspan
