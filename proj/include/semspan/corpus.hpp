#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semspan/matrix.hpp"
#include "semspan/text.hpp"

namespace semspan {

/// One forum post. `community` is read from the `subreddit` key.
struct Submission {
  std::string id;
  std::string title;
  std::string body;
  std::int64_t score = 0;
  std::int64_t num_comments = 0;
  std::optional<std::int64_t> created_utc;
  std::string community;
  std::optional<int> year;
  std::optional<std::string> url;

  bool operator==(const Submission&) const = default;
};

/// UTC calendar year of a unix timestamp.
int utc_year(std::int64_t unix_seconds);

/// Immutable, insertion-ordered collection of submissions.
class Corpus {
 public:
  Corpus() = default;
  /// Throws DataError on duplicate ids, empty bodies or empty labels.
  explicit Corpus(std::vector<Submission> submissions);

  const std::vector<Submission>& submissions() const { return submissions_; }
  const Submission& operator[](std::size_t i) const { return submissions_[i]; }
  std::size_t size() const { return submissions_.size(); }
  bool empty() const { return submissions_.empty(); }

  /// Distinct labels in order of first appearance.
  const std::vector<std::string>& communities() const { return communities_; }
  std::optional<std::size_t> community_index(std::string_view label) const;
  /// Submission indices per community, parallel to communities().
  const std::vector<std::vector<std::size_t>>& members() const { return members_; }

  /// Hash over (id, community, body) of every submission in order.
  std::string fingerprint() const;

  bool operator==(const Corpus& other) const { return submissions_ == other.submissions_; }

 private:
  std::vector<Submission> submissions_;
  std::vector<std::string> communities_;
  std::vector<std::vector<std::size_t>> members_;
  std::unordered_map<std::string, std::size_t> community_index_;
};

struct LoadIssue {
  std::size_t line = 0;
  std::string message;
  bool skipped = true;  // false for notes that did not drop the line
};

struct LoadResult {
  Corpus corpus;
  std::size_t skipped = 0;
  std::vector<LoadIssue> issues;
};

/// Parses one JSON object into a submission. `strict` turns a year /
/// created_utc disagreement into an error; otherwise the explicit year wins
/// and `note` (if given) receives a message.
Submission submission_from_json(const nlohmann::json& obj, bool strict,
                                std::string* note = nullptr);
nlohmann::json submission_to_json(const Submission& s);

/// Reads JSONL. Strict mode throws DataError on the first bad line; lenient
/// mode skips it and records a LoadIssue. Blank lines are ignored.
LoadResult parse_jsonl(std::istream& in, bool strict);
LoadResult load_jsonl(const std::filesystem::path& path, bool strict);

void write_jsonl(std::ostream& out, const Corpus& corpus);

/// Per-community statistics in the layout of the dataset summary table.
struct CommunitySummary {
  std::string community;
  double posts_per_year_mean = 0.0;
  double posts_per_year_std = 0.0;
  std::size_t total_posts = 0;
  double tokens_per_post_mean = 0.0;
  double tokens_per_post_std = 0.0;
  std::size_t total_tokens = 0;

  bool operator==(const CommunitySummary&) const = default;
};

/// Column headers of the summary table, in output order.
const std::vector<std::string>& summary_columns();

/// One row per community, most posts first (ties by label). Standard
/// deviations use the n-1 denominator and are 0 for fewer than two samples.
/// Posts-per-year statistics run over the years in which the community has
/// posts; submissions without a year are left out of them.
std::vector<CommunitySummary> summarize(const Corpus& corpus, const TokenizerConfig& tokenizer);

std::string format_summary_table(std::span<const CommunitySummary> rows);
nlohmann::ordered_json summary_to_json(std::span<const CommunitySummary> rows);

// ---------------------------------------------------------------------------
// Synthetic corpora with planted structure.

struct QualitySpec {
  std::string label;
  std::vector<double> mixture;  // over the planted topics
};

struct CommunityPlan {
  std::string label;
  std::vector<std::pair<std::string, std::size_t>> documents;  // (quality, count)
};

struct SyntheticSpec {
  std::size_t k_true = 0;
  std::size_t vocabulary_size = 0;
  std::vector<QualitySpec> qualities;
  std::vector<CommunityPlan> communities;
  std::size_t doc_length_mean = 100;
  std::uint64_t seed = 0;

  /// Throws UsageError when a mixture is not a probability vector, a
  /// community references an unknown quality, or sizes are inconsistent.
  void validate() const;

  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
};

struct GroundTruth {
  std::uint64_t seed = 0;
  /// Planted term strings; topic t owns a contiguous block of them.
  std::vector<std::string> terms;
  /// k_true x vocabulary_size; rows have disjoint supports.
  Matrix topics;
  std::vector<QualitySpec> qualities;
  /// Quality label per generated submission, in corpus order.
  std::vector<std::string> doc_quality;
  std::vector<std::string> warnings;

  /// Terms with non-zero weight in a planted topic.
  std::vector<std::string> topic_terms(std::size_t topic) const;
  /// Terms whose planted topic has weight in `quality` and in no other
  /// quality of the spec.
  std::vector<std::string> exclusive_terms(std::string_view quality) const;

  nlohmann::json to_json() const;
};

struct SyntheticCorpus {
  Corpus corpus;
  GroundTruth truth;
};

/// Draws every document by the LDA generative process: per token a topic
/// from the document's quality mixture, then a term from that topic.
/// Identical specs produce identical corpora.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace semspan
