#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semspan/corpus.hpp"
#include "semspan/semspace.hpp"
#include "semspan/simgraph.hpp"
#include "semspan/text.hpp"
#include "semspan/topics.hpp"

namespace semspan {

inline constexpr const char* kVersion = "0.1.0";

/// Everything a pipeline run depends on. Loaded from a key = value file and
/// then overridden by command-line flags.
struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir = "semspan-out";
  bool strict = false;

  bool lowercase = true;
  std::size_t min_token_len = 2;
  bool strip_urls = true;
  /// Empty: built-in list. "none": no stopwords.
  std::filesystem::path stopwords;
  std::size_t min_df = 2;
  double max_df_ratio = 1.0;

  std::size_t k = 20;
  std::optional<double> alpha;  // 50 / k when unset
  double beta = 0.01;
  std::size_t iterations = 1000;
  std::size_t infer_iterations = 100;
  std::size_t average_last = 0;
  std::uint64_t seed = 0;

  std::size_t c_min = 2;
  std::size_t c_max = 10;
  std::size_t restarts = 10;

  double tau_exp1 = 0.95;
  double tau_span = 0.7;
  double tau_all = 0.9;
  std::size_t top_words = 10;

  /// Applies one key = value setting. Throws UsageError for unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);

  /// Reads a config file; '#' starts a comment. Relative paths are resolved
  /// against the file's directory.
  static PipelineConfig from_file(const std::filesystem::path& path);

  /// Throws UsageError when thresholds leave [0, 1], k < 1, and so on.
  void validate() const;

  TokenizerConfig tokenizer() const;
  LdaOptions lda_options() const;
  SelectionParams selection_params() const;

  /// Sorted key = value lines of every setting that influences results
  /// (paths excluded).
  std::string canonical() const;
  std::string fingerprint() const;
};

/// The shared topic space: corpus, vocabulary, counts, LDA model and the
/// document-topic matrix with community labels.
struct TopicSpace {
  TokenizerConfig tokenizer;
  std::vector<TokenizedDoc> docs;
  Vocabulary vocabulary;
  DocTermMatrix counts;
  LdaModel model;
  DocTopicMatrix theta;
  bool model_from_cache = false;
  Warnings warnings;

  /// Rows of `theta` belonging to each community, in corpus order.
  std::map<std::string, std::vector<std::size_t>> community_rows(const Corpus& corpus) const;
};

/// Tokenizes, builds the vocabulary, counts, fits (or loads from
/// `cache_dir`) the LDA model and infers theta for every document.
TopicSpace build_topic_space(const PipelineConfig& config, const Corpus& corpus,
                             const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

nlohmann::ordered_json provenance(const PipelineConfig& config, const Corpus& corpus,
                                  const TopicSpace& space);

struct Exp1Result {
  std::vector<Centroid> centroids;
  SimilarityGraph graph;
  std::vector<SubGraph> components;
  nlohmann::ordered_json report;
  std::string report_text;
};

/// One centroid per community compared at tau_exp1.
Exp1Result run_exp1(const PipelineConfig& config, const Corpus& corpus, const TopicSpace& space);

struct SubgraphRow {
  std::size_t index = 0;  // 1-based, in component order
  SubGraph sub;
  std::vector<std::string> documents;
  std::vector<ScoredTerm> top_terms;
};

struct PairView {
  std::string first;
  std::string second;
  SimilarityGraph graph;
  std::vector<SubGraph> components;
};

struct Exp2Result {
  std::vector<SemanticSpan> spans;
  SimilarityGraph graph;
  std::vector<SubGraph> components;
  std::vector<SubgraphRow> table;
  std::vector<PairView> pairs;
  nlohmann::ordered_json report;
  std::string report_text;
};

/// Semantic spans per community, their joint graph at tau_all with labeled
/// components, and pairwise overlap graphs at tau_span.
Exp2Result run_exp2(const PipelineConfig& config, const Corpus& corpus, const TopicSpace& space);

/// Writes report.json, report.txt, graph.dot and graph.json into `dir`.
void write_exp1(const Exp1Result& result, const std::filesystem::path& dir);
/// Also writes spans/*.json, metrics/*.csv and pairs/*.{dot,json}.
void write_exp2(const Exp2Result& result, const std::filesystem::path& dir);

/// Fits the topic space and writes model, vocabulary, matrices, theta and a
/// per-topic term listing to `dir`. With `with_nmf`, also factorizes the
/// TFIDF matrix. Returns a short report.
nlohmann::ordered_json run_fit_topics(const PipelineConfig& config, const Corpus& corpus,
                                      const std::filesystem::path& dir, bool with_nmf);

/// Writes through a temporary file and a rename so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// ASCII letters, digits, '-' and '_' kept, everything else mapped to '_'.
std::string safe_filename(std::string_view label);

}  // namespace semspan
