#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace semspan {

using Warnings = std::vector<std::string>;
using TokenizedDoc = std::vector<std::string>;

struct TokenizerConfig {
  bool lowercase = true;
  std::size_t min_token_len = 2;
  std::set<std::string> stopwords;
  bool strip_urls = true;

  /// Stable hash of every field; recorded in matrix headers and caches.
  std::string fingerprint() const;
};

/// The stopword list shipped in data/stopwords_en.txt.
const std::vector<std::string>& default_stopwords();

/// Config with the default stopword list installed.
TokenizerConfig default_tokenizer();

/// One term per line; blank lines and lines starting with '#' are ignored.
std::set<std::string> read_stopwords(const std::filesystem::path& path);

/// Splits text into runs of ASCII letters with optional internal
/// apostrophes, then applies case folding, length and stopword filters.
TokenizedDoc tokenize(std::string_view text, const TokenizerConfig& config);

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Keeps terms with min_df <= df <= max_df_ratio * N. Indices follow first
  /// occurrence. Throws DataError when nothing survives.
  static Vocabulary build(std::span<const TokenizedDoc> docs, std::size_t min_df = 1,
                          double max_df_ratio = 1.0);

  /// Direct construction from parallel term/df lists (used by deserialization).
  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> document_frequency,
             std::size_t num_documents);

  std::size_t size() const { return terms_.size(); }
  std::size_t num_documents() const { return num_documents_; }
  const std::string& term(std::size_t index) const { return terms_[index]; }
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t document_frequency(std::size_t index) const { return df_[index]; }
  std::optional<std::size_t> index_of(std::string_view term) const;

  /// Hash over the ordered term list. Models are tied to this value.
  std::string fingerprint() const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const {
    return terms_ == other.terms_ && df_ == other.df_ &&
           num_documents_ == other.num_documents_;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::size_t num_documents_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Compressed sparse rows with a document id per row. Column indices within a
/// row are strictly increasing.
template <typename T>
struct SparseMatrix {
  std::size_t num_cols = 0;
  std::vector<std::string> row_ids;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> cols;
  std::vector<T> values;
  std::string tokenizer_hash;

  std::size_t num_rows() const { return row_ids.size(); }
  std::size_t nnz() const { return values.size(); }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return {cols.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }
  std::span<const T> row_values(std::size_t r) const {
    return {values.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }

  /// Entry lookup by binary search; zero when absent.
  T at(std::size_t r, std::uint32_t c) const;

  /// Appends a row. Entries must be sorted by column and non-zero.
  void append_row(std::string id, std::span<const std::pair<std::uint32_t, T>> entries);

  bool operator==(const SparseMatrix&) const = default;
};

using DocTermMatrix = SparseMatrix<std::int32_t>;
using TfidfMatrix = SparseMatrix<double>;

/// Count matrix over `vocab`; tokens outside it are dropped. Rows that end up
/// empty are kept and reported through `warnings`. Throws DataError on
/// duplicate ids or length mismatch.
DocTermMatrix vectorize_counts(std::span<const TokenizedDoc> docs,
                               std::span<const std::string> ids, const Vocabulary& vocab,
                               Warnings* warnings = nullptr);

/// idf(t) = ln((1 + N) / (1 + df(t))) + 1 with df taken from `counts`; each
/// non-empty row is L2-normalized afterwards.
TfidfMatrix tfidf(const DocTermMatrix& counts);

/// Smoothed idf for every column of `counts`.
std::vector<double> inverse_document_frequency(const DocTermMatrix& counts);

struct ScoredTerm {
  std::string term;
  double score = 0.0;
};

/// Ranks terms by summed TFIDF weight over `rows` (duplicates count twice).
/// Scores equal to 12 significant digits tie, and ties go to the
/// lexicographically smaller term.
std::vector<ScoredTerm> top_terms(std::span<const std::size_t> rows, const TfidfMatrix& weights,
                                  const Vocabulary& vocab, std::size_t n = 10);

// Sparse triplet persistence. Layout:
//   %semspan-triplets 1
//   %kind counts|tfidf
//   %shape <rows> <cols> <nnz>
//   %tokenizer <hash>
//   %row <index> <id>          (one line per row)
//   <row> <col> <value>        (one line per non-zero, row-major)
void write_triplets(std::ostream& out, const DocTermMatrix& m);
void write_triplets(std::ostream& out, const TfidfMatrix& m);
DocTermMatrix read_count_triplets(std::istream& in);
TfidfMatrix read_tfidf_triplets(std::istream& in);

}  // namespace semspan
