#include "semspan/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "semspan/error.hpp"
#include "semspan/hash.hpp"

namespace semspan {

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

char to_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (text.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (to_lower(text[pos + i]) != prefix[i]) return false;
  }
  return true;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Replaces URLs with a blank and maps the typographic apostrophe (U+2019) to
// ASCII so that "don’t" and "don't" tokenize alike.
std::string normalize(std::string_view text, bool strip_urls) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool word_start = i == 0 || !is_alpha(text[i - 1]);
    if (strip_urls && (starts_with_ci(text, i, "http://") || starts_with_ci(text, i, "https://") ||
                       (word_start && starts_with_ci(text, i, "www.")))) {
      while (i < text.size() && !is_space(text[i])) ++i;
      out.push_back(' ');
      continue;
    }
    if (static_cast<unsigned char>(text[i]) == 0xE2 && i + 2 < text.size() &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        static_cast<unsigned char>(text[i + 2]) == 0x99) {
      out.push_back('\'');
      i += 3;
      continue;
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

}  // namespace

std::string TokenizerConfig::fingerprint() const {
  Fingerprint fp;
  fp.add("tokenizer-v1")
      .add(lowercase ? "lower" : "keep-case")
      .add(static_cast<std::int64_t>(min_token_len))
      .add(strip_urls ? "strip-urls" : "keep-urls");
  for (const auto& w : stopwords) fp.add(w);
  return fp.hex();
}

const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're",
      "you've", "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him",
      "his", "himself", "she", "she's", "her", "hers", "herself", "it", "it's", "its",
      "itself", "they", "them", "their", "theirs", "themselves", "what", "which", "who",
      "whom", "this", "that", "that'll", "these", "those", "am", "is", "are", "was", "were",
      "be", "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing",
      "a", "an", "the", "and", "but", "if", "or", "because", "as", "until", "while", "of",
      "at", "by", "for", "with", "about", "against", "between", "into", "through", "during",
      "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on",
      "off", "over", "under", "again", "further", "then", "once", "here", "there", "when",
      "where", "why", "how", "all", "any", "both", "each", "few", "more", "most", "other",
      "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
      "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've", "now",
      "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't",
      "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven",
      "haven't", "isn", "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn",
      "needn't", "shan", "shan't", "shouldn", "shouldn't", "wasn", "wasn't", "weren",
      "weren't", "won", "won't", "wouldn", "wouldn't",
      // Contractions frequent in forum text.
      "i'm", "i've", "i'll", "i'd", "we're", "we've", "we'll", "we'd", "they're", "they've",
      "they'll", "they'd", "he's", "he'll", "he'd", "she'll", "she'd", "can't", "cannot",
      "let's", "there's", "here's", "what's", "who's", "where's", "how's", "it'll", "it'd"};
  return words;
}

TokenizerConfig default_tokenizer() {
  TokenizerConfig cfg;
  cfg.stopwords.insert(default_stopwords().begin(), default_stopwords().end());
  return cfg;
}

std::set<std::string> read_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file: " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && is_space(line.back())) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && is_space(line[start])) ++start;
    line.erase(0, start);
    if (line.empty() || line[0] == '#') continue;
    words.insert(line);
  }
  return words;
}

TokenizedDoc tokenize(std::string_view raw, const TokenizerConfig& config) {
  const std::string text = normalize(raw, config.strip_urls);
  TokenizedDoc tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_alpha(text[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < n) {
      if (is_alpha(text[end])) {
        ++end;
      } else if (text[end] == '\'' && end + 1 < n && is_alpha(text[end + 1])) {
        end += 2;
      } else {
        break;
      }
    }
    std::string token(text.substr(i, end - i));
    i = end;
    if (config.lowercase) {
      std::transform(token.begin(), token.end(), token.begin(), to_lower);
    }
    if (token.size() < config.min_token_len) continue;
    if (config.stopwords.contains(token)) continue;
    tokens.push_back(std::move(token));
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> document_frequency,
                       std::size_t num_documents)
    : terms_(std::move(terms)), df_(std::move(document_frequency)), num_documents_(num_documents) {
  if (terms_.size() != df_.size()) {
    throw DataError("vocabulary: term and document-frequency lists differ in length");
  }
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (df_[i] > num_documents_) {
      throw DataError("vocabulary: document frequency of '" + terms_[i] +
                      "' exceeds the document count");
    }
    if (!index_.emplace(terms_[i], i).second) {
      throw DataError("vocabulary: duplicate term '" + terms_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const TokenizedDoc> docs, std::size_t min_df,
                             double max_df_ratio) {
  if (min_df < 1) throw UsageError("min_df must be at least 1");
  if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) {
    throw UsageError("max_df_ratio must lie in (0, 1]");
  }
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> df;
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for (const auto& tok : doc) {
      if (!seen.insert(tok).second) continue;
      auto [it, inserted] = df.try_emplace(tok, 0);
      if (inserted) order.push_back(tok);
      ++it->second;
    }
  }
  const double max_df = max_df_ratio * static_cast<double>(docs.size());
  std::vector<std::string> terms;
  std::vector<std::size_t> freq;
  for (auto& term : order) {
    const std::size_t d = df[term];
    if (d >= min_df && static_cast<double>(d) <= max_df) {
      freq.push_back(d);
      terms.push_back(std::move(term));
    }
  }
  if (terms.empty()) {
    throw DataError("vocabulary is empty after document-frequency filtering");
  }
  return Vocabulary(std::move(terms), std::move(freq), docs.size());
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::fingerprint() const {
  Fingerprint fp;
  fp.add("vocabulary-v1");
  for (const auto& t : terms_) fp.add(t);
  return fp.hex();
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    terms.push_back({{"term", terms_[i]}, {"index", i}, {"df", df_[i]}});
  }
  return {{"num_documents", num_documents_}, {"fingerprint", fingerprint()}, {"terms", terms}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  try {
    const auto& entries = j.at("terms");
    std::vector<std::string> terms(entries.size());
    std::vector<std::size_t> df(entries.size());
    std::vector<bool> filled(entries.size(), false);
    for (const auto& e : entries) {
      const auto idx = e.at("index").get<std::size_t>();
      if (idx >= entries.size() || filled[idx]) {
        throw DataError("vocabulary JSON: indices are not dense 0..V-1");
      }
      filled[idx] = true;
      terms[idx] = e.at("term").get<std::string>();
      df[idx] = e.at("df").get<std::size_t>();
    }
    return Vocabulary(std::move(terms), std::move(df), j.at("num_documents").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("vocabulary JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sparse matrices

template <typename T>
T SparseMatrix<T>::at(std::size_t r, std::uint32_t c) const {
  auto cs = row_cols(r);
  auto it = std::lower_bound(cs.begin(), cs.end(), c);
  if (it == cs.end() || *it != c) return T{};
  return values[row_ptr[r] + static_cast<std::size_t>(it - cs.begin())];
}

template <typename T>
void SparseMatrix<T>::append_row(std::string id, std::span<const std::pair<std::uint32_t, T>> entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first >= num_cols) throw InvariantError("sparse row: column out of range");
    if (i > 0 && entries[i].first <= entries[i - 1].first) {
      throw InvariantError("sparse row: columns must be strictly increasing");
    }
    cols.push_back(entries[i].first);
    values.push_back(entries[i].second);
  }
  row_ids.push_back(std::move(id));
  row_ptr.push_back(values.size());
}

template struct SparseMatrix<std::int32_t>;
template struct SparseMatrix<double>;

DocTermMatrix vectorize_counts(std::span<const TokenizedDoc> docs, std::span<const std::string> ids,
                               const Vocabulary& vocab, Warnings* warnings) {
  if (docs.size() != ids.size()) {
    throw DataError("vectorize_counts: document and id lists differ in length");
  }
  DocTermMatrix m;
  m.num_cols = vocab.size();
  std::unordered_set<std::string> seen_ids;
  std::vector<std::int32_t> dense(vocab.size(), 0);
  std::vector<std::uint32_t> touched;
  std::vector<std::pair<std::uint32_t, std::int32_t>> entries;
  std::size_t empty_rows = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (!seen_ids.insert(ids[d]).second) {
      throw DataError("vectorize_counts: duplicate document id '" + ids[d] + "'");
    }
    touched.clear();
    for (const auto& tok : docs[d]) {
      auto idx = vocab.index_of(tok);
      if (!idx) continue;
      if (dense[*idx]++ == 0) touched.push_back(static_cast<std::uint32_t>(*idx));
    }
    std::sort(touched.begin(), touched.end());
    entries.clear();
    for (auto c : touched) {
      entries.emplace_back(c, dense[c]);
      dense[c] = 0;
    }
    if (entries.empty()) ++empty_rows;
    m.append_row(ids[d], entries);
  }
  if (empty_rows > 0 && warnings) {
    warnings->push_back(std::to_string(empty_rows) +
                        " document(s) contain no in-vocabulary terms; kept as all-zero rows");
  }
  return m;
}

std::vector<double> inverse_document_frequency(const DocTermMatrix& counts) {
  std::vector<std::size_t> df(counts.num_cols, 0);
  for (auto c : counts.cols) ++df[c];
  const double n = static_cast<double>(counts.num_rows());
  std::vector<double> idf(counts.num_cols);
  for (std::size_t t = 0; t < idf.size(); ++t) {
    idf[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
  return idf;
}

TfidfMatrix tfidf(const DocTermMatrix& counts) {
  if (counts.num_rows() == 0) throw DataError("tfidf: the count matrix has no rows");
  const auto idf = inverse_document_frequency(counts);
  TfidfMatrix out;
  out.num_cols = counts.num_cols;
  out.tokenizer_hash = counts.tokenizer_hash;
  std::vector<std::pair<std::uint32_t, double>> entries;
  for (std::size_t r = 0; r < counts.num_rows(); ++r) {
    auto cs = counts.row_cols(r);
    auto vs = counts.row_values(r);
    entries.clear();
    double norm2 = 0.0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const double w = static_cast<double>(vs[i]) * idf[cs[i]];
      entries.emplace_back(cs[i], w);
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& e : entries) e.second *= inv;
    }
    out.append_row(counts.row_ids[r], entries);
  }
  return out;
}

static double rank_key(double score) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", score);
  return std::strtod(buf, nullptr);
}

std::vector<ScoredTerm> top_terms(std::span<const std::size_t> rows, const TfidfMatrix& weights,
                                  const Vocabulary& vocab, std::size_t n) {
  if (rows.empty()) throw DataError("top_terms: the document subset is empty");
  if (weights.num_cols != vocab.size()) {
    throw DataError("top_terms: matrix width does not match the vocabulary");
  }
  std::vector<double> score(weights.num_cols, 0.0);
  for (auto r : rows) {
    if (r >= weights.num_rows()) throw DataError("top_terms: row index out of range");
    auto cs = weights.row_cols(r);
    auto vs = weights.row_values(r);
    for (std::size_t i = 0; i < cs.size(); ++i) score[cs[i]] += vs[i];
  }
  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < score.size(); ++t) {
    if (score[t] > 0.0) order.push_back(t);
  }
  // Rank on scores rounded to 12 significant digits so that sums which are
  // equal up to rounding tie and fall back to term order.
  std::vector<double> key(score.size());
  for (std::size_t t = 0; t < score.size(); ++t) key[t] = rank_key(score[t]);
  auto better = [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] > key[b];
    return vocab.term(a) < vocab.term(b);
  };
  const std::size_t keep = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    better);
  std::vector<ScoredTerm> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back({vocab.term(order[i]), score[order[i]]});
  return out;
}

// ---------------------------------------------------------------------------
// Triplet files

namespace {

template <typename T>
void write_triplets_impl(std::ostream& out, const SparseMatrix<T>& m, const char* kind) {
  out << "%semspan-triplets 1\n";
  out << "%kind " << kind << '\n';
  out << "%shape " << m.num_rows() << ' ' << m.num_cols << ' ' << m.nnz() << '\n';
  out << "%tokenizer " << (m.tokenizer_hash.empty() ? "-" : m.tokenizer_hash) << '\n';
  for (std::size_t r = 0; r < m.num_rows(); ++r) out << "%row " << r << ' ' << m.row_ids[r] << '\n';
  char buf[64];
  for (std::size_t r = 0; r < m.num_rows(); ++r) {
    auto cs = m.row_cols(r);
    auto vs = m.row_values(r);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if constexpr (std::is_floating_point_v<T>) {
        std::snprintf(buf, sizeof(buf), "%.17g", vs[i]);
        out << r << ' ' << cs[i] << ' ' << buf << '\n';
      } else {
        out << r << ' ' << cs[i] << ' ' << vs[i] << '\n';
      }
    }
  }
}

template <typename T>
SparseMatrix<T> read_triplets_impl(std::istream& in, std::string_view expected_kind) {
  auto fail = [](const std::string& msg) -> DataError {
    return DataError("triplet file: " + msg);
  };
  std::string line;
  if (!std::getline(in, line) || line != "%semspan-triplets 1") throw fail("bad magic line");
  std::string word, kind;
  if (!std::getline(in, line)) throw fail("missing %kind");
  {
    std::istringstream ss(line);
    ss >> word >> kind;
    if (word != "%kind" || kind != expected_kind) {
      throw fail("expected kind " + std::string(expected_kind));
    }
  }
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!std::getline(in, line)) throw fail("missing %shape");
  {
    std::istringstream ss(line);
    if (!(ss >> word >> rows >> cols >> nnz) || word != "%shape") throw fail("bad %shape");
  }
  SparseMatrix<T> m;
  m.num_cols = cols;
  if (!std::getline(in, line)) throw fail("missing %tokenizer");
  {
    std::istringstream ss(line);
    if (!(ss >> word >> m.tokenizer_hash) || word != "%tokenizer") throw fail("bad %tokenizer");
    if (m.tokenizer_hash == "-") m.tokenizer_hash.clear();
  }
  std::vector<std::string> ids(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line) || line.rfind("%row ", 0) != 0) throw fail("missing %row line");
    std::istringstream ss(line.substr(5));
    std::size_t idx = 0;
    if (!(ss >> idx) || idx != r) throw fail("row lines out of order");
    ss.get();
    std::getline(ss, ids[r]);
  }
  std::vector<std::vector<std::pair<std::uint32_t, T>>> per_row(rows);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t r = 0;
    std::uint32_t c = 0;
    T v{};
    if (!(in >> r >> c >> v)) throw fail("truncated entries");
    if (r >= rows || c >= cols) throw fail("entry out of range");
    per_row[r].emplace_back(c, v);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::sort(per_row[r].begin(), per_row[r].end());
    m.append_row(ids[r], per_row[r]);
  }
  return m;
}

}  // namespace

void write_triplets(std::ostream& out, const DocTermMatrix& m) { write_triplets_impl(out, m, "counts"); }
void write_triplets(std::ostream& out, const TfidfMatrix& m) { write_triplets_impl(out, m, "tfidf"); }

DocTermMatrix read_count_triplets(std::istream& in) {
  return read_triplets_impl<std::int32_t>(in, "counts");
}

TfidfMatrix read_tfidf_triplets(std::istream& in) { return read_triplets_impl<double>(in, "tfidf"); }

}  // namespace semspan
