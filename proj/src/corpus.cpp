#include "semspan/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "semspan/error.hpp"
#include "semspan/hash.hpp"

namespace semspan {

int utc_year(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{unix_seconds}};
  const year_month_day ymd{floor<days>(tp)};
  return static_cast<int>(ymd.year());
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::vector<Submission> submissions) : submissions_(std::move(submissions)) {
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < submissions_.size(); ++i) {
    const auto& s = submissions_[i];
    if (s.id.empty()) throw DataError("submission " + std::to_string(i) + " has an empty id");
    if (!ids.insert(s.id).second) throw DataError("duplicate submission id '" + s.id + "'");
    if (blank(s.body)) throw DataError("submission '" + s.id + "' has an empty body");
    if (s.community.empty()) throw DataError("submission '" + s.id + "' has no community label");
    auto [it, inserted] = community_index_.try_emplace(s.community, communities_.size());
    if (inserted) {
      communities_.push_back(s.community);
      members_.emplace_back();
    }
    members_[it->second].push_back(i);
  }
}

std::optional<std::size_t> Corpus::community_index(std::string_view label) const {
  auto it = community_index_.find(std::string(label));
  if (it == community_index_.end()) return std::nullopt;
  return it->second;
}

std::string Corpus::fingerprint() const {
  Fingerprint fp;
  fp.add("corpus-v1");
  for (const auto& s : submissions_) fp.add(s.id).add(s.community).add(s.body);
  return fp.hex();
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

std::int64_t integer_field(const nlohmann::json& obj, const char* key, std::int64_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (std::isfinite(v) && v == std::floor(v)) return static_cast<std::int64_t>(v);
  }
  throw DataError(std::string("field '") + key + "' must be an integer");
}

std::optional<std::string> string_field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Submission submission_from_json(const nlohmann::json& obj, bool strict, std::string* note) {
  if (!obj.is_object()) throw DataError("line is not a JSON object");
  Submission s;

  auto id = obj.find("id");
  if (id == obj.end() || id->is_null()) throw DataError("missing required field 'id'");
  if (id->is_string()) {
    s.id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    s.id = std::to_string(id->get<std::int64_t>());
  } else {
    throw DataError("field 'id' must be a string");
  }
  if (s.id.empty()) throw DataError("field 'id' is empty");

  auto body = string_field(obj, "body");
  if (!body) throw DataError("missing required field 'body'");
  if (blank(*body)) throw DataError("empty body");
  s.body = std::move(*body);

  auto community = string_field(obj, "subreddit");
  if (!community) throw DataError("missing required field 'subreddit'");
  if (community->empty()) throw DataError("field 'subreddit' is empty");
  s.community = std::move(*community);

  s.title = string_field(obj, "title").value_or("");
  s.url = string_field(obj, "url");
  s.score = integer_field(obj, "score", 0);
  s.num_comments = integer_field(obj, "num_comments", 0);
  if (s.num_comments < 0) throw DataError("field 'num_comments' is negative");

  if (auto it = obj.find("created_utc"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw DataError("field 'created_utc' must be a number");
    // Dumps often store created_utc as a float.
    s.created_utc = it->is_number_integer()
                        ? it->get<std::int64_t>()
                        : static_cast<std::int64_t>(std::floor(it->get<double>()));
  }
  if (auto it = obj.find("year"); it != obj.end() && !it->is_null()) {
    s.year = static_cast<int>(integer_field(obj, "year", 0));
  }
  if (s.created_utc) {
    const int derived = utc_year(*s.created_utc);
    if (!s.year) {
      s.year = derived;
    } else if (*s.year != derived) {
      const std::string msg = "year " + std::to_string(*s.year) + " disagrees with created_utc (" +
                              std::to_string(derived) + ")";
      if (strict) throw DataError(msg);
      if (note) *note = msg + "; keeping the explicit year";
    }
  }
  return s;
}

nlohmann::json submission_to_json(const Submission& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["title"] = s.title;
  j["body"] = s.body;
  j["score"] = s.score;
  j["num_comments"] = s.num_comments;
  if (s.created_utc) j["created_utc"] = *s.created_utc;
  j["subreddit"] = s.community;
  if (s.year) j["year"] = *s.year;
  if (s.url) j["url"] = *s.url;
  return j;
}

LoadResult parse_jsonl(std::istream& in, bool strict) {
  LoadResult result;
  std::vector<Submission> subs;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    try {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("malformed JSON: ") + e.what());
      }
      std::string note;
      Submission s = submission_from_json(obj, strict, &note);
      if (!ids.insert(s.id).second) throw DataError("duplicate id '" + s.id + "'");
      if (!note.empty()) result.issues.push_back({line_no, note, false});
      subs.push_back(std::move(s));
    } catch (const DataError& e) {
      if (strict) throw DataError("line " + std::to_string(line_no) + ": " + e.what());
      ++result.skipped;
      result.issues.push_back({line_no, e.what(), true});
    }
  }
  result.corpus = Corpus(std::move(subs));
  return result;
}

LoadResult load_jsonl(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path.string());
  return parse_jsonl(in, strict);
}

void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.submissions()) out << submission_to_json(s).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Summaries

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = {
      "Community", "Mean posts per year (std)", "Total number of posts",
      "Mean tokens per post (std)", "Total tokens"};
  return cols;
}

std::vector<CommunitySummary> summarize(const Corpus& corpus, const TokenizerConfig& tokenizer) {
  if (corpus.empty()) throw DataError("summarize: the corpus is empty");
  std::vector<CommunitySummary> rows;
  for (std::size_t c = 0; c < corpus.communities().size(); ++c) {
    const auto& members = corpus.members()[c];
    std::map<int, std::size_t> per_year;
    std::vector<double> tokens;
    tokens.reserve(members.size());
    std::size_t total_tokens = 0;
    for (auto i : members) {
      const auto& s = corpus[i];
      if (s.year) ++per_year[*s.year];
      const std::size_t n = tokenize(s.body, tokenizer).size();
      total_tokens += n;
      tokens.push_back(static_cast<double>(n));
    }
    std::vector<double> yearly;
    for (const auto& [year, count] : per_year) yearly.push_back(static_cast<double>(count));

    CommunitySummary row;
    row.community = corpus.communities()[c];
    row.posts_per_year_mean = mean_of(yearly);
    row.posts_per_year_std = sample_std(yearly);
    row.total_posts = members.size();
    row.tokens_per_post_mean = mean_of(tokens);
    row.tokens_per_post_std = sample_std(tokens);
    row.total_tokens = total_tokens;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.total_posts != b.total_posts) return a.total_posts > b.total_posts;
    return a.community < b.community;
  });
  return rows;
}

namespace {

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

std::string format_summary_table(std::span<const CommunitySummary> rows) {
  const auto& header = summary_columns();
  std::vector<std::vector<std::string>> cells;
  cells.push_back(header);
  for (const auto& r : rows) {
    cells.push_back({r.community,
                     fixed1(r.posts_per_year_mean) + " (" + fixed1(r.posts_per_year_std) + ")",
                     std::to_string(r.total_posts),
                     fixed1(r.tokens_per_post_mean) + " (" + fixed1(r.tokens_per_post_std) + ")",
                     std::to_string(r.total_tokens)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      // First column left-aligned, numbers right-aligned.
      const std::string pad(width[i] - row[i].size(), ' ');
      if (i == 0) {
        out << row[i] << pad;
      } else {
        out << "  " << pad << row[i];
      }
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json summary_to_json(std::span<const CommunitySummary> rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["community"] = r.community;
    j["posts_per_year_mean"] = r.posts_per_year_mean;
    j["posts_per_year_std"] = r.posts_per_year_std;
    j["total_posts"] = r.total_posts;
    j["tokens_per_post_mean"] = r.tokens_per_post_mean;
    j["tokens_per_post_std"] = r.tokens_per_post_std;
    j["total_tokens"] = r.total_tokens;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace semspan
