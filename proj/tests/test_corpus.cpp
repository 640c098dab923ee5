#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "semspan/corpus.hpp"
#include "semspan/error.hpp"

using namespace semspan;

namespace {

const std::string kFixtures = std::string(SEMSPAN_SOURCE_DIR) + "/tests/fixtures/";

Submission post(std::string id, std::string community, std::string body, int year) {
  Submission s;
  s.id = std::move(id);
  s.community = std::move(community);
  s.body = std::move(body);
  s.year = year;
  return s;
}

SyntheticSpec two_quality_spec(std::size_t docs_each, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.k_true = 2;
  spec.vocabulary_size = 40;
  spec.qualities = {{"q0", {1.0, 0.0}}, {"q1", {0.0, 1.0}}};
  spec.communities = {{"alpha", {{"q0", docs_each}}}, {"beta", {{"q1", docs_each}}}};
  spec.doc_length_mean = 100;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("load_jsonl: submission fields map onto the schema") {
  const auto r = load_jsonl(kFixtures + "example_submission.jsonl", true);
  REQUIRE(r.corpus.size() == 3);
  CHECK(r.skipped == 0);
  const auto& s = r.corpus[0];
  CHECK(s.id == "2f9xq1");
  CHECK(s.title == "looking for any help to manage pain");
  CHECK(s.score == 3);
  CHECK(s.num_comments == 4);
  CHECK(s.created_utc == 1409875200);
  CHECK(s.community == "TrigeminalNeuralgia");
  CHECK(s.year == 2014);
  CHECK(s.url.has_value());
  CHECK(r.corpus.communities() ==
        std::vector<std::string>{"TrigeminalNeuralgia", "CrohnsDisease", "ankylosingspondylitis"});
}

TEST_CASE("load_jsonl: empty file and missing file") {
  const auto r = load_jsonl(kFixtures + "empty.jsonl", true);
  CHECK(r.corpus.size() == 0);
  CHECK(r.corpus.communities().empty());
  CHECK_THROWS_AS(load_jsonl(kFixtures + "no_such_file.jsonl", false), DataError);
}

TEST_CASE("load_jsonl: lenient mode skips and counts bad lines, strict mode aborts") {
  const auto r = load_jsonl(kFixtures + "missing_body.jsonl", false);
  CHECK(r.corpus.size() == 3);
  CHECK(r.skipped == 1);
  REQUIRE(r.issues.size() == 1);
  CHECK(r.issues[0].line == 3);
  CHECK_THROWS_AS(load_jsonl(kFixtures + "missing_body.jsonl", true), DataError);
}

TEST_CASE("parse_jsonl: malformed records") {
  auto lenient = [](const std::string& text) {
    std::istringstream in(text);
    return parse_jsonl(in, false);
  };
  CHECK(lenient("{not json}\n").skipped == 1);
  CHECK(lenient(R"({"id":"a","body":"   ","subreddit":"x"})").skipped == 1);
  CHECK(lenient(R"({"id":"a","body":"text"})").skipped == 1);
  CHECK(lenient(R"({"body":"text","subreddit":"x"})").skipped == 1);
  CHECK(lenient(R"({"id":"a","body":"text","subreddit":"x","num_comments":-1})").skipped == 1);
  const auto dup = lenient("{\"id\":\"a\",\"body\":\"t\",\"subreddit\":\"x\"}\n{\"id\":\"a\",\"body\":\"u\",\"subreddit\":\"x\"}\n");
  CHECK(dup.corpus.size() == 1);
  CHECK(dup.skipped == 1);
  const auto blank = lenient("\n\n{\"id\":7,\"body\":\"t\",\"subreddit\":\"x\"}\n\n");
  REQUIRE(blank.corpus.size() == 1);
  CHECK(blank.corpus[0].id == "7");
  CHECK(blank.skipped == 0);
}

TEST_CASE("year derivation") {
  const nlohmann::json base = {{"id", "a"}, {"body", "text"}, {"subreddit", "x"}};
  SUBCASE("derived from created_utc") {
    auto j = base;
    j["created_utc"] = 1420070399;  // 2014-12-31T23:59:59Z
    CHECK(submission_from_json(j, true).year == 2014);
    j["created_utc"] = 1420070400.5;
    CHECK(submission_from_json(j, true).year == 2015);
  }
  SUBCASE("explicit year only") {
    auto j = base;
    j["year"] = 2019;
    CHECK(submission_from_json(j, true).year == 2019);
  }
  SUBCASE("conflict: error when strict, explicit year kept with a note otherwise") {
    auto j = base;
    j["created_utc"] = 1420070400;
    j["year"] = 2013;
    CHECK_THROWS_AS(submission_from_json(j, true), DataError);
    std::string note;
    CHECK(submission_from_json(j, false, &note).year == 2013);
    CHECK_FALSE(note.empty());
  }
  CHECK(utc_year(0) == 1970);
  CHECK(utc_year(-1) == 1969);
}

TEST_CASE("corpus invariants") {
  const Corpus c({post("1", "b", "x y", 2014), post("2", "a", "x y", 2014), post("3", "b", "z", 2015)});
  CHECK(c.communities() == std::vector<std::string>{"b", "a"});
  CHECK(c.community_index("a") == 1);
  CHECK_FALSE(c.community_index("zz").has_value());
  CHECK(c.members()[0] == std::vector<std::size_t>{0, 2});
  for (const auto& s : c.submissions()) CHECK(c.community_index(s.community).has_value());
  CHECK_THROWS_AS(Corpus({post("1", "a", "x", 2014), post("1", "a", "y", 2014)}), DataError);
  CHECK_THROWS_AS(Corpus({post("1", "a", "  ", 2014)}), DataError);
  CHECK_THROWS_AS(Corpus({post("1", "", "x", 2014)}), DataError);
}

TEST_CASE("summarize: documented examples") {
  const auto tok = default_tokenizer();
  SUBCASE("two posts of five tokens in one year") {
    const Corpus c({post("1", "pain", "knee ankle wrist elbow shoulder", 2014),
                    post("2", "pain", "migraine aura nausea light sound", 2014)});
    const auto rows = summarize(c, tok);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].total_posts == 2);
    CHECK(rows[0].tokens_per_post_mean == 5.0);
    CHECK(rows[0].tokens_per_post_std == 0.0);
    CHECK(rows[0].total_tokens == 10);
    CHECK(rows[0].posts_per_year_mean == 2.0);
    CHECK(rows[0].posts_per_year_std == 0.0);
  }
  SUBCASE("a single post has zero spread") {
    const auto rows = summarize(Corpus({post("1", "x", "back pain today", 2020)}), tok);
    CHECK(rows[0].tokens_per_post_std == 0.0);
    CHECK(rows[0].posts_per_year_std == 0.0);
  }
  SUBCASE("empty corpus") {
    CHECK_THROWS_AS(summarize(Corpus{}, tok), DataError);
  }
  SUBCASE("hand-computed sample deviations and ordering") {
    // 'b': years 2014 x1, 2015 x3 -> mean 2, sd sqrt(2); tokens 1,2,3,2 -> mean 2, sd sqrt(2/3).
    const Corpus c({post("1", "b", "aa", 2014), post("2", "b", "aa bb", 2015), post("3", "b", "aa bb cc", 2015),
                    post("4", "b", "aa bb", 2015), post("5", "a", "aa", 2015)});
    const auto rows = summarize(c, tok);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].community == "b");
    CHECK(rows[0].posts_per_year_mean == doctest::Approx(2.0));
    CHECK(rows[0].posts_per_year_std == doctest::Approx(std::sqrt(2.0)));
    CHECK(rows[0].tokens_per_post_mean == doctest::Approx(2.0));
    CHECK(rows[0].tokens_per_post_std == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(rows[0].total_tokens == 8);
    CHECK(rows[1].community == "a");
  }
}

TEST_CASE("summary output follows the dataset table's column order") {
  CHECK(summary_columns() == std::vector<std::string>{"Community", "Mean posts per year (std)",
                                                      "Total number of posts", "Mean tokens per post (std)",
                                                      "Total tokens"});
  const auto rows = summarize(load_jsonl(kFixtures + "example_submission.jsonl", true).corpus, default_tokenizer());
  const std::string table = format_summary_table(rows);
  std::size_t last = 0;
  for (const auto& col : summary_columns()) {
    const auto pos = table.find(col);
    REQUIRE(pos != std::string::npos);
    CHECK(pos >= last);
    last = pos;
  }
  const auto j = summary_to_json(rows);
  REQUIRE(j.size() == 3);
  std::vector<std::string> keys;
  for (auto it = j[0].begin(); it != j[0].end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"community", "posts_per_year_mean", "posts_per_year_std", "total_posts",
                                         "tokens_per_post_mean", "tokens_per_post_std", "total_tokens"});
}

TEST_CASE("summarize is invariant to submission order") {
  const auto synth = generate_synthetic(two_quality_spec(30, 5));
  const auto base = summarize(synth.corpus, default_tokenizer());
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto subs = synth.corpus.submissions();
    std::shuffle(subs.begin(), subs.end(), gen);
    const auto rows = summarize(Corpus(subs), default_tokenizer());
    REQUIRE(rows.size() == base.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].community == base[i].community);
      CHECK(rows[i].total_posts == base[i].total_posts);
      CHECK(rows[i].total_tokens == base[i].total_tokens);
      CHECK(rows[i].posts_per_year_mean == doctest::Approx(base[i].posts_per_year_mean).epsilon(1e-12));
      CHECK(rows[i].posts_per_year_std == doctest::Approx(base[i].posts_per_year_std).epsilon(1e-12));
      CHECK(rows[i].tokens_per_post_mean == doctest::Approx(base[i].tokens_per_post_mean).epsilon(1e-12));
      CHECK(rows[i].tokens_per_post_std == doctest::Approx(base[i].tokens_per_post_std).epsilon(1e-12));
    }
  }
}

TEST_CASE("generate_synthetic: documented examples") {
  SUBCASE("zero documents give an empty corpus") {
    auto spec = two_quality_spec(0, 1);
    const auto s = generate_synthetic(spec);
    CHECK(s.corpus.empty());
    CHECK(s.truth.warnings.size() == 2);
  }
  SUBCASE("same seed, same corpus; other seed, other corpus") {
    const auto a = generate_synthetic(two_quality_spec(20, 9));
    const auto b = generate_synthetic(two_quality_spec(20, 9));
    const auto c = generate_synthetic(two_quality_spec(20, 10));
    CHECK(a.corpus == b.corpus);
    CHECK(a.truth.to_json() == b.truth.to_json());
    CHECK_FALSE(a.corpus == c.corpus);
  }
  SUBCASE("invalid specs") {
    auto bad = two_quality_spec(5, 1);
    bad.qualities[0].mixture = {0.7, 0.2};
    CHECK_THROWS_AS(generate_synthetic(bad), UsageError);
    bad = two_quality_spec(5, 1);
    bad.qualities[0].mixture = {1.2, -0.2};
    CHECK_THROWS_AS(generate_synthetic(bad), UsageError);
    bad = two_quality_spec(5, 1);
    bad.communities[0].documents[0].first = "nope";
    CHECK_THROWS_AS(generate_synthetic(bad), UsageError);
  }
}

TEST_CASE("generated term histograms match the planted distributions") {
  // Pearson chi-square per quality against its single planted topic; the
  // bound is df + 3 sqrt(2 df), three standard deviations of the statistic.
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = generate_synthetic(two_quality_spec(100, seed));
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < s.truth.terms.size(); ++i) index[s.truth.terms[i]] = i;
    for (std::size_t q = 0; q < 2; ++q) {
      std::vector<double> observed(s.truth.terms.size(), 0.0);
      double total = 0.0;
      for (std::size_t d = 0; d < s.corpus.size(); ++d) {
        if (s.truth.doc_quality[d] != s.truth.qualities[q].label) continue;
        for (const auto& t : tokenize(s.corpus[d].body, default_tokenizer())) {
          REQUIRE(index.count(t));
          observed[index[t]] += 1.0;
          total += 1.0;
        }
      }
      double chi2 = 0.0;
      std::size_t support = 0;
      for (std::size_t i = 0; i < observed.size(); ++i) {
        const double p = s.truth.topics(q, i);
        if (p == 0.0) {
          CHECK(observed[i] == 0.0);
          continue;
        }
        ++support;
        const double e = total * p;
        chi2 += (observed[i] - e) * (observed[i] - e) / e;
      }
      const double df = static_cast<double>(support - 1);
      CHECK(chi2 < df + 3.0 * std::sqrt(2.0 * df));
    }
  }
}

TEST_CASE("generated corpora round-trip through JSONL and summarize to the declared counts") {
  SyntheticSpec spec = two_quality_spec(25, 4);
  spec.communities.push_back({"gamma", {{"q0", 7}, {"q1", 5}}});
  const auto s = generate_synthetic(spec);
  std::stringstream buf;
  write_jsonl(buf, s.corpus);
  const auto back = parse_jsonl(buf, true);
  CHECK(back.corpus == s.corpus);
  const auto rows = summarize(back.corpus, default_tokenizer());
  std::map<std::string, std::size_t> posts;
  for (const auto& r : rows) posts[r.community] = r.total_posts;
  CHECK(posts == std::map<std::string, std::size_t>{{"alpha", 25}, {"beta", 25}, {"gamma", 12}});
  const auto j = spec.to_json();
  CHECK(SyntheticSpec::from_json(j).to_json() == j);
  for (std::size_t d = 0; d < s.corpus.size(); ++d) {
    const auto n = tokenize(s.corpus[d].body, default_tokenizer()).size();
    CHECK(n >= 80);
    CHECK(n <= 120);
  }
}

TEST_CASE("exclusive terms belong to exactly one quality") {
  SyntheticSpec spec;
  spec.k_true = 3;
  spec.vocabulary_size = 60;
  spec.qualities = {{"shared", {0.5, 0.5, 0.0}}, {"solo", {0.0, 0.5, 0.5}}};
  spec.communities = {{"a", {{"shared", 3}, {"solo", 3}}}};
  spec.seed = 2;
  const auto s = generate_synthetic(spec);
  const auto only = s.truth.exclusive_terms("solo");
  const auto t2 = s.truth.topic_terms(2);
  CHECK(std::set<std::string>(only.begin(), only.end()) == std::set<std::string>(t2.begin(), t2.end()));
  CHECK(s.truth.exclusive_terms("shared") == s.truth.topic_terms(0));
}
