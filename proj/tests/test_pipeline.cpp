#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "semspan/error.hpp"
#include "semspan/pipeline.hpp"

using namespace semspan;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("semspan_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig small_config(std::uint64_t seed = 7) {
  PipelineConfig c;
  c.k = 4;
  c.iterations = 150;
  c.infer_iterations = 40;
  c.seed = seed;
  c.min_df = 1;
  c.c_max = 5;
  c.restarts = 3;
  c.top_words = 5;
  return c;
}

// Four planted topics. Communities A and B share a quality, C and D each
// sit on their own topic.
Corpus planted_corpus() {
  SyntheticSpec spec;
  spec.k_true = 4;
  spec.vocabulary_size = 160;
  spec.qualities = {{"q0", {1, 0, 0, 0}}, {"q1", {0, 1, 0, 0}}, {"q2", {0, 0, 1, 0}}, {"q3", {0, 0, 0, 1}}};
  spec.communities = {{"A", {{"q0", 30}}}, {"B", {{"q0", 30}}}, {"C", {{"q1", 30}}}, {"D", {{"q2", 20}, {"q3", 20}}}};
  spec.seed = 5;
  return generate_synthetic(spec).corpus;
}

std::set<std::string> member_communities(const SubGraph& s) {
  return {s.communities.begin(), s.communities.end()};
}

}  // namespace

TEST_CASE("config: setting values") {
  PipelineConfig c;
  c.set("strict", "yes");
  CHECK(c.strict);
  c.set("strict", "off");
  CHECK_FALSE(c.strict);
  c.set("k", "12");
  CHECK(c.k == 12);
  c.set("alpha", "0.5");
  CHECK(c.alpha == 0.5);
  c.set("alpha", "auto");
  CHECK_FALSE(c.alpha.has_value());
  c.set("tau_all", "0.85");
  CHECK(c.tau_all == 0.85);
  CHECK_THROWS_AS(c.set("k", "-3"), UsageError);
  CHECK_THROWS_AS(c.set("k", "3x"), UsageError);
  CHECK_THROWS_AS(c.set("beta", "nan"), UsageError);
  CHECK_THROWS_AS(c.set("beta", "inf"), UsageError);
  CHECK_THROWS_AS(c.set("strict", "maybe"), UsageError);
  CHECK_THROWS_AS(c.set("no_such_key", "1"), UsageError);
}

TEST_CASE("config: file loading resolves relative paths") {
  const auto dir = scratch("config");
  {
    std::ofstream out(dir / "run.conf");
    out << "# comment line\n\ninput = data/corpus.jsonl\nk = 8   # trailing comment\nstopwords = none\n"
        << "output_dir = /abs/out\n";
  }
  const auto c = PipelineConfig::from_file(dir / "run.conf");
  CHECK(c.input == dir / "data/corpus.jsonl");
  CHECK(c.k == 8);
  CHECK(c.stopwords == "none");
  CHECK(c.output_dir == "/abs/out");
  CHECK(c.tokenizer().stopwords.empty());

  {
    std::ofstream out(dir / "bad.conf");
    out << "k 8\n";
  }
  CHECK_THROWS_AS(PipelineConfig::from_file(dir / "bad.conf"), UsageError);
  CHECK_THROWS(PipelineConfig::from_file(dir / "missing.conf"));
}

TEST_CASE("config: validation") {
  CHECK_NOTHROW(PipelineConfig{}.validate());
  auto bad = [](const std::string& key, const std::string& value) {
    PipelineConfig c;
    c.set(key, value);
    CHECK_THROWS_AS(c.validate(), UsageError);
  };
  bad("tau_all", "1.5");
  bad("tau_span", "-0.1");
  bad("tau_exp1", "2");
  bad("k", "0");
  bad("alpha", "0");
  bad("beta", "0");
  bad("min_df", "0");
  bad("max_df_ratio", "0");
  bad("c_min", "1");
  bad("top_words", "0");
  bad("average_last", "5000");
  PipelineConfig c;
  c.c_min = 6;
  c.c_max = 5;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("config: canonical form and fingerprint") {
  PipelineConfig a, b;
  a.input = "x.jsonl";
  b.input = "y.jsonl";
  b.output_dir = "elsewhere";
  CHECK(a.canonical() == b.canonical());
  CHECK(a.fingerprint() == b.fingerprint());
  b.seed = 1;
  CHECK(a.fingerprint() != b.fingerprint());
  b.seed = 0;
  b.stopwords = "none";
  CHECK(a.fingerprint() != b.fingerprint());
  const auto text = a.canonical();
  CHECK(text.find("seed = 0\n") != std::string::npos);
  CHECK(text.find("alpha = auto\n") != std::string::npos);
  CHECK(a.lda_options().resolved_alpha() == doctest::Approx(50.0 / 20.0));
  CHECK(a.selection_params().seed != a.seed);
}

TEST_CASE("exp1 groups communities that share a quality") {
  const auto corpus = planted_corpus();
  const auto config = small_config();
  const auto space = build_topic_space(config, corpus);
  REQUIRE(space.theta.theta.rows == corpus.size());
  const auto r = run_exp1(config, corpus, space);
  REQUIRE(r.centroids.size() == 4);
  CHECK(r.centroids[0].label.community == "A");
  CHECK(r.centroids[0].support == 30);
  REQUIRE(r.components.size() == 3);
  std::set<std::set<std::string>> groups;
  for (const auto& s : r.components) groups.insert(member_communities(s));
  CHECK(groups == std::set<std::set<std::string>>{{"A", "B"}, {"C"}, {"D"}});
  CHECK(r.report["experiment"] == "exp1");
  CHECK(r.report["similarity"]["labels"].size() == 4);
  CHECK(r.report["provenance"]["documents"] == corpus.size());
  CHECK(r.report_text.find("Experiment 1") != std::string::npos);

  Corpus single(std::vector<Submission>(corpus.submissions().begin(), corpus.submissions().begin() + 10));
  const auto single_space = build_topic_space(config, single);
  CHECK_THROWS_AS(run_exp1(config, single, single_space), DataError);
}

TEST_CASE("exp2 structure and determinism") {
  const auto corpus = planted_corpus();
  const auto config = small_config();
  const auto space = build_topic_space(config, corpus);
  const auto r = run_exp2(config, corpus, space);
  REQUIRE(r.spans.size() == 4);
  CHECK(r.pairs.size() == 6);
  std::size_t nodes = 0;
  for (const auto& s : r.spans) {
    CHECK(s.size() >= 1);
    CHECK(s.size() <= config.c_max);
    nodes += s.size();
  }
  CHECK(r.graph.size() == nodes);
  // Every document appears in exactly one sub-graph.
  std::multiset<std::string> docs;
  for (const auto& row : r.table) docs.insert(row.documents.begin(), row.documents.end());
  CHECK(docs.size() == corpus.size());
  CHECK(std::set<std::string>(docs.begin(), docs.end()).size() == corpus.size());
  for (std::size_t i = 0; i < r.table.size(); ++i) {
    CHECK(r.table[i].index == i + 1);
    CHECK(r.table[i].top_terms.size() <= config.top_words);
  }
  // D mixes two topics no other community carries, so nothing of D's joins
  // a sub-graph with C.
  for (const auto& s : r.components) {
    const auto cs = member_communities(s);
    CHECK_FALSE((cs.count("C") && cs.count("D")));
  }
  for (const char* key : {"experiment", "provenance", "parameters", "spans", "similarity", "subgraphs", "pairs",
                          "warnings"}) {
    CHECK(r.report.contains(key));
  }
  const auto again = run_exp2(config, corpus, build_topic_space(config, corpus));
  CHECK(again.report.dump() == r.report.dump());
  CHECK(again.report_text == r.report_text);
}

TEST_CASE("exp2 on identical communities merges their spans") {
  SyntheticSpec spec;
  spec.k_true = 2;
  spec.vocabulary_size = 80;
  spec.qualities = {{"q", {0.5, 0.5}}};
  spec.communities = {{"left", {{"q", 30}}}, {"right", {{"q", 30}}}};
  spec.seed = 9;
  const auto corpus = generate_synthetic(spec).corpus;
  auto config = small_config();
  config.k = 2;
  config.tau_all = 0.8;
  const auto r = run_exp2(config, corpus, build_topic_space(config, corpus));
  bool mixed = false;
  for (const auto& s : r.components) mixed |= s.communities.size() == 2;
  CHECK(mixed);
}

TEST_CASE("a cached model reproduces the cold run") {
  const auto corpus = planted_corpus();
  const auto config = small_config(11);
  const auto dir = scratch("cache");
  const auto cold = build_topic_space(config, corpus);
  const auto first = build_topic_space(config, corpus, dir);
  CHECK_FALSE(first.model_from_cache);
  const auto second = build_topic_space(config, corpus, dir);
  CHECK(second.model_from_cache);
  CHECK(second.theta.theta == cold.theta.theta);
  CHECK(first.theta.theta == cold.theta.theta);
  CHECK(run_exp1(config, corpus, second).report.dump() == run_exp1(config, corpus, cold).report.dump());

  auto other = config;
  other.seed = 12;
  CHECK_FALSE(build_topic_space(other, corpus, dir).model_from_cache);

  for (const auto& e : fs::directory_iterator(dir)) {
    std::ofstream(e.path(), std::ios::trunc) << "{not json";
  }
  const auto recovered = build_topic_space(config, corpus, dir);
  CHECK_FALSE(recovered.model_from_cache);
  CHECK_FALSE(recovered.warnings.empty());
  CHECK(recovered.theta.theta == cold.theta.theta);
}

TEST_CASE("writing results") {
  const auto corpus = planted_corpus();
  const auto config = small_config();
  const auto space = build_topic_space(config, corpus);
  const auto dir = scratch("write");
  write_exp1(run_exp1(config, corpus, space), dir / "exp1");
  for (const char* f : {"report.json", "report.txt", "graph.dot", "graph.json"}) {
    CHECK(fs::file_size(dir / "exp1" / f) > 0);
  }
  const auto parsed = nlohmann::json::parse(std::ifstream(dir / "exp1" / "graph.json"));
  CHECK(graph_from_json(parsed).size() == 4);

  write_exp2(run_exp2(config, corpus, space), dir / "exp2");
  std::size_t spans = 0, metrics = 0, pairs = 0;
  for (const auto& e : fs::directory_iterator(dir / "exp2" / "spans")) spans += e.path().extension() == ".json";
  for (const auto& e : fs::directory_iterator(dir / "exp2" / "metrics")) metrics += e.path().extension() == ".csv";
  for (const auto& e : fs::directory_iterator(dir / "exp2" / "pairs")) pairs += 1;
  CHECK(spans == 4);
  CHECK(metrics == 4);
  CHECK(pairs == 12);
  for (const auto& e : fs::recursive_directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("fit-topics outputs") {
  const auto corpus = planted_corpus();
  auto config = small_config();
  const auto dir = scratch("fit");
  config.output_dir = dir;
  const auto report = run_fit_topics(config, corpus, dir / "topics", true);
  for (const char* f : {"model.json", "vocabulary.json", "counts.triplets", "tfidf.triplets", "theta.csv",
                        "topics.txt", "fit_report.json", "nmf_topics.txt", "nmf_objective.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / "topics" / f), f);
  }
  CHECK(report["perplexity"].get<double>() > 1.0);
  CHECK(fs::exists(dir / "cache"));
}

TEST_CASE("safe_filename and atomic writes") {
  CHECK(safe_filename("CrohnsDisease") == "CrohnsDisease");
  CHECK(safe_filename("a b/c#1") == "a_b_c_1");
  CHECK(safe_filename("x-y_z") == "x-y_z");
  const auto dir = scratch("atomic");
  write_file_atomic(dir / "f.txt", "one");
  write_file_atomic(dir / "f.txt", "two");
  std::ifstream in(dir / "f.txt");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text == "two");
  CHECK_FALSE(fs::exists(dir / "f.txt.tmp"));
}
