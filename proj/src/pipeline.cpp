#include "semspan/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "semspan/error.hpp"
#include "semspan/hash.hpp"
#include "semspan/rng.hpp"

namespace semspan {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const auto x = std::stoull(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw UsageError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw UsageError("config: '" + key + "' expects a number, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

nlohmann::ordered_json component_json(const SubGraph& s) {
  nlohmann::ordered_json c;
  c["kind"] = to_string(s.kind);
  std::vector<std::string> labels;
  for (const auto& l : s.labels) labels.push_back(l.str());
  c["nodes"] = labels;
  c["communities"] = s.communities;
  c["edges"] = s.edge_count;
  return c;
}

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

std::string provenance_text(const nlohmann::ordered_json& p) {
  std::ostringstream out;
  out << "semspan " << p["version"].get<std::string>() << "\n";
  out << "config " << p["config_hash"].get<std::string>() << "  seed " << p["seed"].get<std::uint64_t>()
      << "\n";
  out << "corpus " << p["corpus_fingerprint"].get<std::string>() << "  documents "
      << p["documents"].get<std::size_t>() << "  communities " << p["communities"].get<std::size_t>()
      << "\n";
  out << "vocabulary " << p["vocabulary_hash"].get<std::string>() << "  terms "
      << p["vocabulary_size"].get<std::size_t>() << "\n";
  const auto& m = p["model"];
  out << "lda k=" << m["k"].get<std::size_t>() << " alpha=" << fmt(m["alpha"].get<double>())
      << " beta=" << fmt(m["beta"].get<double>()) << " sweeps=" << m["iterations"].get<std::size_t>()
      << "\n";
  return out.str();
}

std::string similarity_text(const SimilarityGraph& g) {
  std::ostringstream out;
  std::size_t width = 6;
  for (const auto& n : g.nodes) width = std::max(width, n.str().size());
  out << std::string(width, ' ');
  char buf[16];
  for (std::size_t j = 0; j < g.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%8zu", j);
    out << buf;
  }
  out << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto label = g.nodes[i].str();
    out << label << std::string(width - label.size(), ' ');
    for (std::size_t j = 0; j < g.size(); ++j) out << "  " << fixed(g.similarity(i, j), 4);
    out << "   [" << i << "]\n";
  }
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "input") input = v;
  else if (key == "output_dir") output_dir = v;
  else if (key == "strict") strict = parse_bool(key, v);
  else if (key == "lowercase") lowercase = parse_bool(key, v);
  else if (key == "min_token_len") min_token_len = parse_uint(key, v);
  else if (key == "strip_urls") strip_urls = parse_bool(key, v);
  else if (key == "stopwords") stopwords = v;
  else if (key == "min_df") min_df = parse_uint(key, v);
  else if (key == "max_df_ratio") max_df_ratio = parse_real(key, v);
  else if (key == "k") k = parse_uint(key, v);
  else if (key == "alpha") alpha = (v == "auto" || v.empty()) ? std::nullopt : std::optional(parse_real(key, v));
  else if (key == "beta") beta = parse_real(key, v);
  else if (key == "iterations") iterations = parse_uint(key, v);
  else if (key == "infer_iterations") infer_iterations = parse_uint(key, v);
  else if (key == "average_last") average_last = parse_uint(key, v);
  else if (key == "seed") seed = parse_uint(key, v);
  else if (key == "c_min") c_min = parse_uint(key, v);
  else if (key == "c_max") c_max = parse_uint(key, v);
  else if (key == "restarts") restarts = parse_uint(key, v);
  else if (key == "tau_exp1") tau_exp1 = parse_real(key, v);
  else if (key == "tau_span") tau_span = parse_real(key, v);
  else if (key == "tau_all") tau_all = parse_real(key, v);
  else if (key == "top_words") top_words = parse_uint(key, v);
  else throw UsageError("config: unknown key '" + key + "'");
}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path.string());
  PipelineConfig cfg;
  const fs::path base = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    cfg.set(key, line.substr(eq + 1));
  }
  for (fs::path* p : {&cfg.input, &cfg.output_dir, &cfg.stopwords}) {
    if (!p->empty() && p->is_relative() && *p != "none") *p = base / *p;
  }
  return cfg;
}

void PipelineConfig::validate() const {
  for (auto [name, tau] : {std::pair{"tau_exp1", tau_exp1}, {"tau_span", tau_span}, {"tau_all", tau_all}}) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError(std::string(name) + " must lie in [0, 1]");
  }
  if (k < 1) throw UsageError("k must be at least 1");
  if (alpha && !(*alpha > 0.0)) throw UsageError("alpha must be positive");
  if (!(beta > 0.0)) throw UsageError("beta must be positive");
  if (min_df < 1) throw UsageError("min_df must be at least 1");
  if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) throw UsageError("max_df_ratio must lie in (0, 1]");
  if (c_min < 2 || c_max < c_min) throw UsageError("cluster range needs 2 <= c_min <= c_max");
  if (top_words < 1) throw UsageError("top_words must be at least 1");
  if (average_last > iterations) throw UsageError("average_last exceeds iterations");
}

TokenizerConfig PipelineConfig::tokenizer() const {
  TokenizerConfig t;
  t.lowercase = lowercase;
  t.min_token_len = min_token_len;
  t.strip_urls = strip_urls;
  if (stopwords.empty()) {
    t.stopwords.insert(default_stopwords().begin(), default_stopwords().end());
  } else if (stopwords != "none") {
    t.stopwords = read_stopwords(stopwords);
  }
  return t;
}

LdaOptions PipelineConfig::lda_options() const {
  LdaOptions o;
  o.k = k;
  o.alpha = alpha;
  o.beta = beta;
  o.iterations = iterations;
  o.seed = seed;
  o.average_last = average_last;
  return o;
}

SelectionParams PipelineConfig::selection_params() const {
  return {c_min, c_max, restarts, derive_seed(seed, 2)};
}

std::string PipelineConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["strict"] = strict ? "true" : "false";
  kv["tokenizer"] = tokenizer().fingerprint();
  kv["min_df"] = std::to_string(min_df);
  kv["max_df_ratio"] = fmt(max_df_ratio);
  kv["k"] = std::to_string(k);
  kv["alpha"] = alpha ? fmt(*alpha) : "auto";
  kv["beta"] = fmt(beta);
  kv["iterations"] = std::to_string(iterations);
  kv["infer_iterations"] = std::to_string(infer_iterations);
  kv["average_last"] = std::to_string(average_last);
  kv["seed"] = std::to_string(seed);
  kv["c_min"] = std::to_string(c_min);
  kv["c_max"] = std::to_string(c_max);
  kv["restarts"] = std::to_string(restarts);
  kv["tau_exp1"] = fmt(tau_exp1);
  kv["tau_span"] = fmt(tau_span);
  kv["tau_all"] = fmt(tau_all);
  kv["top_words"] = std::to_string(top_words);
  std::string out;
  for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
  return out;
}

std::string PipelineConfig::fingerprint() const { return Fingerprint().add(canonical()).hex(); }

// ---------------------------------------------------------------------------
// Shared topic space

std::map<std::string, std::vector<std::size_t>> TopicSpace::community_rows(const Corpus& corpus) const {
  std::map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < corpus.size(); ++i) rows[corpus[i].community].push_back(i);
  return rows;
}

TopicSpace build_topic_space(const PipelineConfig& config, const Corpus& corpus,
                             const std::optional<fs::path>& cache_dir) {
  config.validate();
  if (corpus.empty()) throw DataError("the corpus is empty");
  TopicSpace space;
  space.tokenizer = config.tokenizer();
  space.docs.reserve(corpus.size());
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& s : corpus.submissions()) {
    space.docs.push_back(tokenize(s.body, space.tokenizer));
    ids.push_back(s.id);
  }
  space.vocabulary = Vocabulary::build(space.docs, config.min_df, config.max_df_ratio);
  space.counts = vectorize_counts(space.docs, ids, space.vocabulary, &space.warnings);
  space.counts.tokenizer_hash = space.tokenizer.fingerprint();

  const LdaOptions lda = config.lda_options();
  Fingerprint key;
  key.add("lda-cache-v1")
      .add(corpus.fingerprint())
      .add(space.tokenizer.fingerprint())
      .add(space.vocabulary.fingerprint())
      .add(static_cast<std::int64_t>(lda.k))
      .add(fmt(lda.resolved_alpha()))
      .add(fmt(lda.beta))
      .add(static_cast<std::int64_t>(lda.iterations))
      .add(static_cast<std::int64_t>(lda.average_last))
      .add(std::to_string(lda.seed));
  std::optional<fs::path> cache_file;
  if (cache_dir) cache_file = *cache_dir / ("lda-" + key.hex() + ".json");

  if (cache_file && fs::exists(*cache_file)) {
    try {
      space.model = LdaModel::load(*cache_file, space.vocabulary.fingerprint());
      space.model_from_cache = true;
    } catch (const DataError& e) {
      space.warnings.push_back(std::string("ignoring unusable cached model: ") + e.what());
    }
  }
  if (!space.model_from_cache) {
    space.model = fit_lda(space.counts, lda, &space.warnings);
    space.model.vocabulary_hash = space.vocabulary.fingerprint();
    if (cache_file) {
      fs::create_directories(cache_file->parent_path());
      write_file_atomic(*cache_file, space.model.to_json().dump() + "\n");
    }
  }

  space.theta = infer_theta(space.model, space.counts, config.infer_iterations, derive_seed(config.seed, 1));
  space.theta.communities.reserve(corpus.size());
  for (const auto& s : corpus.submissions()) space.theta.communities.push_back(s.community);
  return space;
}

nlohmann::ordered_json provenance(const PipelineConfig& config, const Corpus& corpus,
                                  const TopicSpace& space) {
  nlohmann::ordered_json p;
  p["version"] = kVersion;
  p["config_hash"] = config.fingerprint();
  p["seed"] = config.seed;
  p["corpus_fingerprint"] = corpus.fingerprint();
  p["documents"] = corpus.size();
  p["communities"] = corpus.communities().size();
  p["vocabulary_hash"] = space.vocabulary.fingerprint();
  p["vocabulary_size"] = space.vocabulary.size();
  p["tokenizer_hash"] = space.tokenizer.fingerprint();
  nlohmann::ordered_json m;
  m["k"] = space.model.k;
  m["alpha"] = space.model.alpha;
  m["beta"] = space.model.beta;
  m["iterations"] = space.model.iterations;
  m["infer_iterations"] = config.infer_iterations;
  p["model"] = m;
  return p;
}

// ---------------------------------------------------------------------------
// Experiment 1: one centroid per community

Exp1Result run_exp1(const PipelineConfig& config, const Corpus& corpus, const TopicSpace& space) {
  if (corpus.communities().size() < 2) {
    throw DataError("exp1 needs at least two communities, found " +
                    std::to_string(corpus.communities().size()));
  }
  Exp1Result r;
  const auto rows = space.community_rows(corpus);
  for (const auto& label : corpus.communities()) {
    r.centroids.push_back(community_centroid(gather_rows(space.theta.theta, rows.at(label)), label));
  }
  r.graph = build_graph(r.centroids, config.tau_exp1);
  r.components = connected_components(r.graph);

  auto& rep = r.report;
  rep["experiment"] = "exp1";
  rep["provenance"] = provenance(config, corpus, space);
  rep["tau"] = config.tau_exp1;
  rep["centroids"] = nlohmann::ordered_json::array();
  for (const auto& c : r.centroids) {
    nlohmann::ordered_json j;
    j["community"] = c.label.community;
    j["support"] = c.support;
    j["vector"] = c.vector;
    rep["centroids"].push_back(std::move(j));
  }
  nlohmann::ordered_json sim;
  std::vector<std::string> labels;
  for (const auto& n : r.graph.nodes) labels.push_back(n.str());
  sim["labels"] = labels;
  sim["matrix"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.graph.size(); ++i) {
    auto row = r.graph.similarity.row(i);
    sim["matrix"].push_back(std::vector<double>(row.begin(), row.end()));
  }
  rep["similarity"] = sim;
  rep["components"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.components.size(); ++i) {
    auto c = component_json(r.components[i]);
    rep["components"].push_back(std::move(c));
  }
  rep["warnings"] = space.warnings;

  std::ostringstream txt;
  txt << "Experiment 1: community centroid similarity\n\n" << provenance_text(rep["provenance"]);
  txt << "\nCentroids\n";
  for (const auto& c : r.centroids) txt << "  " << c.label.community << "  (" << c.support << " documents)\n";
  txt << "\nCosine similarity\n" << similarity_text(r.graph);
  txt << "\nSub-graphs at similarity >= " << fixed(config.tau_exp1, 3) << "\n";
  for (std::size_t i = 0; i < r.components.size(); ++i) {
    const auto& s = r.components[i];
    std::vector<std::string> names;
    for (const auto& l : s.labels) names.push_back(l.str());
    txt << "  " << (i + 1) << ". " << to_string(s.kind) << ": " << join(names, ", ") << "\n";
  }
  r.report_text = txt.str();
  return r;
}

// ---------------------------------------------------------------------------
// Experiment 2: semantic spans

Exp2Result run_exp2(const PipelineConfig& config, const Corpus& corpus, const TopicSpace& space) {
  Exp2Result r;
  const auto rows = space.community_rows(corpus);
  const auto params = config.selection_params();
  for (const auto& label : corpus.communities()) {
    const auto& idx = rows.at(label);
    std::vector<std::string> ids;
    for (auto i : idx) ids.push_back(corpus[i].id);
    r.spans.push_back(semantic_span(label, gather_rows(space.theta.theta, idx), std::move(ids), params));
  }

  std::vector<Centroid> all;
  for (const auto& s : r.spans) {
    auto cs = s.labeled_centroids();
    all.insert(all.end(), cs.begin(), cs.end());
  }
  r.graph = build_graph(all, config.tau_all);
  r.components = connected_components(r.graph);

  const TfidfMatrix weights = tfidf(space.counts);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < weights.num_rows(); ++i) row_of[weights.row_ids[i]] = i;
  for (std::size_t i = 0; i < r.components.size(); ++i) {
    SubgraphRow row;
    row.index = i + 1;
    row.sub = r.components[i];
    row.documents = assign_documents(row.sub, r.spans);
    std::vector<std::size_t> doc_rows;
    for (const auto& id : row.documents) doc_rows.push_back(row_of.at(id));
    if (!doc_rows.empty()) row.top_terms = top_terms(doc_rows, weights, space.vocabulary, config.top_words);
    r.table.push_back(std::move(row));
  }

  for (std::size_t a = 0; a < r.spans.size(); ++a) {
    for (std::size_t b = a + 1; b < r.spans.size(); ++b) {
      auto cs = r.spans[a].labeled_centroids();
      auto cb = r.spans[b].labeled_centroids();
      cs.insert(cs.end(), cb.begin(), cb.end());
      PairView view;
      view.first = r.spans[a].community;
      view.second = r.spans[b].community;
      view.graph = build_graph(cs, config.tau_span);
      view.components = connected_components(view.graph);
      r.pairs.push_back(std::move(view));
    }
  }

  auto& rep = r.report;
  rep["experiment"] = "exp2";
  rep["provenance"] = provenance(config, corpus, space);
  nlohmann::ordered_json params_json;
  params_json["tau_all"] = config.tau_all;
  params_json["tau_span"] = config.tau_span;
  params_json["top_words"] = config.top_words;
  params_json["cluster_range"] = {config.c_min, config.c_max};
  params_json["restarts"] = config.restarts;
  rep["parameters"] = params_json;
  rep["spans"] = nlohmann::ordered_json::array();
  Warnings warnings = space.warnings;
  for (const auto& s : r.spans) {
    nlohmann::ordered_json j;
    j["community"] = s.community;
    j["documents"] = s.doc_ids.size();
    j["chosen_c"] = s.size();
    j["support"] = s.support;
    j["rule"] = s.selection.rule;
    j["selection"] = s.to_json()["selection"];
    rep["spans"].push_back(std::move(j));
    warnings.insert(warnings.end(), s.warnings.begin(), s.warnings.end());
  }
  nlohmann::ordered_json sim;
  std::vector<std::string> labels;
  for (const auto& n : r.graph.nodes) labels.push_back(n.str());
  sim["labels"] = labels;
  sim["matrix"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.graph.size(); ++i) {
    auto row = r.graph.similarity.row(i);
    sim["matrix"].push_back(std::vector<double>(row.begin(), row.end()));
  }
  rep["similarity"] = sim;
  rep["subgraphs"] = nlohmann::ordered_json::array();
  for (const auto& row : r.table) {
    nlohmann::ordered_json entry;
    entry["index"] = row.index;
    const auto j = component_json(row.sub);
    for (auto it = j.begin(); it != j.end(); ++it) entry[it.key()] = it.value();
    entry["documents"] = row.documents.size();
    entry["top_terms"] = nlohmann::ordered_json::array();
    for (const auto& t : row.top_terms) entry["top_terms"].push_back({{"term", t.term}, {"score", t.score}});
    rep["subgraphs"].push_back(std::move(entry));
  }
  rep["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : r.pairs) {
    nlohmann::ordered_json j;
    j["communities"] = {p.first, p.second};
    j["tau"] = config.tau_span;
    j["edges"] = p.graph.edges.size();
    j["components"] = nlohmann::ordered_json::array();
    for (const auto& c : p.components) j["components"].push_back(component_json(c));
    rep["pairs"].push_back(std::move(j));
  }
  rep["warnings"] = warnings;

  std::ostringstream txt;
  txt << "Experiment 2: semantic span similarity\n\n" << provenance_text(rep["provenance"]);
  txt << "\nSemantic spans (clusters per community)\n";
  for (const auto& s : r.spans) {
    txt << "  " << s.community << ": c = " << s.size() << " over " << s.doc_ids.size() << " documents";
    for (const auto& row : s.selection.table) {
      if (row.c == s.selection.chosen) txt << " (silhouette " << fixed(row.silhouette, 3) << ")";
    }
    txt << "\n";
  }
  txt << "\nSub-graphs at similarity >= " << fixed(config.tau_all, 3) << "\n";
  for (const auto& row : r.table) {
    std::vector<std::string> names, terms;
    for (const auto& l : row.sub.labels) names.push_back(l.str());
    for (const auto& t : row.top_terms) terms.push_back(t.term);
    txt << "  " << row.index << ". " << to_string(row.sub.kind) << " [" << join(row.sub.communities, ", ")
        << "] nodes: " << join(names, ", ") << "\n";
    txt << "     " << row.documents.size() << " documents; top terms: " << join(terms, ", ") << "\n";
  }
  txt << "\nPairwise overlaps at similarity >= " << fixed(config.tau_span, 3) << "\n";
  for (const auto& p : r.pairs) {
    std::size_t linked = 0;
    for (const auto& c : p.components) linked += c.kind != SubGraphKind::kSingleton;
    txt << "  " << p.first << " / " << p.second << ": " << p.graph.edges.size() << " edge(s), " << linked
        << " linked group(s), " << (p.components.size() - linked) << " unrelated node(s)\n";
  }
  if (!warnings.empty()) {
    txt << "\nWarnings\n";
    for (const auto& w : warnings) txt << "  " << w << "\n";
  }
  r.report_text = txt.str();
  return r;
}

// ---------------------------------------------------------------------------
// Output

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string safe_filename(std::string_view label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

void write_exp1(const Exp1Result& result, const fs::path& dir) {
  write_file_atomic(dir / "report.json", result.report.dump(2) + "\n");
  write_file_atomic(dir / "report.txt", result.report_text);
  write_file_atomic(dir / "graph.dot", to_dot(result.graph, result.components));
  write_file_atomic(dir / "graph.json", graph_to_json(result.graph, result.components).dump(2) + "\n");
}

void write_exp2(const Exp2Result& result, const fs::path& dir) {
  write_file_atomic(dir / "report.json", result.report.dump(2) + "\n");
  write_file_atomic(dir / "report.txt", result.report_text);
  write_file_atomic(dir / "graph.dot", to_dot(result.graph, result.components));
  write_file_atomic(dir / "graph.json", graph_to_json(result.graph, result.components).dump(2) + "\n");
  for (std::size_t i = 0; i < result.spans.size(); ++i) {
    const auto& s = result.spans[i];
    const std::string name = std::to_string(i) + "_" + safe_filename(s.community);
    write_file_atomic(dir / "spans" / (name + ".json"), s.to_json().dump(2) + "\n");
    write_file_atomic(dir / "metrics" / (name + ".csv"), s.metrics_csv());
  }
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < result.spans.size(); ++i) index_of[result.spans[i].community] = i;
  for (const auto& p : result.pairs) {
    const std::string name = std::to_string(index_of[p.first]) + "_" + safe_filename(p.first) + "__" +
                             std::to_string(index_of[p.second]) + "_" + safe_filename(p.second);
    write_file_atomic(dir / "pairs" / (name + ".dot"), to_dot(p.graph, p.components));
    write_file_atomic(dir / "pairs" / (name + ".json"), graph_to_json(p.graph, p.components).dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// fit-topics

namespace {

std::string topic_listing(const Matrix& weights, const Vocabulary& vocab, std::size_t n) {
  std::ostringstream out;
  std::vector<std::size_t> order(weights.cols);
  for (std::size_t t = 0; t < weights.rows; ++t) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t keep = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (weights(t, a) != weights(t, b)) return weights(t, a) > weights(t, b);
                        return vocab.term(a) < vocab.term(b);
                      });
    out << "topic " << t << ":";
    for (std::size_t i = 0; i < keep; ++i) out << ' ' << vocab.term(order[i]);
    out << '\n';
  }
  return out.str();
}

}  // namespace

nlohmann::ordered_json run_fit_topics(const PipelineConfig& config, const Corpus& corpus, const fs::path& dir,
                                      bool with_nmf) {
  const TopicSpace space = build_topic_space(config, corpus, config.output_dir / "cache");
  const TfidfMatrix weights = tfidf(space.counts);

  write_file_atomic(dir / "model.json", space.model.to_json().dump() + "\n");
  write_file_atomic(dir / "vocabulary.json", space.vocabulary.to_json().dump(2) + "\n");
  {
    std::ostringstream out;
    write_triplets(out, space.counts);
    write_file_atomic(dir / "counts.triplets", out.str());
  }
  {
    std::ostringstream out;
    write_triplets(out, weights);
    write_file_atomic(dir / "tfidf.triplets", out.str());
  }
  {
    std::ostringstream out;
    out << "id,community";
    for (std::size_t t = 0; t < space.model.k; ++t) out << ",topic" << t;
    out << '\n';
    for (std::size_t d = 0; d < space.theta.theta.rows; ++d) {
      out << space.theta.row_ids[d] << ',' << space.theta.communities[d];
      for (double v : space.theta.theta.row(d)) out << ',' << fmt(v);
      out << '\n';
    }
    write_file_atomic(dir / "theta.csv", out.str());
  }
  write_file_atomic(dir / "topics.txt", topic_listing(space.model.phi, space.vocabulary, config.top_words));

  nlohmann::ordered_json rep;
  rep["command"] = "fit-topics";
  rep["provenance"] = provenance(config, corpus, space);
  rep["perplexity"] = perplexity(space.model, space.theta, space.counts);
  if (with_nmf) {
    const auto nmf = fit_nmf(weights, {config.k, 200, derive_seed(config.seed, 3)});
    write_file_atomic(dir / "nmf_topics.txt", topic_listing(nmf.h, space.vocabulary, config.top_words));
    std::ostringstream out;
    out << "iteration,objective\n";
    for (std::size_t i = 0; i < nmf.objective.size(); ++i) out << (i + 1) << ',' << fmt(nmf.objective[i]) << '\n';
    write_file_atomic(dir / "nmf_objective.csv", out.str());
    rep["nmf_objective"] = nmf.objective.empty() ? 0.0 : nmf.objective.back();
    for (const auto& w : nmf.warnings) rep["warnings"].push_back(w);
  }
  for (const auto& w : space.warnings) rep["warnings"].push_back(w);
  if (!rep.contains("warnings")) rep["warnings"] = nlohmann::ordered_json::array();
  write_file_atomic(dir / "fit_report.json", rep.dump(2) + "\n");
  return rep;
}

}  // namespace semspan
