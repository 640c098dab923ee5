// semspan: command-line driver for the semantic-span pipeline.
//
// Exit codes: 0 success, 1 usage or config error, 2 data error,
// 3 internal invariant violation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semspan/corpus.hpp"
#include "semspan/error.hpp"
#include "semspan/pipeline.hpp"
#include "semspan/simgraph.hpp"

namespace fs = std::filesystem;
using namespace semspan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

// Options shared by the commands that run the pipeline. Unset values leave
// the config file (or the built-in default) in charge.
struct PipelineFlags {
  std::string config;
  std::string input;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<double> tau;
  std::optional<double> tau_span;
  std::optional<std::size_t> top_words;
  std::optional<std::size_t> iterations;
  std::vector<std::string> set;
  bool strict = false;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f, bool with_tau) {
  cmd->add_option("-c,--config", f.config, "key = value config file");
  cmd->add_option("-i,--input", f.input, "JSONL corpus (overrides config)");
  cmd->add_option("-o,--out", f.out, "output directory (overrides config)");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--k", f.k, "number of LDA topics")->check(CLI::PositiveNumber);
  cmd->add_option("--iterations", f.iterations, "Gibbs sweeps for the fit");
  if (with_tau) {
    cmd->add_option("--tau", f.tau, "similarity threshold for the main graph")->check(CLI::Range(0.0, 1.0));
  }
  cmd->add_option("--top-words", f.top_words, "top terms per sub-graph")->check(CLI::PositiveNumber);
  cmd->add_option("--set", f.set, "extra key=value config override (repeatable)");
  cmd->add_flag("--strict", f.strict, "reject the whole corpus on any malformed line");
}

PipelineConfig resolve_config(const PipelineFlags& f) {
  PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : PipelineConfig::from_file(f.config);
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!f.input.empty()) cfg.input = f.input;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (f.k) cfg.k = *f.k;
  if (f.iterations) cfg.iterations = *f.iterations;
  if (f.top_words) cfg.top_words = *f.top_words;
  if (f.strict) cfg.strict = true;
  if (cfg.input.empty()) throw UsageError("no input corpus: pass --input or set input in the config");
  cfg.validate();
  return cfg;
}

Corpus load_corpus(const PipelineConfig& cfg) {
  auto loaded = load_jsonl(cfg.input, cfg.strict);
  for (const auto& issue : loaded.issues) {
    std::cerr << cfg.input.string() << ":" << issue.line << ": " << (issue.skipped ? "skipped: " : "note: ")
              << issue.message << "\n";
  }
  if (loaded.corpus.empty()) throw DataError("no valid submissions in " + cfg.input.string());
  return std::move(loaded.corpus);
}

void print_warnings(const Warnings& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_validate(const std::string& input, bool strict) {
  const auto loaded = load_jsonl(input, strict);
  for (const auto& issue : loaded.issues) {
    std::cout << input << ":" << issue.line << ": " << (issue.skipped ? "skipped: " : "note: ") << issue.message
              << "\n";
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& s : loaded.corpus.submissions()) ++counts[s.community];
  std::cout << "valid submissions: " << loaded.corpus.size() << "\n";
  std::cout << "skipped lines: " << loaded.skipped << "\n";
  std::cout << "communities: " << counts.size() << "\n";
  for (const auto& label : loaded.corpus.communities()) {
    std::cout << "  " << label << "\t" << counts[label] << "\n";
  }
  if (loaded.corpus.empty()) throw DataError("no valid submissions in " + input);
  return kExitOk;
}

int cmd_summarize(const PipelineFlags& f) {
  const PipelineConfig cfg = resolve_config(f);
  const Corpus corpus = load_corpus(cfg);
  const auto rows = summarize(corpus, cfg.tokenizer());
  const std::string table = format_summary_table(rows);
  std::cout << table;
  if (!f.out.empty()) {
    write_file_atomic(cfg.output_dir / "summary.txt", table);
    write_file_atomic(cfg.output_dir / "summary.json", summary_to_json(rows).dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
  std::ifstream in(spec_path);
  if (!in) throw UsageError("cannot open synthetic spec: " + spec_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("synthetic spec " + spec_path + ": " + e.what());
  }
  SyntheticSpec spec = SyntheticSpec::from_json(j);
  if (seed) spec.seed = *seed;
  const auto synth = generate_synthetic(spec);
  std::ostringstream corpus;
  write_jsonl(corpus, synth.corpus);
  const fs::path dir = out;
  write_file_atomic(dir / "corpus.jsonl", corpus.str());
  write_file_atomic(dir / "ground_truth.json", synth.truth.to_json().dump(2) + "\n");
  print_warnings(synth.truth.warnings);
  std::cout << "wrote " << synth.corpus.size() << " submissions in " << synth.corpus.communities().size()
            << " communities to " << (dir / "corpus.jsonl").string() << "\n";
  return kExitOk;
}

int cmd_fit_topics(const PipelineFlags& f, bool nmf) {
  const PipelineConfig cfg = resolve_config(f);
  const Corpus corpus = load_corpus(cfg);
  const auto rep = run_fit_topics(cfg, corpus, cfg.output_dir / "topics", nmf);
  for (const auto& w : rep["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << "perplexity " << rep["perplexity"].get<double>() << "\n";
  std::cout << "wrote " << (cfg.output_dir / "topics").string() << "\n";
  return kExitOk;
}

int cmd_exp1(const PipelineFlags& f) {
  PipelineConfig cfg = resolve_config(f);
  if (f.tau) cfg.tau_exp1 = *f.tau;
  const Corpus corpus = load_corpus(cfg);
  const TopicSpace space = build_topic_space(cfg, corpus, cfg.output_dir / "cache");
  const auto result = run_exp1(cfg, corpus, space);
  print_warnings(space.warnings);
  write_exp1(result, cfg.output_dir / "exp1");
  std::cout << result.report_text;
  return kExitOk;
}

int cmd_exp2(const PipelineFlags& f) {
  PipelineConfig cfg = resolve_config(f);
  if (f.tau) cfg.tau_all = *f.tau;
  if (f.tau_span) cfg.tau_span = *f.tau_span;
  const Corpus corpus = load_corpus(cfg);
  const TopicSpace space = build_topic_space(cfg, corpus, cfg.output_dir / "cache");
  const auto result = run_exp2(cfg, corpus, space);
  write_exp2(result, cfg.output_dir / "exp2");
  std::cout << result.report_text;
  return kExitOk;
}

SimilarityGraph read_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph file: " + path);
  try {
    return graph_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("graph file " + path + ": " + e.what());
  }
}

int cmd_export_graph(const std::string& graph_path, const std::string& format, const std::string& out,
                     std::optional<double> tau) {
  SimilarityGraph g = read_graph(graph_path);
  if (tau) g = rethreshold(g, *tau);
  const auto subs = connected_components(g);
  const GraphFormat fmt = format == "dot" ? GraphFormat::kDot : GraphFormat::kJson;
  if (out.empty() || out == "-") {
    std::cout << (fmt == GraphFormat::kDot ? to_dot(g, subs) : graph_to_json(g, subs).dump(2) + "\n");
  } else {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    export_graph(g, subs, fmt, out);
  }
  return kExitOk;
}

int cmd_tau_sweep(const std::string& graph_path, double from, double to, double step, const std::string& out) {
  if (!(step > 0.0) || from > to) throw UsageError("tau-sweep needs from <= to and step > 0");
  const SimilarityGraph g = read_graph(graph_path);
  std::vector<double> taus;
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) taus.push_back(std::min(1.0, from + static_cast<double>(i) * step));
  const std::string csv = sweep_csv(tau_sweep(g, taus));
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    write_file_atomic(out, csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semspan: shared and exclusive concerns of online communities in a topic space"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string validate_input;
  bool validate_strict = false;
  auto* validate = app.add_subcommand("validate", "check a JSONL corpus and report per-community counts");
  validate->add_option("-i,--input", validate_input, "JSONL corpus")->required();
  validate->add_flag("--strict", validate_strict, "fail on the first malformed line");

  PipelineFlags summarize_flags;
  auto* summarize_cmd = app.add_subcommand("summarize", "per-community dataset summary table");
  add_pipeline_flags(summarize_cmd, summarize_flags, false);

  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted qualities");
  synth->add_option("-s,--spec", synth_spec, "synthetic corpus description (JSON)")->required();
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the description's seed");

  PipelineFlags fit_flags;
  bool fit_nmf = false;
  auto* fit = app.add_subcommand("fit-topics", "fit the topic space and dump model artifacts");
  add_pipeline_flags(fit, fit_flags, false);
  fit->add_flag("--nmf", fit_nmf, "also factorize the TFIDF matrix with NMF");

  PipelineFlags exp1_flags;
  auto* exp1 = app.add_subcommand("exp1", "compare community centroids");
  add_pipeline_flags(exp1, exp1_flags, true);

  PipelineFlags exp2_flags;
  auto* exp2 = app.add_subcommand("exp2", "compare semantic spans");
  add_pipeline_flags(exp2, exp2_flags, true);
  exp2->add_option("--tau-span", exp2_flags.tau_span, "threshold for the pairwise views")
      ->check(CLI::Range(0.0, 1.0));

  std::string eg_graph, eg_format = "dot", eg_out;
  std::optional<double> eg_tau;
  auto* export_cmd = app.add_subcommand("export-graph", "convert or re-threshold a graph.json");
  export_cmd->add_option("-g,--graph", eg_graph, "graph.json written by exp1 or exp2")->required();
  export_cmd->add_option("-f,--format", eg_format, "dot or json")->check(CLI::IsMember({"dot", "json"}));
  export_cmd->add_option("-o,--out", eg_out, "output file (stdout when omitted)");
  export_cmd->add_option("--tau", eg_tau, "new threshold")->check(CLI::Range(0.0, 1.0));

  std::string ts_graph, ts_out;
  double ts_from = 0.5, ts_to = 1.0, ts_step = 0.05;
  auto* sweep = app.add_subcommand("tau-sweep", "component structure across thresholds");
  sweep->add_option("-g,--graph", ts_graph, "graph.json written by exp1 or exp2")->required();
  sweep->add_option("--from", ts_from, "first threshold")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--to", ts_to, "last threshold")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--step", ts_step, "threshold increment");
  sweep->add_option("-o,--out", ts_out, "CSV file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_input, validate_strict);
    if (*summarize_cmd) return cmd_summarize(summarize_flags);
    if (*synth) return cmd_synth(synth_spec, synth_out, synth_seed);
    if (*fit) return cmd_fit_topics(fit_flags, fit_nmf);
    if (*exp1) return cmd_exp1(exp1_flags);
    if (*exp2) return cmd_exp2(exp2_flags);
    if (*export_cmd) return cmd_export_graph(eg_graph, eg_format, eg_out, eg_tau);
    if (*sweep) return cmd_tau_sweep(ts_graph, ts_from, ts_to, ts_step, ts_out);
  } catch (const UsageError& e) {
    std::cerr << "semspan: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "semspan: " << e.what() << "\n";
    return kExitData;
  } catch (const InvariantError& e) {
    std::cerr << "semspan: internal error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "semspan: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "semspan: malformed JSON: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "semspan: internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitUsage;
}
