#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = SEMSPAN_CLI;
const std::string kSource = SEMSPAN_SOURCE_DIR;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("semspan_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

// A small synthetic corpus and a fast configuration shared by the
// experiment commands.
fs::path prepare(const fs::path& dir) {
  std::ofstream(dir / "spec.json") << R"({
    "k_true": 3, "vocabulary_size": 120, "seed": 4,
    "qualities": [{"label": "x", "mixture": [1, 0, 0]}, {"label": "y", "mixture": [0, 1, 0]},
                  {"label": "z", "mixture": [0, 0, 1]}],
    "communities": [{"label": "one", "documents": [{"quality": "x", "count": 25}, {"quality": "y", "count": 25}]},
                    {"label": "two", "documents": [{"quality": "x", "count": 25}, {"quality": "z", "count": 25}]}]
  })";
  REQUIRE(run("synth -s \"" + (dir / "spec.json").string() + "\" -o \"" + (dir / "synth").string() + "\"").code ==
          0);
  std::ofstream(dir / "run.conf") << "input = synth/corpus.jsonl\noutput_dir = out\nk = 3\niterations = 100\n"
                                  << "infer_iterations = 30\nc_max = 4\nrestarts = 2\n";
  return dir / "run.conf";
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help").code == 0);
  CHECK(run("--version").out.find("0.1.0") != std::string::npos);
  CHECK(run("").code == 1);
  CHECK(run("no-such-command").code == 1);
  CHECK(run("validate").code == 1);
  CHECK(run("exp1 --tau 1.5 -i x.jsonl").code == 1);
  CHECK(run("exp1").code == 1);
  CHECK(run("exp1 --set bogus=1 -i x.jsonl").code == 1);
}

TEST_CASE("validate reports per-community counts") {
  const auto fixture = kSource + "/tests/fixtures/example_submission.jsonl";
  const auto r = run("validate -i \"" + fixture + "\"");
  CHECK(r.code == 0);
  CHECK(r.out.find("valid submissions: 3") != std::string::npos);
  CHECK(r.out.find("communities: 3") != std::string::npos);
  CHECK(r.out.find("CrohnsDisease\t1") != std::string::npos);

  const auto missing = kSource + "/tests/fixtures/missing_body.jsonl";
  const auto lenient = run("validate -i \"" + missing + "\"");
  CHECK(lenient.code == 0);
  CHECK(lenient.out.find("skipped lines: 1") != std::string::npos);
  CHECK(run("validate --strict -i \"" + missing + "\"").code == 2);
  CHECK(run("validate -i /nonexistent/corpus.jsonl").code == 2);
}

TEST_CASE("synth, summarize and experiments end to end") {
  const auto dir = scratch("e2e");
  const auto conf = prepare(dir);
  const std::string c = "-c \"" + conf.string() + "\"";

  const auto summary = run("summarize " + c + " -o \"" + (dir / "out").string() + "\"");
  CHECK(summary.code == 0);
  CHECK(summary.out.find("one") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "summary.json"));

  const auto e1 = run("exp1 " + c);
  CHECK(e1.code == 0);
  CHECK(e1.out.find("Experiment 1") != std::string::npos);
  for (const char* f : {"report.json", "report.txt", "graph.dot", "graph.json"}) {
    CHECK(fs::exists(dir / "out" / "exp1" / f));
  }

  const auto e2 = run("exp2 " + c + " --tau 0.85 --tau-span 0.6");
  CHECK(e2.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "exp2" / "report.json"));
  CHECK(report["parameters"]["tau_all"] == 0.85);
  CHECK(report["parameters"]["tau_span"] == 0.6);
  CHECK(report["spans"].size() == 2);

  // A second run reuses the cached model and produces identical reports.
  const auto before = slurp(dir / "out" / "exp2" / "report.json");
  CHECK(run("exp2 " + c + " --tau 0.85 --tau-span 0.6").code == 0);
  CHECK(slurp(dir / "out" / "exp2" / "report.json") == before);

  const auto graph = (dir / "out" / "exp2" / "graph.json").string();
  const auto dot = run("export-graph -g \"" + graph + "\" -f dot");
  CHECK(dot.code == 0);
  CHECK(dot.out.rfind("graph similarity {", 0) == 0);
  CHECK(run("export-graph -g \"" + graph + "\" -f json --tau 0.5 -o \"" + (dir / "g.json").string() + "\"").code ==
        0);
  CHECK(nlohmann::json::parse(slurp(dir / "g.json"))["tau"] == 0.5);
  CHECK(run("export-graph -g \"" + graph + "\" -f svg").code == 1);
  CHECK(run("export-graph -g /nonexistent/graph.json").code == 2);

  const auto sweep = run("tau-sweep -g \"" + graph + "\" --from 0.5 --to 1 --step 0.1");
  CHECK(sweep.code == 0);
  CHECK(sweep.out.rfind("tau,edges,components", 0) == 0);
  CHECK(std::count(sweep.out.begin(), sweep.out.end(), '\n') == 7);
  CHECK(run("tau-sweep -g \"" + graph + "\" --step 0").code == 1);

  const auto fit = run("fit-topics " + c + " --nmf");
  CHECK(fit.code == 0);
  CHECK(fs::exists(dir / "out" / "topics" / "nmf_topics.txt"));
}

TEST_CASE("data errors exit with code 2") {
  const auto dir = scratch("errors");
  CHECK(run("exp1 -i \"" + kSource + "/tests/fixtures/empty.jsonl\" -o \"" + dir.string() + "\"").code == 2);
  std::ofstream(dir / "broken.json") << "{";
  CHECK(run("tau-sweep -g \"" + (dir / "broken.json").string() + "\"").code == 2);
  CHECK(run("synth -s \"" + (dir / "broken.json").string() + "\" -o \"" + dir.string() + "\"").code == 1);
}
