#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semspan/corpus.hpp"
#include "semspan/error.hpp"
#include "semspan/pipeline.hpp"
#include "semspan/semspace.hpp"
#include "semspan/simgraph.hpp"
#include "semspan/text.hpp"
#include "semspan/topics.hpp"

namespace py = pybind11;
using namespace semspan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw UsageError("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

DocTermMatrix to_counts(const IntArray& a) {
  if (a.ndim() != 2) throw UsageError("expected a 2-d count array");
  DocTermMatrix m;
  m.num_cols = static_cast<std::size_t>(a.shape(1));
  auto r = a.unchecked<2>();
  for (py::ssize_t d = 0; d < a.shape(0); ++d) {
    std::vector<std::pair<std::uint32_t, std::int32_t>> entries;
    for (py::ssize_t t = 0; t < a.shape(1); ++t) {
      if (r(d, t) < 0) throw DataError("counts must be non-negative");
      if (r(d, t)) entries.emplace_back(static_cast<std::uint32_t>(t), static_cast<std::int32_t>(r(d, t)));
    }
    m.append_row("d" + std::to_string(d), entries);
  }
  return m;
}

Array dense(const TfidfMatrix& w) {
  Array a({w.num_rows(), w.num_cols});
  std::fill(a.mutable_data(), a.mutable_data() + a.size(), 0.0);
  auto out = a.mutable_unchecked<2>();
  for (std::size_t d = 0; d < w.num_rows(); ++d) {
    auto cs = w.row_cols(d);
    auto vs = w.row_values(d);
    for (std::size_t i = 0; i < cs.size(); ++i) out(d, cs[i]) = vs[i];
  }
  return a;
}

Assignments to_assignments(const std::vector<std::int64_t>& labels) {
  Assignments a;
  for (auto l : labels) {
    if (l < 0) throw UsageError("labels must be non-negative");
    a.push_back(static_cast<std::size_t>(l));
  }
  return a;
}

PipelineConfig make_config(const std::string& input, const std::map<std::string, std::string>& settings) {
  PipelineConfig c;
  for (const auto& [k, v] : settings) c.set(k, v);
  c.input = input;
  c.validate();
  return c;
}

Corpus load(const PipelineConfig& c) { return load_jsonl(c.input, c.strict).corpus; }

}  // namespace

PYBIND11_MODULE(_semspan, m) {
  m.doc() = "Topic-space comparison of online communities";
  m.attr("__version__") = kVersion;

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  m.def(
      "tokenize",
      [](const std::string& text, bool lowercase, std::size_t min_token_len, bool strip_urls, bool stopwords) {
        TokenizerConfig c = stopwords ? default_tokenizer() : TokenizerConfig{};
        c.lowercase = lowercase;
        c.min_token_len = min_token_len;
        c.strip_urls = strip_urls;
        return tokenize(text, c);
      },
      py::arg("text"), py::arg("lowercase") = true, py::arg("min_token_len") = 2, py::arg("strip_urls") = true,
      py::arg("stopwords") = true);

  m.def(
      "tfidf", [](const IntArray& counts) { return dense(tfidf(to_counts(counts))); }, py::arg("counts"),
      "Dense TFIDF weights of a documents x terms count array.");

  m.def(
      "cosine_sim",
      [](const std::vector<double>& a, const std::vector<double>& b) { return cosine_sim(a, b); }, py::arg("a"),
      py::arg("b"));

  m.def(
      "kmeans",
      [](const Array& points, std::size_t c, std::uint64_t seed, std::size_t restarts) {
        const auto r = kmeans(to_matrix(points), c, seed, restarts);
        py::dict d;
        d["centroids"] = to_array(r.centroids);
        d["assignments"] = r.assignments;
        d["inertia"] = r.inertia;
        return d;
      },
      py::arg("points"), py::arg("c"), py::arg("seed") = 0, py::arg("restarts") = 10);

  m.def(
      "calinski_harabasz",
      [](const Array& points, const std::vector<std::int64_t>& labels) {
        return calinski_harabasz(to_matrix(points), to_assignments(labels));
      },
      py::arg("points"), py::arg("labels"));

  m.def(
      "silhouette",
      [](const Array& points, const std::vector<std::int64_t>& labels) {
        return silhouette(to_matrix(points), to_assignments(labels));
      },
      py::arg("points"), py::arg("labels"));

  m.def(
      "select_cluster_count",
      [](const Array& points, std::size_t c_min, std::size_t c_max, std::size_t restarts, std::uint64_t seed) {
        const auto s = select_cluster_count(to_matrix(points), {c_min, c_max, restarts, seed});
        py::list table;
        for (const auto& row : s.table) {
          py::dict r;
          r["c"] = row.c;
          r["inertia"] = row.inertia;
          r["calinski_harabasz"] = row.calinski;
          r["silhouette"] = row.silhouette;
          table.append(r);
        }
        py::dict d;
        d["chosen"] = s.chosen;
        d["rule"] = s.rule;
        d["table"] = table;
        return d;
      },
      py::arg("points"), py::arg("c_min") = 2, py::arg("c_max") = 10, py::arg("restarts") = 10,
      py::arg("seed") = 0);

  m.def(
      "fit_lda",
      [](const IntArray& counts, std::size_t k, std::optional<double> alpha, double beta, std::size_t iterations,
         std::uint64_t seed, std::size_t infer_iterations) {
        LdaOptions o;
        o.k = k;
        o.alpha = alpha;
        o.beta = beta;
        o.iterations = iterations;
        o.seed = seed;
        const auto c = to_counts(counts);
        const auto model = fit_lda(c, o);
        const auto theta = infer_theta(model, c, infer_iterations, seed + 1);
        py::dict d;
        d["phi"] = to_array(model.phi);
        d["theta"] = to_array(theta.theta);
        d["alpha"] = model.alpha;
        d["perplexity"] = perplexity(model, theta, c);
        return d;
      },
      py::arg("counts"), py::arg("k") = 20, py::arg("alpha") = py::none(), py::arg("beta") = 0.01,
      py::arg("iterations") = 1000, py::arg("seed") = 0, py::arg("infer_iterations") = 100,
      "Collapsed Gibbs LDA; returns phi (k x terms), theta (docs x k) and perplexity.");

  m.def(
      "fit_nmf",
      [](const Array& x, std::size_t k, std::size_t iterations, std::uint64_t seed) {
        const Matrix dense_x = to_matrix(x);
        TfidfMatrix w;
        w.num_cols = dense_x.cols;
        for (std::size_t d = 0; d < dense_x.rows; ++d) {
          std::vector<std::pair<std::uint32_t, double>> entries;
          for (std::size_t t = 0; t < dense_x.cols; ++t) {
            if (dense_x(d, t) != 0.0) entries.emplace_back(static_cast<std::uint32_t>(t), dense_x(d, t));
          }
          w.append_row("d" + std::to_string(d), entries);
        }
        const auto r = fit_nmf(w, {k, iterations, seed});
        py::dict d;
        d["w"] = to_array(r.w);
        d["h"] = to_array(r.h);
        d["objective"] = r.objective;
        return d;
      },
      py::arg("x"), py::arg("k"), py::arg("iterations") = 200, py::arg("seed") = 0);

  m.def(
      "similarity_graph",
      [](const Array& vectors, const std::vector<std::string>& labels, double tau) {
        const Matrix v = to_matrix(vectors);
        if (labels.size() != v.rows) throw UsageError("one label per vector is required");
        std::vector<Centroid> cs;
        for (std::size_t i = 0; i < v.rows; ++i) {
          cs.push_back({{v.row(i).begin(), v.row(i).end()}, NodeLabel::parse(labels[i]), 1});
        }
        const auto g = build_graph(cs, tau);
        return graph_to_json(g, connected_components(g)).dump();
      },
      py::arg("vectors"), py::arg("labels"), py::arg("tau"), "Graph JSON with edges and classified components.");

  m.def(
      "summarize",
      [](const std::string& input, const std::map<std::string, std::string>& settings) {
        const auto c = make_config(input, settings);
        return summary_to_json(summarize(load(c), c.tokenizer())).dump();
      },
      py::arg("input"), py::arg("settings") = std::map<std::string, std::string>{});

  m.def(
      "run_exp1",
      [](const std::string& input, const std::map<std::string, std::string>& settings) {
        const auto c = make_config(input, settings);
        const auto corpus = load(c);
        py::gil_scoped_release release;
        return run_exp1(c, corpus, build_topic_space(c, corpus)).report.dump();
      },
      py::arg("input"), py::arg("settings") = std::map<std::string, std::string>{});

  m.def(
      "run_exp2",
      [](const std::string& input, const std::map<std::string, std::string>& settings) {
        const auto c = make_config(input, settings);
        const auto corpus = load(c);
        py::gil_scoped_release release;
        return run_exp2(c, corpus, build_topic_space(c, corpus)).report.dump();
      },
      py::arg("input"), py::arg("settings") = std::map<std::string, std::string>{});

  m.def(
      "synthesize",
      [](const std::string& spec_json, const std::string& path) {
        const auto synth = generate_synthetic(SyntheticSpec::from_json(nlohmann::json::parse(spec_json)));
        std::ostringstream out;
        write_jsonl(out, synth.corpus);
        write_file_atomic(path, out.str());
        return synth.truth.to_json().dump();
      },
      py::arg("spec_json"), py::arg("path"), "Writes a synthetic JSONL corpus; returns the ground truth as JSON.");
}
