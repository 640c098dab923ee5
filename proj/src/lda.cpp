#include <cmath>
#include <fstream>

#include "semspan/error.hpp"
#include "semspan/rng.hpp"
#include "semspan/topics.hpp"

namespace semspan {

namespace {

// Flattened token stream in CSR order: document d owns
// words[doc_start[d] .. doc_start[d+1]).
struct TokenStream {
  std::vector<std::uint32_t> words;
  std::vector<std::size_t> doc_start{0};
};

TokenStream expand(const DocTermMatrix& counts) {
  TokenStream s;
  for (std::size_t d = 0; d < counts.num_rows(); ++d) {
    auto cs = counts.row_cols(d);
    auto vs = counts.row_values(d);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (vs[i] < 0) throw DataError("count matrix has a negative entry");
      s.words.insert(s.words.end(), static_cast<std::size_t>(vs[i]), cs[i]);
    }
    s.doc_start.push_back(s.words.size());
  }
  return s;
}

std::size_t sample_index(const std::vector<double>& cumulative, double u) {
  const double target = u * cumulative.back();
  std::size_t z = 0;
  while (z + 1 < cumulative.size() && cumulative[z] <= target) ++z;
  return z;
}

}  // namespace

LdaModel fit_lda(const DocTermMatrix& counts, const LdaOptions& options, Warnings* warnings) {
  const std::size_t k = options.k;
  const double alpha = options.resolved_alpha();
  const double beta = options.beta;
  if (k < 1) throw UsageError("LDA needs k >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw UsageError("LDA priors must be positive");
  if (options.average_last > options.iterations) {
    throw UsageError("LDA: average_last exceeds the number of sweeps");
  }
  const std::size_t v = counts.num_cols;
  if (v < 1) throw DataError("LDA: the vocabulary is empty");

  const TokenStream tokens = expand(counts);
  if (tokens.words.empty()) throw DataError("LDA: the count matrix contains no tokens");
  if (k > tokens.words.size() && warnings) {
    warnings->push_back("k exceeds the total token count");
  }

  const std::size_t num_docs = counts.num_rows();
  std::vector<std::uint32_t> z(tokens.words.size());
  std::vector<std::int32_t> doc_topic(num_docs * k, 0);
  std::vector<std::int32_t> word_topic(v * k, 0);  // word-major
  std::vector<std::int64_t> topic_total(k, 0);

  Rng rng(options.seed);
  for (std::size_t i = 0; i < tokens.words.size(); ++i) {
    z[i] = static_cast<std::uint32_t>(rng.below(k));
  }
  for (std::size_t d = 0; d < num_docs; ++d) {
    for (std::size_t i = tokens.doc_start[d]; i < tokens.doc_start[d + 1]; ++i) {
      ++doc_topic[d * k + z[i]];
      ++word_topic[tokens.words[i] * k + z[i]];
      ++topic_total[z[i]];
    }
  }

  const double v_beta = static_cast<double>(v) * beta;
  std::vector<double> cumulative(k);
  Matrix phi_sum(k, v, 0.0);
  std::size_t averaged = 0;
  const std::size_t average_from =
      options.average_last >= options.iterations ? 0 : options.iterations - options.average_last;

  for (std::size_t sweep = 0; sweep < options.iterations; ++sweep) {
    for (std::size_t d = 0; d < num_docs; ++d) {
      std::int32_t* nd = &doc_topic[d * k];
      for (std::size_t i = tokens.doc_start[d]; i < tokens.doc_start[d + 1]; ++i) {
        const std::uint32_t w = tokens.words[i];
        std::int32_t* nw = &word_topic[static_cast<std::size_t>(w) * k];
        const std::uint32_t old = z[i];
        --nd[old];
        --nw[old];
        --topic_total[old];
        double acc = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
          acc += (nd[t] + alpha) * (nw[t] + beta) / (static_cast<double>(topic_total[t]) + v_beta);
          cumulative[t] = acc;
        }
        const auto fresh = static_cast<std::uint32_t>(sample_index(cumulative, rng.uniform()));
        z[i] = fresh;
        ++nd[fresh];
        ++nw[fresh];
        ++topic_total[fresh];
      }
    }
    if (options.average_last > 0 && sweep >= average_from) {
      for (std::size_t t = 0; t < k; ++t) {
        const double denom = static_cast<double>(topic_total[t]) + v_beta;
        for (std::size_t w = 0; w < v; ++w) phi_sum(t, w) += (word_topic[w * k + t] + beta) / denom;
      }
      ++averaged;
    }
  }

  LdaModel model;
  model.k = k;
  model.num_terms = v;
  model.alpha = alpha;
  model.beta = beta;
  model.iterations = options.iterations;
  model.seed = options.seed;
  model.phi = Matrix(k, v, 0.0);
  if (averaged > 0) {
    for (std::size_t t = 0; t < k; ++t) {
      double row = 0.0;
      for (std::size_t w = 0; w < v; ++w) row += phi_sum(t, w);
      for (std::size_t w = 0; w < v; ++w) model.phi(t, w) = phi_sum(t, w) / row;
    }
  } else {
    for (std::size_t t = 0; t < k; ++t) {
      const double denom = static_cast<double>(topic_total[t]) + v_beta;
      for (std::size_t w = 0; w < v; ++w) model.phi(t, w) = (word_topic[w * k + t] + beta) / denom;
    }
  }
  return model;
}

DocTopicMatrix infer_theta(const LdaModel& model, const DocTermMatrix& counts,
                           std::size_t iterations, std::uint64_t seed) {
  if (counts.num_cols != model.num_terms) {
    throw DataError("infer_theta: matrix has " + std::to_string(counts.num_cols) +
                    " columns but the model has " + std::to_string(model.num_terms) + " terms");
  }
  const std::size_t k = model.k;
  const double alpha = model.alpha;

  // Word-major copy of phi for contiguous access in the inner loop.
  std::vector<double> phi_t(model.num_terms * k);
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t w = 0; w < model.num_terms; ++w) phi_t[w * k + t] = model.phi(t, w);
  }

  DocTopicMatrix out;
  out.theta = Matrix(counts.num_rows(), k, 0.0);
  out.row_ids = counts.row_ids;

  std::vector<std::uint32_t> words;
  std::vector<std::uint32_t> z;
  std::vector<std::int32_t> nd(k);
  std::vector<double> cumulative(k);
  for (std::size_t d = 0; d < counts.num_rows(); ++d) {
    words.clear();
    auto cs = counts.row_cols(d);
    auto vs = counts.row_values(d);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      words.insert(words.end(), static_cast<std::size_t>(vs[i]), cs[i]);
    }
    Rng rng(derive_seed(seed, d));
    std::fill(nd.begin(), nd.end(), 0);
    z.resize(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      z[i] = static_cast<std::uint32_t>(rng.below(k));
      ++nd[z[i]];
    }
    for (std::size_t sweep = 0; sweep < iterations && k > 1; ++sweep) {
      for (std::size_t i = 0; i < words.size(); ++i) {
        const double* pw = &phi_t[static_cast<std::size_t>(words[i]) * k];
        --nd[z[i]];
        double acc = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
          acc += (nd[t] + alpha) * pw[t];
          cumulative[t] = acc;
        }
        z[i] = static_cast<std::uint32_t>(sample_index(cumulative, rng.uniform()));
        ++nd[z[i]];
      }
    }
    const double denom = static_cast<double>(words.size()) + static_cast<double>(k) * alpha;
    for (std::size_t t = 0; t < k; ++t) out.theta(d, t) = (nd[t] + alpha) / denom;
  }
  return out;
}

double perplexity(const LdaModel& model, const DocTopicMatrix& theta, const DocTermMatrix& counts) {
  if (theta.theta.rows != counts.num_rows() || theta.theta.cols != model.k ||
      counts.num_cols != model.num_terms) {
    throw DataError("perplexity: model, theta and count shapes disagree");
  }
  double log_likelihood = 0.0;
  double total = 0.0;
  for (std::size_t d = 0; d < counts.num_rows(); ++d) {
    auto cs = counts.row_cols(d);
    auto vs = counts.row_values(d);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      double p = 0.0;
      for (std::size_t t = 0; t < model.k; ++t) p += theta.theta(d, t) * model.phi(t, cs[i]);
      if (!(p > 0.0)) throw InvariantError("perplexity: zero mixture probability");
      log_likelihood += vs[i] * std::log(p);
      total += vs[i];
    }
  }
  if (total == 0.0) throw DataError("perplexity: no tokens");
  return std::exp(-log_likelihood / total);
}

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json LdaModel::to_json() const {
  nlohmann::json j;
  j["format"] = "semspan-lda";
  j["version"] = 1;
  j["k"] = k;
  j["num_terms"] = num_terms;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["iterations"] = iterations;
  j["seed"] = seed;
  j["vocabulary_hash"] = vocabulary_hash;
  j["phi"] = phi.data;
  return j;
}

LdaModel LdaModel::from_json(const nlohmann::json& j, const std::string& expected_vocabulary_hash) {
  LdaModel m;
  try {
    if (j.at("format").get<std::string>() != "semspan-lda" || j.at("version").get<int>() != 1) {
      throw DataError("not a version-1 LDA model file");
    }
    m.k = j.at("k").get<std::size_t>();
    m.num_terms = j.at("num_terms").get<std::size_t>();
    m.alpha = j.at("alpha").get<double>();
    m.beta = j.at("beta").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.vocabulary_hash = j.at("vocabulary_hash").get<std::string>();
    m.phi = Matrix(m.k, m.num_terms);
    m.phi.data = j.at("phi").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("LDA model JSON: ") + e.what());
  }
  if (m.phi.data.size() != m.k * m.num_terms) throw DataError("LDA model JSON: phi has the wrong size");
  if (!expected_vocabulary_hash.empty() && expected_vocabulary_hash != m.vocabulary_hash) {
    throw DataError("LDA model was fitted on a different vocabulary (" + m.vocabulary_hash +
                    " != " + expected_vocabulary_hash + ")");
  }
  return m;
}

void LdaModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << to_json().dump() << '\n';
}

LdaModel LdaModel::load(const std::filesystem::path& path, const std::string& expected_vocabulary_hash) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  return from_json(j, expected_vocabulary_hash);
}

}  // namespace semspan
