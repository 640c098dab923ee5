#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "semspan/corpus.hpp"
#include "semspan/error.hpp"
#include "semspan/rng.hpp"

namespace semspan {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::size_t kSyllables = kConsonants.size() * kVowels.size();
constexpr std::size_t kWordSpace = kSyllables * kSyllables * kSyllables;

// Pronounceable six-letter pseudo-words (consonant-vowel x3). The stride is
// coprime with the word space, so the mapping is a bijection.
std::string pseudo_word(std::size_t i) {
  std::size_t j = (i * 7919 + 1237) % kWordSpace;
  std::string w;
  for (int s = 0; s < 3; ++s) {
    const std::size_t syl = j % kSyllables;
    j /= kSyllables;
    w.push_back(kConsonants[syl / kVowels.size()]);
    w.push_back(kVowels[syl % kVowels.size()]);
  }
  return w;
}

std::vector<std::string> planted_terms(std::size_t count) {
  const auto& stop = default_stopwords();
  const std::unordered_set<std::string> stopset(stop.begin(), stop.end());
  std::vector<std::string> terms;
  terms.reserve(count);
  for (std::size_t i = 0; terms.size() < count; ++i) {
    if (i >= kWordSpace) throw UsageError("synthetic vocabulary_size is too large");
    auto w = pseudo_word(i);
    if (!stopset.contains(w)) terms.push_back(std::move(w));
  }
  return terms;
}

std::size_t draw(std::span<const double> cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> cumsum(std::span<const double> w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  return c;
}

std::int64_t start_of_year(int y) {
  using namespace std::chrono;
  return duration_cast<seconds>(sys_days{year{y} / January / 1}.time_since_epoch()).count();
}

}  // namespace

void SyntheticSpec::validate() const {
  if (k_true < 1) throw UsageError("synthetic spec: k_true must be at least 1");
  if (vocabulary_size < k_true) {
    throw UsageError("synthetic spec: vocabulary_size must be at least k_true");
  }
  if (doc_length_mean < 1) throw UsageError("synthetic spec: doc_length_mean must be positive");
  std::set<std::string> labels;
  for (const auto& q : qualities) {
    if (!labels.insert(q.label).second) {
      throw UsageError("synthetic spec: duplicate quality '" + q.label + "'");
    }
    if (q.mixture.size() != k_true) {
      throw UsageError("synthetic spec: mixture of '" + q.label + "' must have k_true entries");
    }
    double sum = 0.0;
    for (double p : q.mixture) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw UsageError("synthetic spec: mixture of '" + q.label + "' has a negative entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw UsageError("synthetic spec: mixture of '" + q.label + "' does not sum to 1");
    }
  }
  std::set<std::string> communities_seen;
  for (const auto& c : communities) {
    if (c.label.empty()) throw UsageError("synthetic spec: empty community label");
    if (!communities_seen.insert(c.label).second) {
      throw UsageError("synthetic spec: duplicate community '" + c.label + "'");
    }
    for (const auto& [quality, count] : c.documents) {
      if (!labels.contains(quality)) {
        throw UsageError("synthetic spec: community '" + c.label + "' references unknown quality '" +
                         quality + "'");
      }
    }
  }
}

nlohmann::json SyntheticSpec::to_json() const {
  nlohmann::json j;
  j["k_true"] = k_true;
  j["vocabulary_size"] = vocabulary_size;
  j["doc_length_mean"] = doc_length_mean;
  j["seed"] = seed;
  j["qualities"] = nlohmann::json::array();
  for (const auto& q : qualities) j["qualities"].push_back({{"label", q.label}, {"mixture", q.mixture}});
  j["communities"] = nlohmann::json::array();
  for (const auto& c : communities) {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& [quality, count] : c.documents) {
      docs.push_back({{"quality", quality}, {"count", count}});
    }
    j["communities"].push_back({{"label", c.label}, {"documents", docs}});
  }
  return j;
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  try {
    SyntheticSpec spec;
    spec.k_true = j.at("k_true").get<std::size_t>();
    spec.vocabulary_size = j.at("vocabulary_size").get<std::size_t>();
    spec.doc_length_mean = j.value("doc_length_mean", std::size_t{100});
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& q : j.at("qualities")) {
      spec.qualities.push_back({q.at("label").get<std::string>(),
                                q.at("mixture").get<std::vector<double>>()});
    }
    for (const auto& c : j.at("communities")) {
      CommunityPlan plan;
      plan.label = c.at("label").get<std::string>();
      for (const auto& d : c.at("documents")) {
        plan.documents.emplace_back(d.at("quality").get<std::string>(),
                                    d.at("count").get<std::size_t>());
      }
      spec.communities.push_back(std::move(plan));
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("synthetic spec JSON: ") + e.what());
  }
}

std::vector<std::string> GroundTruth::topic_terms(std::size_t topic) const {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < topics.cols; ++t) {
    if (topics(topic, t) > 0.0) out.push_back(terms[t]);
  }
  return out;
}

std::vector<std::string> GroundTruth::exclusive_terms(std::string_view quality) const {
  const QualitySpec* target = nullptr;
  for (const auto& q : qualities) {
    if (q.label == quality) target = &q;
  }
  if (!target) throw UsageError("unknown quality '" + std::string(quality) + "'");
  std::vector<std::string> out;
  for (std::size_t z = 0; z < target->mixture.size(); ++z) {
    if (target->mixture[z] <= 0.0) continue;
    bool shared = false;
    for (const auto& q : qualities) {
      if (&q != target && q.mixture[z] > 0.0) shared = true;
    }
    if (shared) continue;
    auto words = topic_terms(z);
    out.insert(out.end(), words.begin(), words.end());
  }
  return out;
}

nlohmann::json GroundTruth::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["k_true"] = topics.rows;
  j["terms"] = terms;
  j["topics"] = nlohmann::json::array();
  for (std::size_t z = 0; z < topics.rows; ++z) {
    auto row = topics.row(z);
    j["topics"].push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["qualities"] = nlohmann::json::array();
  for (const auto& q : qualities) j["qualities"].push_back({{"label", q.label}, {"mixture", q.mixture}});
  j["doc_quality"] = doc_quality;
  j["warnings"] = warnings;
  return j;
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t k = spec.k_true;
  const std::size_t v = spec.vocabulary_size;

  GroundTruth truth;
  truth.seed = spec.seed;
  truth.terms = planted_terms(v);
  truth.qualities = spec.qualities;
  truth.topics = Matrix(k, v, 0.0);

  // Topic z owns a contiguous block of terms with Zipf weights 1/(rank+1);
  // ranks within the block are shuffled by the seed.
  Rng layout_rng(derive_seed(spec.seed, 0));
  std::size_t offset = 0;
  for (std::size_t z = 0; z < k; ++z) {
    const std::size_t block = v / k + (z < v % k ? 1 : 0);
    std::vector<std::size_t> rank(block);
    std::iota(rank.begin(), rank.end(), 0);
    for (std::size_t i = block; i > 1; --i) std::swap(rank[i - 1], rank[layout_rng.below(i)]);
    double norm = 0.0;
    for (std::size_t i = 0; i < block; ++i) norm += 1.0 / static_cast<double>(rank[i] + 1);
    for (std::size_t i = 0; i < block; ++i) {
      truth.topics(z, offset + i) = 1.0 / static_cast<double>(rank[i] + 1) / norm;
    }
    offset += block;
  }

  std::vector<std::vector<double>> topic_cdf(k);
  for (std::size_t z = 0; z < k; ++z) topic_cdf[z] = cumsum(truth.topics.row(z));
  std::vector<std::vector<double>> quality_cdf;
  std::unordered_map<std::string, std::size_t> quality_index;
  for (std::size_t q = 0; q < spec.qualities.size(); ++q) {
    quality_cdf.push_back(cumsum(spec.qualities[q].mixture));
    quality_index[spec.qualities[q].label] = q;
  }

  Rng rng(derive_seed(spec.seed, 1));
  const auto spread = static_cast<std::int64_t>(spec.doc_length_mean / 5);
  std::vector<Submission> subs;
  std::size_t serial = 0;
  for (const auto& community : spec.communities) {
    std::size_t planned = 0;
    for (const auto& [quality, count] : community.documents) {
      planned += count;
      const auto& cdf = quality_cdf[quality_index.at(quality)];
      for (std::size_t d = 0; d < count; ++d) {
        const auto length = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(spec.doc_length_mean) + rng.between(-spread, spread));
        std::string body;
        for (std::int64_t t = 0; t < length; ++t) {
          // upper_bound never lands on a zero-weight entry since u < total.
          const std::size_t z = draw(cdf, rng);
          const std::size_t w = draw(topic_cdf[z], rng);
          if (!body.empty()) body.push_back(' ');
          body += truth.terms[w];
        }
        body.push_back('.');

        Submission s;
        char id[32];
        std::snprintf(id, sizeof(id), "syn%06zu", serial);
        s.id = id;
        s.title = "synthetic submission " + std::to_string(serial);
        s.body = std::move(body);
        s.score = rng.between(0, 50);
        s.num_comments = rng.between(0, 20);
        const int y = static_cast<int>(rng.between(2013, 2020));
        s.created_utc = start_of_year(y) + rng.between(0, 365 * 86400 - 1);
        s.year = utc_year(*s.created_utc);
        s.community = community.label;
        subs.push_back(std::move(s));
        truth.doc_quality.push_back(quality);
        ++serial;
      }
    }
    if (planned == 0) {
      truth.warnings.push_back("community '" + community.label + "' has no documents");
    }
  }
  return {Corpus(std::move(subs)), std::move(truth)};
}

}  // namespace semspan
