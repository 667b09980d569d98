#include "cosum/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "cosum/error.hpp"

namespace cosum {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error("invalid_argument", message);
}

}  // namespace

void SyntheticParams::validate() const {
  require(n_units >= 2, "need at least two units");
  require(vocab_size >= 1, "background vocabulary is empty");
  require(n_planted < vocab_size, "n_planted must be below vocab_size");
  require(planted_rate_pos > 0 && planted_rate_pos < 1, "planted_rate_pos must lie in (0, 1)");
  require(background_rate > 0 && background_rate < 1, "background_rate must lie in (0, 1)");
  require(pos_fraction > 0 && pos_fraction < 1, "pos_fraction must lie in (0, 1)");
  const double total_planted = static_cast<double>(n_planted + n_planted_neg);
  require(total_planted * std::max(planted_rate_pos, background_rate) < 1.0,
          "planted rates sum to 1 or more per position");
  require(unit_length >= 1, "unit_length must be positive");
  require(zipf_exponent >= 0, "zipf_exponent must be non-negative");
  require(planted_names.empty() || planted_names.size() == n_planted,
          "planted_names must list n_planted names");
  require(span_days >= 0, "span_days must be non-negative");
  require(!query_token.empty(), "query token is empty");
}

std::string synthetic_word(std::size_t index) {
  static constexpr char consonants[] = "bdfgklmnprstvz";
  static constexpr char vowels[] = "aeiou";
  constexpr std::size_t nc = sizeof(consonants) - 1;
  constexpr std::size_t nv = sizeof(vowels) - 1;
  std::string word;
  std::size_t v = index;
  do {
    const std::size_t syl = v % (nc * nv);
    word += consonants[syl / nv];
    word += vowels[syl % nv];
    v /= nc * nv;
  } while (v > 0);
  // Suffix keeps generated words clear of short English function words.
  word += "x";
  return word;
}

SyntheticCorpus synthetic_corpus(const SyntheticParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);

  std::vector<std::string> background(params.vocab_size);
  for (std::size_t i = 0; i < params.vocab_size; ++i) background[i] = synthetic_word(i);

  SyntheticTruth truth;
  truth.query_token = params.query_token;
  truth.planted = params.planted_names;
  if (truth.planted.empty()) {
    for (std::size_t i = 0; i < params.n_planted; ++i) {
      truth.planted.push_back(params.planted_prefix + synthetic_word(i));
    }
  }
  for (std::size_t i = 0; i < params.n_planted_neg; ++i) {
    truth.planted_neg.push_back(params.planted_neg_prefix + synthetic_word(i));
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(10, background.size()); ++i) {
    truth.background_sample.push_back(background[i]);
  }

  std::vector<double> weights(params.vocab_size);
  for (std::size_t i = 0; i < params.vocab_size; ++i) {
    weights[i] = 1.0 / std::pow(static_cast<double>(i + 1), params.zipf_exponent);
  }
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto n_pos = static_cast<std::size_t>(
      std::llround(params.pos_fraction * static_cast<double>(params.n_units)));
  require(n_pos >= 1 && n_pos < params.n_units, "pos_fraction leaves a class empty");
  std::vector<std::size_t> order(params.n_units);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> positive(params.n_units, false);
  for (std::size_t i = 0; i < n_pos; ++i) positive[order[i]] = true;

  std::vector<Document> docs;
  docs.reserve(params.n_units);
  const int digits = static_cast<int>(std::to_string(params.n_units).size());
  for (std::size_t i = 0; i < params.n_units; ++i) {
    const bool pos = positive[i];
    const double rate_a = pos ? params.planted_rate_pos : params.background_rate;
    const double rate_b = pos ? params.background_rate : params.planted_rate_pos;
    const double mass_a = rate_a * static_cast<double>(truth.planted.size());
    const double mass_b = rate_b * static_cast<double>(truth.planted_neg.size());

    std::vector<std::string> words;
    words.reserve(params.unit_length + 1);
    for (std::size_t t = 0; t < params.unit_length; ++t) {
      const double u = unit(rng);
      if (u < mass_a) {
        words.push_back(truth.planted[static_cast<std::size_t>(u / rate_a)]);
      } else if (u < mass_a + mass_b) {
        words.push_back(truth.planted_neg[static_cast<std::size_t>((u - mass_a) / rate_b)]);
      } else {
        words.push_back(background[zipf(rng)]);
      }
    }
    if (pos) {
      std::uniform_int_distribution<std::size_t> at(0, words.size());
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at(rng)), params.query_token);
    }

    Document d;
    std::string num = std::to_string(i);
    d.id = params.id_prefix + "-" + std::string(static_cast<std::size_t>(digits) - num.size(), '0') +
           num;
    d.source = params.label_sources ? (pos ? params.label_sources->first
                                           : params.label_sources->second)
                                    : params.source;
    const auto offset = params.n_units > 1
                            ? static_cast<long long>(i) * params.span_days /
                                  static_cast<long long>(params.n_units - 1)
                            : 0;
    d.published_at = params.start + std::chrono::days{offset};
    std::string title;
    for (std::size_t t = 0; t < std::min<std::size_t>(8, words.size()); ++t) {
      if (t) title += ' ';
      title += words[t];
    }
    d.title = std::move(title);
    for (std::size_t t = 0; t < words.size(); ++t) {
      if (t) d.body += ' ';
      d.body += words[t];
    }
    if (pos) truth.positive_ids.push_back(d.id);
    docs.push_back(std::move(d));
  }

  nlohmann::json provenance = {{"generator", "synthetic"}, {"seed", params.seed}};
  return {Corpus(params.id_prefix, std::move(docs), std::move(provenance)), std::move(truth)};
}

}  // namespace cosum
