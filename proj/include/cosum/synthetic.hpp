#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cosum/corpus.hpp"

namespace cosum {

// Planted-signal generator. Each position of a unit draws a planted token
// with the class's planted rate (per planted token) and otherwise a Zipf
// background word. Positive units carry the query token at least once;
// negative units never do.
struct SyntheticParams {
  std::size_t n_units = 2000;
  std::size_t vocab_size = 5000;  // background words
  std::size_t n_planted = 10;
  double planted_rate_pos = 0.01;   // per planted token, per position, positives
  double background_rate = 0.001;   // per planted token, per position, negatives
  double pos_fraction = 0.25;
  std::uint64_t seed = 1;

  std::size_t unit_length = 120;
  double zipf_exponent = 1.0;
  std::string query_token = "qtopic";
  // Planted tokens are planted_prefix + index unless planted_names is given.
  std::string planted_prefix = "planted";
  std::vector<std::string> planted_names;
  // Tokens elevated in negatives instead (rate planted_rate_pos there,
  // background_rate in positives).
  std::size_t n_planted_neg = 0;
  std::string planted_neg_prefix = "counter";

  std::string id_prefix = "syn";
  std::string source = "synthetic";
  // If set, positives get .first as source and negatives .second.
  std::optional<std::pair<std::string, std::string>> label_sources;
  TimePoint start = TimePoint{std::chrono::sys_days{std::chrono::year{2020} / 1 / 1}};
  int span_days = 364;

  void validate() const;
};

struct SyntheticTruth {
  std::string query_token;
  std::vector<std::string> planted;
  std::vector<std::string> planted_neg;
  std::vector<std::string> positive_ids;
  std::vector<std::string> background_sample;  // the ten most frequent background words
};

struct SyntheticCorpus {
  Corpus corpus;
  SyntheticTruth truth;
};

// Throws Error{"invalid_argument"} on inconsistent parameters.
SyntheticCorpus synthetic_corpus(const SyntheticParams& params);

// Letters-only word for an index, distinct for distinct indices.
std::string synthetic_word(std::size_t index);

}  // namespace cosum
