#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cosum/labeling.hpp"
#include "cosum/rescale.hpp"
#include "cosum/solvers.hpp"
#include "cosum/vocabulary.hpp"

namespace cosum {

enum class Method { cooccurrence, correlation, lasso, l1lr };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

// Penalty line search. Starts at the full-shrinkage value, halves until
// the support exceeds k (or the floor lambda_max * 2^-floor_exponent is
// reached), then bisects on log(lambda) for `depth` steps.
struct LambdaSearch {
  double shrink_factor = 2.0;
  int depth = 30;
  int floor_exponent = 40;
};

struct SelectorConfig {
  Method method = Method::lasso;
  std::size_t k = 15;
  SolverConfig solver;
  LambdaSearch search;

  void validate() const;
};

struct ScoredPhrases {
  std::vector<double> scores;  // one per feature column
  Method method = Method::cooccurrence;
};

struct SummaryPhrase {
  std::string phrase;
  double score = 0.0;    // screening score, or coefficient for sparse methods
  std::size_t column = 0;  // feature column
};

struct Summary {
  std::string topic;
  std::vector<SummaryPhrase> phrases;
  Method method = Method::lasso;
  std::string scheme;
  std::string rule;
  std::string unit;
  std::optional<double> lambda;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::string created_at;
  std::vector<std::string> warnings;

  std::vector<std::string> phrase_list() const;
};

// Is `needle` a contiguous token subsequence of `haystack`, and shorter?
bool is_subphrase(std::string_view needle, std::string_view haystack);

// Mean of each column over the positive rows.
ScoredPhrases score_cooccurrence(const FeatureMatrix& X, const LabelVector& y);

// |Pearson correlation| of each column with y over retained rows;
// constant columns score 0.
ScoredPhrases score_correlation(const FeatureMatrix& X, const LabelVector& y);

// Per-column class statistics over retained rows, computed from the sparse
// entries only: class means and the population covariance with y, the
// latter via cov(x_j, y) = 2 p (1 - p) (mean_pos - mean_neg).
struct LabelMoments {
  double p_hat = 0.0;
  std::vector<double> mean_pos;
  std::vector<double> mean_neg;
  std::vector<double> covariance;
  std::vector<double> variance;
};
LabelMoments label_moments(const FeatureMatrix& X, const LabelVector& y);

// Walks phrases by descending score (ties: ascending column), skipping
// sub-phrases of accepted phrases and replacing accepted phrases that a new
// candidate contains. Stops at k. Zero scores are never selected.
std::vector<SummaryPhrase> top_k_distinct(const ScoredPhrases& scores, const FeatureMatrix& X,
                                          const PhraseVocabulary& vocab, std::size_t k);

// Sub-phrase dedup of a fitted support, ordered by |coefficient|
// descending (ties: ascending column). No length cap.
std::vector<SummaryPhrase> distinct_support(const SparseModel& model, const FeatureMatrix& X,
                                            const PhraseVocabulary& vocab);

struct LambdaProbe {
  double lambda = 0.0;
  std::size_t support = 0;  // after dedup
};

struct SearchResult {
  double lambda = 0.0;
  SparseModel model;
  std::size_t support = 0;
  std::vector<LambdaProbe> probes;
  std::vector<std::string> warnings;
};

using SupportCounter = std::function<std::size_t(const SparseModel&)>;

// Returns the probed lambda whose support (as measured by `count`) is the
// largest not exceeding k; ties go to the smallest lambda.
SearchResult search_lambda(const FeatureMatrix& X, std::span<const double> y, std::size_t k,
                           Method method, const SelectorConfig& config,
                           const SupportCounter& count = {});

SparseModel fit_sparse(Method method, const FeatureMatrix& X, std::span<const double> y,
                       double lambda, const SolverConfig& config,
                       const SparseModel* warm_start = nullptr);

// Label-weight-summarize final step: restrict to retained rows, then score
// or fit, and return at most k distinct phrases.
Summary summarize(const FeatureMatrix& X, const LabelVector& y, const PhraseVocabulary& vocab,
                  const SelectorConfig& config);

}  // namespace cosum
