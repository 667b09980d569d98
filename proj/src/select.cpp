#include "cosum/select.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "cosum/error.hpp"

namespace cosum {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::cooccurrence: return "cooccurrence";
    case Method::correlation: return "correlation";
    case Method::lasso: return "lasso";
    case Method::l1lr: return "l1lr";
  }
  return "lasso";
}

Method parse_method(std::string_view text) {
  if (text == "cooccurrence" || text == "cooc") return Method::cooccurrence;
  if (text == "correlation" || text == "corr") return Method::correlation;
  if (text == "lasso") return Method::lasso;
  if (text == "l1lr") return Method::l1lr;
  throw Error("invalid_argument", "unknown method '" + std::string(text) + "'");
}

void SelectorConfig::validate() const {
  if (k < 1) throw Error("invalid_config", "summary length k must be at least 1");
  if (!(solver.tol > 0.0)) throw Error("invalid_config", "solver_tol must be positive");
  if (solver.max_sweeps < 1) throw Error("invalid_config", "max_sweeps must be positive");
  if (!(search.shrink_factor > 1.0)) throw Error("invalid_config", "shrink factor must exceed 1");
  if (search.depth < 0 || search.floor_exponent < 1) {
    throw Error("invalid_config", "invalid line-search depth or floor");
  }
}

std::vector<std::string> Summary::phrase_list() const {
  std::vector<std::string> out;
  out.reserve(phrases.size());
  for (const auto& p : phrases) out.push_back(p.phrase);
  return out;
}

bool is_subphrase(std::string_view needle, std::string_view haystack) {
  if (needle.empty() || needle.size() >= haystack.size()) return false;
  std::size_t pos = haystack.find(needle);
  while (pos != std::string_view::npos) {
    const bool left = pos == 0 || haystack[pos - 1] == ' ';
    const std::size_t end = pos + needle.size();
    const bool right = end == haystack.size() || haystack[end] == ' ';
    if (left && right) return true;
    pos = haystack.find(needle, pos + 1);
  }
  return false;
}

ScoredPhrases score_cooccurrence(const FeatureMatrix& X, const LabelVector& y) {
  if (y.size() != X.rows()) throw Error("invalid_argument", "label length does not match rows");
  if (y.n_pos() == 0) throw Error("degenerate_labeling", "co-occurrence needs positive units");
  ScoredPhrases out{std::vector<double>(X.cols(), 0.0), Method::cooccurrence};
  const double n_pos = static_cast<double>(y.n_pos());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const auto rows = X.column_rows(j);
    const auto vals = X.column_values(j);
    double sum = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (y[rows[k]] == 1) sum += vals[k];
    }
    out.scores[j] = sum / n_pos;
  }
  return out;
}

LabelMoments label_moments(const FeatureMatrix& X, const LabelVector& y) {
  if (y.size() != X.rows()) throw Error("invalid_argument", "label length does not match rows");
  y.require_nondegenerate();
  const std::size_t p = X.cols();
  const double n = static_cast<double>(y.n_retained());
  const double n_pos = static_cast<double>(y.n_pos());
  const double n_neg = static_cast<double>(y.n_neg());

  LabelMoments m;
  m.p_hat = n_pos / n;
  m.mean_pos.assign(p, 0.0);
  m.mean_neg.assign(p, 0.0);
  m.covariance.assign(p, 0.0);
  m.variance.assign(p, 0.0);
  const double scale = 2.0 * m.p_hat * (1.0 - m.p_hat);
  for (std::size_t j = 0; j < p; ++j) {
    const auto rows = X.column_rows(j);
    const auto vals = X.column_values(j);
    double sum_pos = 0.0, sum_neg = 0.0;
    std::size_t stored = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto label = y[rows[k]];
      if (label == 1) {
        sum_pos += vals[k];
      } else if (label == -1) {
        sum_neg += vals[k];
      } else {
        continue;
      }
      ++stored;
    }
    m.mean_pos[j] = sum_pos / n_pos;
    m.mean_neg[j] = sum_neg / n_neg;
    m.covariance[j] = scale * (m.mean_pos[j] - m.mean_neg[j]);

    // Two-pass variance over retained rows; implicit zeros contribute mean^2.
    const double mean = (sum_pos + sum_neg) / n;
    double ss = (n - static_cast<double>(stored)) * mean * mean;
    double sq = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (y[rows[k]] == 0) continue;
      const double d = vals[k] - mean;
      ss += d * d;
      sq += vals[k] * vals[k];
    }
    // Values equal up to rounding count as constant.
    m.variance[j] = ss <= 1e-20 * sq ? 0.0 : ss / n;
  }
  return m;
}

ScoredPhrases score_correlation(const FeatureMatrix& X, const LabelVector& y) {
  if (y.n_retained() < 2) throw Error("degenerate_labeling", "correlation needs at least two units");
  const LabelMoments m = label_moments(X, y);
  const double var_y = 4.0 * m.p_hat * (1.0 - m.p_hat);
  ScoredPhrases out{std::vector<double>(X.cols(), 0.0), Method::correlation};
  for (std::size_t j = 0; j < X.cols(); ++j) {
    if (m.variance[j] <= 0.0) continue;
    const double r = m.covariance[j] / std::sqrt(m.variance[j] * var_y);
    out.scores[j] = std::min(1.0, std::abs(r));
  }
  return out;
}

namespace {

struct Candidate {
  std::size_t column;
  double rank_key;
  double score;
};

std::vector<SummaryPhrase> distinct_walk(std::vector<Candidate> cands, const FeatureMatrix& X,
                                         const PhraseVocabulary& vocab, std::size_t k) {
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rank_key != b.rank_key) return a.rank_key > b.rank_key;
    return a.column < b.column;
  });
  struct Accepted {
    SummaryPhrase phrase;
    std::size_t order;
  };
  std::vector<Accepted> accepted;
  for (std::size_t c = 0; c < cands.size() && accepted.size() < k; ++c) {
    const Candidate& cand = cands[c];
    const std::string& phrase = vocab.phrase(X.column_map().at(cand.column));
    const bool covered = std::any_of(accepted.begin(), accepted.end(), [&](const Accepted& a) {
      return a.phrase.phrase == phrase || is_subphrase(phrase, a.phrase.phrase);
    });
    if (covered) continue;
    std::erase_if(accepted, [&](const Accepted& a) { return is_subphrase(a.phrase.phrase, phrase); });
    accepted.push_back({SummaryPhrase{phrase, cand.score, cand.column}, c});
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Accepted& a, const Accepted& b) { return a.order < b.order; });
  std::vector<SummaryPhrase> out;
  out.reserve(accepted.size());
  for (auto& a : accepted) out.push_back(std::move(a.phrase));
  return out;
}

}  // namespace

std::vector<SummaryPhrase> top_k_distinct(const ScoredPhrases& scores, const FeatureMatrix& X,
                                          const PhraseVocabulary& vocab, std::size_t k) {
  if (k < 1) throw Error("invalid_config", "summary length k must be at least 1");
  if (scores.scores.size() != X.cols()) throw Error("invalid_argument", "score/column mismatch");
  std::vector<Candidate> cands;
  for (std::size_t j = 0; j < scores.scores.size(); ++j) {
    const double s = scores.scores[j];
    if (!std::isfinite(s)) throw Error("non_finite", "non-finite phrase score");
    if (s > 0.0) cands.push_back({j, s, s});
  }
  return distinct_walk(std::move(cands), X, vocab, k);
}

std::vector<SummaryPhrase> distinct_support(const SparseModel& model, const FeatureMatrix& X,
                                            const PhraseVocabulary& vocab) {
  std::vector<Candidate> cands;
  for (const auto& [j, b] : model.beta) cands.push_back({j, std::abs(b), b});
  const std::size_t all = cands.size();
  return distinct_walk(std::move(cands), X, vocab, all);
}

SparseModel fit_sparse(Method method, const FeatureMatrix& X, std::span<const double> y,
                       double lambda, const SolverConfig& config, const SparseModel* warm_start) {
  switch (method) {
    case Method::lasso: return fit_lasso(X, y, lambda, config, warm_start);
    case Method::l1lr: return fit_l1lr(X, y, lambda, config, warm_start);
    default: break;
  }
  throw Error("invalid_argument", "fit_sparse needs lasso or l1lr");
}

SearchResult search_lambda(const FeatureMatrix& X, std::span<const double> y, std::size_t k,
                           Method method, const SelectorConfig& config,
                           const SupportCounter& count) {
  if (k < 1) throw Error("invalid_config", "summary length k must be at least 1");
  if (method != Method::lasso && method != Method::l1lr) {
    throw Error("invalid_argument", "lambda search applies to lasso and l1lr only");
  }
  const SupportCounter support_of =
      count ? count : SupportCounter([](const SparseModel& m) { return m.support_size(); });

  SearchResult result;
  const double lambda_max =
      method == Method::lasso ? lasso_lambda_max(X, y) : l1lr_lambda_max(X, y);
  // Reference for "numerically zero": the largest attainable |x_j'(y - c)|.
  double y_spread = 0.0;
  {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (double v : y) y_spread = std::max(y_spread, std::abs(v - mean));
    if (method == Method::l1lr) y_spread = 1.0;
  }
  double col_l1 = 0.0;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    double s = 0.0;
    for (double v : X.column_values(j)) s += std::abs(v);
    col_l1 = std::max(col_l1, s);
  }
  const double scale = (method == Method::lasso ? 2.0 : 1.0) * y_spread * col_l1;
  if (!(lambda_max > 1e-12 * scale)) {
    // No column moves the fit away from the intercept: nothing to select.
    const double lambda = scale > 0.0 ? scale : 1.0;
    result.model = fit_sparse(method, X, y, lambda, config.solver);
    result.lambda = lambda;
    result.support = support_of(result.model);
    result.probes.push_back({lambda, result.support});
    result.warnings.push_back("no separating signal: every phrase is uncorrelated with the labels");
    return result;
  }

  bool have_best = false;
  SparseModel last;
  bool have_last = false;
  auto probe = [&](double lambda) {
    SparseModel m = fit_sparse(method, X, y, lambda, config.solver, have_last ? &last : nullptr);
    const std::size_t s = support_of(m);
    result.probes.push_back({lambda, s});
    if (s <= k && (!have_best || s > result.support ||
                   (s == result.support && lambda < result.lambda))) {
      result.lambda = lambda;
      result.support = s;
      result.model = m;
      have_best = true;
    }
    last = std::move(m);
    have_last = true;
    return s;
  };

  double hi = lambda_max;
  probe(hi);
  const double floor = std::ldexp(lambda_max, -config.search.floor_exponent);
  std::optional<double> lo;
  for (double lambda = hi / config.search.shrink_factor; lambda >= floor;
       lambda /= config.search.shrink_factor) {
    if (probe(lambda) > k) {
      lo = lambda;
      break;
    }
    hi = lambda;
  }
  if (lo) {
    for (int d = 0; d < config.search.depth; ++d) {
      const double mid = std::sqrt(*lo * hi);
      if (!(mid > *lo && mid < hi)) break;
      if (probe(mid) > k) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  if (result.support == 0) {
    result.warnings.push_back("lambda search found no nonzero coefficient above the floor");
  }
  for (const auto& w : result.model.warnings) result.warnings.push_back(w);
  return result;
}

namespace {

std::string now_iso() {
  return format_iso8601(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

}  // namespace

Summary summarize(const FeatureMatrix& X, const LabelVector& y, const PhraseVocabulary& vocab,
                  const SelectorConfig& config) {
  config.validate();
  if (y.size() != X.rows()) throw Error("invalid_argument", "label length does not match rows");
  y.require_nondegenerate();

  Summary summary;
  summary.method = config.method;
  summary.n_pos = y.n_pos();
  summary.n_neg = y.n_neg();
  summary.scheme = std::string(to_string(X.scheme()));
  summary.created_at = now_iso();

  switch (config.method) {
    case Method::cooccurrence:
      summary.phrases = top_k_distinct(score_cooccurrence(X, y), X, vocab, config.k);
      break;
    case Method::correlation:
      summary.phrases = top_k_distinct(score_correlation(X, y), X, vocab, config.k);
      break;
    case Method::lasso:
    case Method::l1lr: {
      const auto rows = y.retained_rows();
      const bool all_rows = rows.size() == X.rows();
      const FeatureMatrix reduced = all_rows ? FeatureMatrix() : X.select_rows(rows);
      const FeatureMatrix& design = all_rows ? X : reduced;
      const auto targets = label_targets(y.values());
      auto counter = [&](const SparseModel& m) { return distinct_support(m, design, vocab).size(); };
      SearchResult found = search_lambda(design, targets, config.k, config.method, config, counter);
      summary.phrases = distinct_support(found.model, design, vocab);
      if (summary.phrases.size() > config.k) summary.phrases.resize(config.k);
      summary.lambda = found.lambda;
      summary.warnings = std::move(found.warnings);
      break;
    }
  }
  return summary;
}

}  // namespace cosum
