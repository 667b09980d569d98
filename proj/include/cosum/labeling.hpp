#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cosum/corpus.hpp"
#include "cosum/vocabulary.hpp"

namespace cosum {

// A topic translated into phrases. Terms and ban-list entries are stored in
// tokenizer-normalized form so they compare equal to vocabulary phrases.
struct QuerySet {
  std::string topic;
  std::vector<std::string> terms;
  std::vector<std::string> ban_list;

  // Normalizes every entry and validates; throws Error{"invalid_query"}.
  static QuerySet make(std::string topic, const std::vector<std::string>& terms,
                       const std::vector<std::string>& ban_list = {});
  void validate() const;
};

// Document-level predicate; every set field must match. A window is
// half-open [start, end).
struct MetadataPredicate {
  std::optional<std::string> source;
  std::optional<TimePoint> start;
  std::optional<TimePoint> end;

  bool matches(const Document& doc) const;
};

enum class RuleKind { count_k, hcount_k, metadata };

struct LabelingRule {
  RuleKind kind = RuleKind::count_k;
  int K = 1;
  std::optional<MetadataPredicate> predicate;

  static LabelingRule count(int K) { return {RuleKind::count_k, K, std::nullopt}; }
  static LabelingRule hcount(int K) { return {RuleKind::hcount_k, K, std::nullopt}; }
  static LabelingRule metadata(MetadataPredicate p) { return {RuleKind::metadata, 1, std::move(p)}; }

  void validate() const;
  // "count:2", "hcount:3", "metadata"
  std::string describe() const;
};

// Parses "count:K" / "hcount:K" (a bare "count" means K=1).
LabelingRule parse_rule(std::string_view text);

// Per-row label: +1, -1, or 0 for rows dropped from the analysis.
class LabelVector {
 public:
  LabelVector() = default;
  explicit LabelVector(std::vector<std::int8_t> values);

  std::size_t size() const { return values_.size(); }
  std::int8_t operator[](std::size_t i) const { return values_[i]; }
  const std::vector<std::int8_t>& values() const { return values_; }
  bool dropped(std::size_t i) const { return values_[i] == 0; }
  std::size_t n_pos() const { return n_pos_; }
  std::size_t n_neg() const { return n_neg_; }
  std::size_t n_retained() const { return n_pos_ + n_neg_; }
  std::vector<std::size_t> retained_rows() const;
  std::vector<std::size_t> dropped_rows() const;
  LabelVector negated() const;

  // Throws Error{"degenerate_labeling"} unless both classes are present.
  void require_nondegenerate() const;

 private:
  std::vector<std::int8_t> values_;
  std::size_t n_pos_ = 0;
  std::size_t n_neg_ = 0;
};

// Sum over query terms of the term's count in row `row`; terms missing
// from the vocabulary contribute 0.
std::uint64_t count_hits(const CountMatrix& counts, std::size_t row, const PhraseVocabulary& vocab,
                         const QuerySet& query);
std::vector<std::uint64_t> query_hits(const CountMatrix& counts, const PhraseVocabulary& vocab,
                                      const QuerySet& query);

// count-K: +1 iff hits >= K. hcount-K additionally drops rows with 1..K-1
// hits. Throws on degenerate results.
LabelVector apply_rule(std::span<const std::uint64_t> hits, const LabelingRule& rule);

LabelVector label_by_metadata(std::span<const DocumentUnit> units, const Corpus& corpus,
                              const MetadataPredicate& predicate);
LabelVector label_by_predicate(std::span<const DocumentUnit> units, const Corpus& corpus,
                               const std::function<bool(const DocumentUnit&, const Document&)>& pred);

enum class StripMode {
  // Drop phrases that contain any content token of a query or ban term.
  containment,
  // Drop only phrases equal to a query or ban term.
  exact,
};

struct StrippedMatrix {
  CountMatrix counts;
  PhraseVocabulary vocab;
  std::vector<std::size_t> kept_columns;  // new column -> old column
  std::vector<std::size_t> removed_columns;
};

// Removes label-generating (and banned) phrases. Throws
// Error{"empty_vocabulary"} if nothing would remain.
StrippedMatrix strip_query_columns(const CountMatrix& counts, const PhraseVocabulary& vocab,
                                   const QuerySet& query, StripMode mode = StripMode::containment);

// Tokens used for containment stripping: every token of each term, except
// that stop words are ignored in terms that also have a non-stop token.
std::vector<std::string> strip_tokens(const QuerySet& query);

}  // namespace cosum
