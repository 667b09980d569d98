#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cosum/corpus.hpp"
#include "cosum/labeling.hpp"
#include "cosum/matrix_cache.hpp"
#include "cosum/rescale.hpp"
#include "cosum/select.hpp"
#include "cosum/vocabulary.hpp"

namespace cosum {

// Everything needed to turn a corpus into one summary. The defaults are the
// recommended configuration: lasso, L2 rescaling, article units, count-1, k = 15.
struct AnalysisConfig {
  QuerySet query;
  LabelingRule rule = LabelingRule::count(1);
  UnitKind unit = UnitKind::article;
  Scheme scheme = Scheme::l2;
  SelectorConfig selector;
  std::optional<VocabularyParams> vocab;  // unset: n-grams 1..3, default_min_df(unit)
  StripMode strip = StripMode::containment;
  std::vector<std::string> stoplist;      // empty: built-in list

  VocabularyParams vocab_params() const;
  std::span<const std::string> effective_stoplist() const;
};

struct PreparedCorpus {
  std::vector<DocumentUnit> units;
  PhraseVocabulary vocab;
  CountMatrix counts;
};

PreparedCorpus prepare_units(std::vector<DocumentUnit> units, const VocabularyParams& params,
                             const MatrixCache* cache = nullptr);
PreparedCorpus prepare_corpus(const Corpus& corpus, UnitKind unit, const VocabularyParams& params,
                              const MatrixCache* cache = nullptr);

// Label, strip, rescale and summarize the given rows of a prepared corpus.
Summary summarize_rows(const Corpus& corpus, const PreparedCorpus& prepared,
                       std::span<const std::size_t> rows, const AnalysisConfig& config);

Summary run_summary(const Corpus& corpus, const AnalysisConfig& config,
                    const MatrixCache* cache = nullptr);

struct NamedWindow {
  std::string name;
  TimePoint start;
  TimePoint end;
};

struct SnapshotSpec {
  AnalysisConfig analysis;
  std::vector<NamedWindow> windows;
  bool per_window_vocab = false;
  std::size_t workers = 1;
};

struct WindowStats {
  std::size_t total_units = 0;
  std::size_t positive_units = 0;
  double positives_per_week = 0.0;
  double positive_share = 0.0;  // percent of total units
};

struct SnapshotResult {
  NamedWindow window;
  WindowStats stats;
  std::optional<Summary> summary;
  std::string error_code;  // empty on success
  std::string error;
};

// One independent summary per window; a failing window carries an error
// marker and the series continues. Results follow window order.
std::vector<SnapshotResult> snapshot_series(const Corpus& corpus, const SnapshotSpec& spec,
                                            const MatrixCache* cache = nullptr);

// Grid with one row per phrase (first-appearance order) and one column per
// window; cells hold the 1-based rank or are empty.
std::string snapshot_grid_csv(const std::vector<SnapshotResult>& results);

enum class ComparisonMode { between_source, within_source };

struct ComparisonSpec {
  ComparisonMode mode = ComparisonMode::between_source;
  std::string source_a;  // labeled +1 (between mode)
  std::string source_b;  // labeled -1 (between mode)
  std::string source;    // within mode
  // Between mode: units without a hit are dropped before labeling, and the
  // filter terms are stripped from the features.
  std::optional<QuerySet> topic_filter;
};

// Labels source_a +1 and source_b -1; analysis.query supplies only the ban list.
Summary compare_between(const Corpus& corpus, const ComparisonSpec& spec,
                        const AnalysisConfig& analysis, const MatrixCache* cache = nullptr);
// Restricts to spec.source and labels by analysis.query / analysis.rule.
Summary compare_within(const Corpus& corpus, const ComparisonSpec& spec,
                       const AnalysisConfig& analysis, const MatrixCache* cache = nullptr);

struct DuplicatePair {
  std::size_t first;   // first < second
  std::size_t second;
  double cosine;
};

// All row pairs of the raw count matrix with cosine >= threshold, sorted by
// (first, second). Zero rows never match.
std::vector<DuplicatePair> near_duplicates(const CountMatrix& counts, double threshold);

// Vocabulary for duplicate detection: every unigram, no frequency floor.
VocabularyParams duplicate_vocab_params();

// Share of rows that belong to at least one reported pair.
double duplicate_fraction(const std::vector<DuplicatePair>& pairs, std::size_t rows);

struct KwicSnippet {
  std::string unit_id;
  std::string left;
  std::string match;  // original text of the matched span
  std::string right;
  std::string display;  // left + MATCH (upper-cased) + right
};

// Up to max_samples occurrences of `phrase`, sampled uniformly without
// replacement with a seeded generator, each with window_tokens tokens of
// context on either side.
std::vector<KwicSnippet> kwic(std::span<const DocumentUnit> units, std::string_view phrase,
                              std::size_t max_samples, std::size_t window_tokens,
                              std::uint64_t seed);

}  // namespace cosum
