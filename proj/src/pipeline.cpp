#include "cosum/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "cosum/error.hpp"
#include "cosum/stoplist.hpp"
#include "cosum/tokenize.hpp"

namespace cosum {

VocabularyParams AnalysisConfig::vocab_params() const {
  if (vocab) return *vocab;
  VocabularyParams p;
  p.min_df = default_min_df(unit);
  return p;
}

std::span<const std::string> AnalysisConfig::effective_stoplist() const {
  if (stoplist.empty()) return default_stoplist();
  return stoplist;
}

PreparedCorpus prepare_units(std::vector<DocumentUnit> units, const VocabularyParams& params,
                             const MatrixCache* cache) {
  if (units.empty()) throw Error("empty_corpus", "no document units to analyze");
  BuiltMatrix built = cache ? cache->get_or_build(units, params) : build_matrix(units, params);
  return {std::move(units), std::move(built.vocab), std::move(built.counts)};
}

PreparedCorpus prepare_corpus(const Corpus& corpus, UnitKind unit, const VocabularyParams& params,
                              const MatrixCache* cache) {
  if (corpus.empty()) throw Error("empty_corpus", "empty corpus");
  return prepare_units(segment(corpus, unit), params, cache);
}

namespace {

bool is_identity(std::span<const std::size_t> rows, std::size_t n) {
  if (rows.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i] != i) return false;
  }
  return true;
}

std::vector<DocumentUnit> pick_units(const PreparedCorpus& prepared,
                                     std::span<const std::size_t> rows) {
  std::vector<DocumentUnit> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(prepared.units.at(r));
  return out;
}

LabelVector label_rows(const Corpus& corpus, const PreparedCorpus& prepared,
                       std::span<const std::size_t> rows, const CountMatrix& counts,
                       const AnalysisConfig& config) {
  if (config.rule.kind == RuleKind::metadata) {
    const auto units = pick_units(prepared, rows);
    LabelVector labels = label_by_metadata(units, corpus, *config.rule.predicate);
    labels.require_nondegenerate();
    return labels;
  }
  config.query.validate();
  const auto hits = query_hits(counts, prepared.vocab, config.query);
  return apply_rule(hits, config.rule);
}

Summary finish(const CountMatrix& counts, const PhraseVocabulary& vocab, const LabelVector& labels,
               const QuerySet& strip, const AnalysisConfig& config) {
  const StrippedMatrix stripped = strip_query_columns(counts, vocab, strip, config.strip);
  const FeatureMatrix X =
      build_features(stripped.counts, stripped.vocab, config.scheme, config.effective_stoplist());
  Summary summary = summarize(X, labels, stripped.vocab, config.selector);
  summary.unit = std::string(to_string(config.unit));
  return summary;
}

}  // namespace

Summary summarize_rows(const Corpus& corpus, const PreparedCorpus& prepared,
                       std::span<const std::size_t> rows, const AnalysisConfig& config) {
  config.rule.validate();
  if (rows.empty()) throw Error("empty_corpus", "no document units to analyze");
  const bool all = is_identity(rows, prepared.counts.rows());
  const CountMatrix subset = all ? CountMatrix() : prepared.counts.select_rows(rows);
  const CountMatrix& counts = all ? prepared.counts : subset;

  const LabelVector labels = label_rows(corpus, prepared, rows, counts, config);
  Summary summary = finish(counts, prepared.vocab, labels, config.query, config);
  summary.topic = config.query.topic;
  summary.rule = config.rule.describe();
  return summary;
}

Summary run_summary(const Corpus& corpus, const AnalysisConfig& config, const MatrixCache* cache) {
  const PreparedCorpus prepared = prepare_corpus(corpus, config.unit, config.vocab_params(), cache);
  std::vector<std::size_t> rows(prepared.counts.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return summarize_rows(corpus, prepared, rows, config);
}

namespace {

std::size_t raw_positives(const Corpus& corpus, const PreparedCorpus& prepared,
                          std::span<const std::size_t> rows, const AnalysisConfig& config) {
  if (config.rule.kind == RuleKind::metadata) {
    std::size_t n = 0;
    for (std::size_t r : rows) {
      const Document& doc = corpus.document(prepared.units.at(r).parent_index);
      if (config.rule.predicate->matches(doc)) ++n;
    }
    return n;
  }
  const CountMatrix counts = prepared.counts.select_rows(rows);
  const auto hits = query_hits(counts, prepared.vocab, config.query);
  return static_cast<std::size_t>(std::count_if(hits.begin(), hits.end(), [&](std::uint64_t h) {
    return h >= static_cast<std::uint64_t>(config.rule.K);
  }));
}

WindowStats window_stats(std::size_t total, std::size_t positives, const NamedWindow& w) {
  WindowStats s;
  s.total_units = total;
  s.positive_units = positives;
  const double days = std::chrono::duration<double, std::ratio<86400>>(w.end - w.start).count();
  s.positives_per_week = days > 0 ? static_cast<double>(positives) / (days / 7.0) : 0.0;
  s.positive_share = total > 0 ? 100.0 * static_cast<double>(positives) / static_cast<double>(total)
                               : 0.0;
  return s;
}

SnapshotResult run_window(const Corpus& corpus, const SnapshotSpec& spec,
                          const PreparedCorpus* global, const MatrixCache* cache,
                          const NamedWindow& window) {
  SnapshotResult result;
  result.window = window;
  try {
    if (window.start >= window.end) {
      throw Error("invalid_window", "window '" + window.name + "' has start >= end");
    }
    std::optional<PreparedCorpus> local;
    std::vector<std::size_t> rows;
    if (global) {
      rows = window_indices(global->units, corpus, window.start, window.end);
    } else {
      auto units = segment(corpus, spec.analysis.unit);
      auto in_window = filter_window(units, corpus, window.start, window.end);
      if (!in_window.empty()) {
        local = prepare_units(std::move(in_window), spec.analysis.vocab_params(), cache);
        rows.resize(local->counts.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      }
    }
    if (rows.empty()) {
      throw Error("empty_window", "window '" + window.name + "' contains no units");
    }
    const PreparedCorpus& prepared = global ? *global : *local;
    result.stats = window_stats(rows.size(), raw_positives(corpus, prepared, rows, spec.analysis),
                                window);
    result.summary = summarize_rows(corpus, prepared, rows, spec.analysis);
  } catch (const Error& e) {
    result.error_code = e.code();
    result.error = e.what();
  }
  return result;
}

template <typename Fn>
void run_jobs(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

std::vector<SnapshotResult> snapshot_series(const Corpus& corpus, const SnapshotSpec& spec,
                                            const MatrixCache* cache) {
  if (spec.windows.empty()) throw Error("invalid_spec", "snapshot spec has no windows");
  spec.analysis.rule.validate();
  if (spec.analysis.rule.kind != RuleKind::metadata) spec.analysis.query.validate();
  spec.analysis.selector.validate();

  std::optional<PreparedCorpus> global;
  if (!spec.per_window_vocab) {
    global = prepare_corpus(corpus, spec.analysis.unit, spec.analysis.vocab_params(), cache);
  }
  std::vector<SnapshotResult> results(spec.windows.size());
  run_jobs(spec.windows.size(), spec.workers, [&](std::size_t i) {
    results[i] = run_window(corpus, spec, global ? &*global : nullptr, cache, spec.windows[i]);
  });
  return results;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string snapshot_grid_csv(const std::vector<SnapshotResult>& results) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> ranks;
  for (std::size_t w = 0; w < results.size(); ++w) {
    if (!results[w].summary) continue;
    const auto& phrases = results[w].summary->phrases;
    for (std::size_t r = 0; r < phrases.size(); ++r) {
      auto [it, inserted] = ranks.try_emplace(phrases[r].phrase, results.size(), 0);
      if (inserted) order.push_back(phrases[r].phrase);
      it->second[w] = r + 1;
    }
  }
  std::ostringstream out;
  out << "phrase";
  for (const auto& r : results) out << ',' << csv_field(r.window.name);
  out << '\n';
  for (const auto& phrase : order) {
    out << csv_field(phrase);
    for (std::size_t rank : ranks[phrase]) {
      out << ',';
      if (rank) out << rank;
    }
    out << '\n';
  }
  return out.str();
}

Summary compare_between(const Corpus& corpus, const ComparisonSpec& spec,
                        const AnalysisConfig& analysis, const MatrixCache* cache) {
  if (spec.source_a.empty() || spec.source_b.empty() || spec.source_a == spec.source_b) {
    throw Error("invalid_spec", "between-source comparison needs two distinct sources");
  }
  analysis.selector.validate();
  std::vector<DocumentUnit> units;
  for (auto& u : segment(corpus, analysis.unit)) {
    const auto& source = corpus.document(u.parent_index).source;
    if (source == spec.source_a || source == spec.source_b) units.push_back(std::move(u));
  }
  if (units.empty()) {
    throw Error("source_absent", "neither '" + spec.source_a + "' nor '" + spec.source_b +
                                     "' occurs in the corpus");
  }
  const PreparedCorpus prepared = prepare_units(std::move(units), analysis.vocab_params(), cache);

  std::vector<std::size_t> rows;
  if (spec.topic_filter) {
    spec.topic_filter->validate();
    const auto hits = query_hits(prepared.counts, prepared.vocab, *spec.topic_filter);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (hits[i] > 0) rows.push_back(i);
    }
  } else {
    rows.resize(prepared.counts.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }

  std::vector<std::int8_t> values(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& source = corpus.document(prepared.units[rows[i]].parent_index).source;
    values[i] = source == spec.source_a ? 1 : -1;
  }
  LabelVector labels(std::move(values));
  for (const auto* side : {&spec.source_a, &spec.source_b}) {
    const bool present = *side == spec.source_a ? labels.n_pos() > 0 : labels.n_neg() > 0;
    if (!present) {
      throw Error("source_absent", "source '" + *side + "' has no units after filtering");
    }
  }

  QuerySet strip;
  strip.ban_list = analysis.query.ban_list;
  if (spec.topic_filter) {
    strip.terms = spec.topic_filter->terms;
    strip.ban_list.insert(strip.ban_list.end(), spec.topic_filter->ban_list.begin(),
                          spec.topic_filter->ban_list.end());
  }
  const CountMatrix counts = prepared.counts.select_rows(rows);
  Summary summary = finish(counts, prepared.vocab, labels, strip, analysis);
  summary.topic = spec.topic_filter ? spec.topic_filter->topic : analysis.query.topic;
  summary.rule = "source:" + spec.source_a + "/" + spec.source_b;
  return summary;
}

Summary compare_within(const Corpus& corpus, const ComparisonSpec& spec,
                       const AnalysisConfig& analysis, const MatrixCache* cache) {
  if (spec.source.empty()) throw Error("invalid_spec", "within-source comparison needs a source");
  std::vector<DocumentUnit> units;
  for (auto& u : segment(corpus, analysis.unit)) {
    if (corpus.document(u.parent_index).source == spec.source) units.push_back(std::move(u));
  }
  if (units.empty()) {
    throw Error("source_absent", "source '" + spec.source + "' does not occur in the corpus");
  }
  const PreparedCorpus prepared = prepare_units(std::move(units), analysis.vocab_params(), cache);
  std::vector<std::size_t> rows(prepared.counts.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return summarize_rows(corpus, prepared, rows, analysis);
}

std::vector<DuplicatePair> near_duplicates(const CountMatrix& counts, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error("invalid_argument", "cosine threshold must lie in (0, 1]");
  }
  const std::size_t n = counts.rows();
  const auto& df = counts.col_doc_freq();

  std::vector<std::vector<std::uint32_t>> postings(counts.cols());
  std::vector<double> sq_norm(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = counts.row(i);
    for (std::size_t k = 0; k < row.columns.size(); ++k) {
      postings[row.columns[k]].push_back(static_cast<std::uint32_t>(i));
      sq_norm[i] += static_cast<double>(row.counts[k]) * row.counts[k];
    }
  }

  // A pair with cosine >= t must share a feature from the rare-first prefix
  // of either row whose complement has norm below t.
  const double bound = threshold * threshold * (1.0 - 1e-9);
  std::vector<DuplicatePair> out;
  std::vector<std::uint32_t> mark(n, 0);
  std::vector<std::size_t> order;
  std::vector<std::size_t> candidates;
  std::uint32_t stamp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sq_norm[i] == 0.0) continue;
    const auto row = counts.row(i);
    order.resize(row.columns.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto ca = row.columns[a], cb = row.columns[b];
      return df[ca] != df[cb] ? df[ca] < df[cb] : ca < cb;
    });
    std::size_t prefix = order.size();
    double suffix = 0.0;
    while (prefix > 0) {
      const double c = row.counts[order[prefix - 1]];
      if ((suffix + c * c) / sq_norm[i] >= bound) break;
      suffix += c * c;
      --prefix;
    }
    ++stamp;
    candidates.clear();
    for (std::size_t k = 0; k < prefix; ++k) {
      for (std::uint32_t other : postings[row.columns[order[k]]]) {
        if (other > i && mark[other] != stamp) {
          mark[other] = stamp;
          candidates.push_back(other);
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());
    for (std::size_t j : candidates) {
      const auto other = counts.row(j);
      std::uint64_t dot = 0;
      std::size_t a = 0, b = 0;
      while (a < row.columns.size() && b < other.columns.size()) {
        if (row.columns[a] < other.columns[b]) {
          ++a;
        } else if (row.columns[a] > other.columns[b]) {
          ++b;
        } else {
          dot += static_cast<std::uint64_t>(row.counts[a++]) * other.counts[b++];
        }
      }
      const double cosine =
          std::min(1.0, static_cast<double>(dot) / std::sqrt(sq_norm[i] * sq_norm[j]));
      if (cosine >= threshold - 1e-12) out.push_back({i, j, cosine});
    }
  }
  return out;
}

VocabularyParams duplicate_vocab_params() {
  VocabularyParams p;
  p.ngram = {1, 1};
  p.min_df = 1;
  return p;
}

double duplicate_fraction(const std::vector<DuplicatePair>& pairs, std::size_t rows) {
  if (rows == 0) return 0.0;
  std::vector<bool> hit(rows, false);
  for (const auto& p : pairs) {
    hit.at(p.first) = true;
    hit.at(p.second) = true;
  }
  return static_cast<double>(std::count(hit.begin(), hit.end(), true)) / static_cast<double>(rows);
}

std::vector<KwicSnippet> kwic(std::span<const DocumentUnit> units, std::string_view phrase,
                              std::size_t max_samples, std::size_t window_tokens,
                              std::uint64_t seed) {
  const auto needle = tokenize(phrase);
  if (needle.empty()) throw Error("invalid_argument", "KWIC phrase is empty");

  struct Hit {
    std::size_t unit;
    std::size_t token;
  };
  std::vector<Hit> hits;
  std::vector<std::vector<Token>> tokens(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    tokens[u] = tokenize_with_offsets(units[u].text);
    const auto& t = tokens[u];
    for (std::size_t s = 0; s + needle.size() <= t.size(); ++s) {
      bool match = true;
      for (std::size_t k = 0; k < needle.size() && match; ++k) match = t[s + k].text == needle[k];
      if (match) hits.push_back({u, s});
    }
  }

  std::vector<Hit> chosen;
  std::mt19937_64 rng(seed);
  std::sample(hits.begin(), hits.end(), std::back_inserter(chosen), max_samples, rng);

  std::vector<KwicSnippet> out;
  out.reserve(chosen.size());
  for (const auto& h : chosen) {
    const std::string& text = units[h.unit].text;
    const auto& t = tokens[h.unit];
    const std::size_t first = h.token;
    const std::size_t last = h.token + needle.size() - 1;
    const std::size_t lo = first >= window_tokens ? first - window_tokens : 0;
    const std::size_t hi = std::min(t.size() - 1, last + window_tokens);
    KwicSnippet s;
    s.unit_id = units[h.unit].unit_id;
    s.left = text.substr(t[lo].begin, t[first].begin - t[lo].begin);
    s.match = text.substr(t[first].begin, t[last].end - t[first].begin);
    s.right = text.substr(t[last].end, t[hi].end - t[last].end);
    s.display = s.left + to_upper(s.match) + s.right;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace cosum
