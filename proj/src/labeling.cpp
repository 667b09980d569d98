#include "cosum/labeling.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "cosum/error.hpp"
#include "cosum/stoplist.hpp"
#include "cosum/tokenize.hpp"

namespace cosum {

QuerySet QuerySet::make(std::string topic, const std::vector<std::string>& terms,
                        const std::vector<std::string>& ban_list) {
  auto normalize_all = [](const std::vector<std::string>& in, const char* what) {
    std::vector<std::string> out;
    for (const auto& raw : in) {
      std::string norm = normalize_phrase(raw);
      if (norm.empty()) {
        throw Error("invalid_query", std::string(what) + " entry '" + raw + "' has no tokens");
      }
      if (std::find(out.begin(), out.end(), norm) == out.end()) out.push_back(std::move(norm));
    }
    return out;
  };
  QuerySet q{std::move(topic), normalize_all(terms, "query"), normalize_all(ban_list, "ban")};
  q.validate();
  return q;
}

void QuerySet::validate() const {
  if (terms.empty()) throw Error("invalid_query", "query set needs at least one term");
  for (const auto* list : {&terms, &ban_list}) {
    for (const auto& t : *list) {
      if (t.empty() || normalize_phrase(t) != t) {
        throw Error("invalid_query", "query entry '" + t + "' is not a normalized phrase");
      }
    }
  }
}

bool MetadataPredicate::matches(const Document& doc) const {
  if (source && doc.source != *source) return false;
  if (start || end) {
    if (!doc.published_at) {
      throw Error("missing_date", "document '" + doc.id + "' has no published_at");
    }
    if (start && *doc.published_at < *start) return false;
    if (end && !(*doc.published_at < *end)) return false;
  }
  return true;
}

void LabelingRule::validate() const {
  switch (kind) {
    case RuleKind::count_k:
    case RuleKind::hcount_k:
      if (K < 1) throw Error("invalid_rule", "rule threshold K must be at least 1");
      if (predicate) throw Error("invalid_rule", "count rules take no metadata predicate");
      break;
    case RuleKind::metadata:
      if (!predicate) throw Error("invalid_rule", "metadata rule requires a predicate");
      break;
  }
}

std::string LabelingRule::describe() const {
  switch (kind) {
    case RuleKind::count_k: return "count:" + std::to_string(K);
    case RuleKind::hcount_k: return "hcount:" + std::to_string(K);
    case RuleKind::metadata: return "metadata";
  }
  return "";
}

LabelingRule parse_rule(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  int K = 1;
  if (colon != std::string_view::npos) {
    const std::string tail(text.substr(colon + 1));
    std::size_t used = 0;
    try {
      K = std::stoi(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tail.size()) {
      throw Error("invalid_rule", "bad rule threshold in '" + std::string(text) + "'");
    }
  }
  LabelingRule rule;
  if (head == "count") {
    rule = LabelingRule::count(K);
  } else if (head == "hcount") {
    rule = LabelingRule::hcount(K);
  } else {
    throw Error("invalid_rule", "unknown rule '" + std::string(text) + "'");
  }
  rule.validate();
  return rule;
}

LabelVector::LabelVector(std::vector<std::int8_t> values) : values_(std::move(values)) {
  for (std::int8_t v : values_) {
    if (v == 1) {
      ++n_pos_;
    } else if (v == -1) {
      ++n_neg_;
    } else if (v != 0) {
      throw Error("invalid_argument", "label values must be -1, 0 or +1");
    }
  }
}

std::vector<std::size_t> LabelVector::retained_rows() const {
  std::vector<std::size_t> out;
  out.reserve(n_retained());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] != 0) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> LabelVector::dropped_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == 0) out.push_back(i);
  }
  return out;
}

LabelVector LabelVector::negated() const {
  std::vector<std::int8_t> v(values_);
  for (auto& x : v) x = static_cast<std::int8_t>(-x);
  return LabelVector(std::move(v));
}

void LabelVector::require_nondegenerate() const {
  if (n_pos_ == 0 || n_neg_ == 0) {
    throw Error("degenerate_labeling", "degenerate labeling: " + std::to_string(n_pos_) +
                                           " positive and " + std::to_string(n_neg_) +
                                           " negative units");
  }
}

namespace {

std::vector<std::size_t> query_columns(const PhraseVocabulary& vocab, const QuerySet& query) {
  std::vector<std::size_t> cols;
  for (const auto& term : query.terms) {
    if (auto j = vocab.index_of(term)) cols.push_back(*j);
  }
  return cols;
}

}  // namespace

std::uint64_t count_hits(const CountMatrix& counts, std::size_t row, const PhraseVocabulary& vocab,
                         const QuerySet& query) {
  std::uint64_t hits = 0;
  for (std::size_t j : query_columns(vocab, query)) hits += counts.at(row, j);
  return hits;
}

std::vector<std::uint64_t> query_hits(const CountMatrix& counts, const PhraseVocabulary& vocab,
                                      const QuerySet& query) {
  std::vector<char> is_query(counts.cols(), 0);
  for (std::size_t j : query_columns(vocab, query)) is_query[j] = 1;
  std::vector<std::uint64_t> hits(counts.rows(), 0);
  for (std::size_t i = 0; i < counts.rows(); ++i) {
    const auto r = counts.row(i);
    for (std::size_t k = 0; k < r.columns.size(); ++k) {
      if (is_query[r.columns[k]]) hits[i] += r.counts[k];
    }
  }
  return hits;
}

LabelVector apply_rule(std::span<const std::uint64_t> hits, const LabelingRule& rule) {
  rule.validate();
  if (rule.kind == RuleKind::metadata) {
    throw Error("invalid_rule", "metadata rules label from metadata, not query hits");
  }
  const auto K = static_cast<std::uint64_t>(rule.K);
  std::vector<std::int8_t> values(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i] >= K) {
      values[i] = 1;
    } else if (rule.kind == RuleKind::hcount_k && hits[i] >= 1) {
      values[i] = 0;
    } else {
      values[i] = -1;
    }
  }
  LabelVector labels(std::move(values));
  labels.require_nondegenerate();
  return labels;
}

LabelVector label_by_predicate(std::span<const DocumentUnit> units, const Corpus& corpus,
                               const std::function<bool(const DocumentUnit&, const Document&)>& pred) {
  std::vector<std::int8_t> values(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    values[i] = pred(units[i], corpus.document(units[i].parent_index)) ? 1 : -1;
  }
  LabelVector labels(std::move(values));
  labels.require_nondegenerate();
  return labels;
}

LabelVector label_by_metadata(std::span<const DocumentUnit> units, const Corpus& corpus,
                              const MetadataPredicate& predicate) {
  return label_by_predicate(units, corpus, [&](const DocumentUnit&, const Document& doc) {
    return predicate.matches(doc);
  });
}

std::vector<std::string> strip_tokens(const QuerySet& query) {
  std::vector<std::string> out;
  auto add_term = [&](const std::string& term) {
    const auto tokens = tokenize(term);
    const bool has_content = std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) {
      return !is_default_stopword(t);
    });
    for (const auto& t : tokens) {
      if (has_content && is_default_stopword(t)) continue;
      if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
  };
  for (const auto& t : query.terms) add_term(t);
  for (const auto& t : query.ban_list) add_term(t);
  return out;
}

StrippedMatrix strip_query_columns(const CountMatrix& counts, const PhraseVocabulary& vocab,
                                   const QuerySet& query, StripMode mode) {
  std::unordered_set<std::string> exact(query.terms.begin(), query.terms.end());
  exact.insert(query.ban_list.begin(), query.ban_list.end());
  std::unordered_set<std::string> tokens;
  if (mode == StripMode::containment) {
    for (auto& t : strip_tokens(query)) tokens.insert(std::move(t));
  }

  StrippedMatrix out;
  for (std::size_t j = 0; j < vocab.size(); ++j) {
    const std::string& phrase = vocab.phrase(j);
    bool remove = exact.count(phrase) > 0;
    if (!remove && !tokens.empty()) {
      std::istringstream words(phrase);
      std::string w;
      while (!remove && words >> w) remove = tokens.count(w) > 0;
    }
    (remove ? out.removed_columns : out.kept_columns).push_back(j);
  }
  if (out.kept_columns.empty()) {
    throw Error("empty_vocabulary", "every phrase was removed by the query and ban lists");
  }
  out.counts = counts.select_columns(out.kept_columns);
  out.vocab = vocab.subset(out.kept_columns);
  return out;
}

}  // namespace cosum
