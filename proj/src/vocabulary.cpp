#include "cosum/vocabulary.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "cosum/error.hpp"
#include "cosum/tokenize.hpp"

namespace cosum {

std::size_t default_min_df(UnitKind kind) { return kind == UnitKind::paragraph ? 3 : 2; }

PhraseVocabulary::PhraseVocabulary(std::vector<std::string> phrases,
                                   std::vector<std::size_t> doc_freq,
                                   std::vector<std::size_t> total_count, VocabularyParams params)
    : phrases_(std::move(phrases)), doc_freq_(std::move(doc_freq)),
      total_count_(std::move(total_count)), params_(params) {
  if (doc_freq_.size() != phrases_.size() || total_count_.size() != phrases_.size()) {
    throw Error("invalid_argument", "vocabulary statistics do not match phrase count");
  }
  index_.reserve(phrases_.size());
  for (std::size_t j = 0; j < phrases_.size(); ++j) {
    if (!index_.emplace(phrases_[j], j).second) {
      throw Error("invalid_argument", "duplicate phrase '" + phrases_[j] + "'");
    }
  }
}

std::optional<std::size_t> PhraseVocabulary::index_of(std::string_view phrase) const {
  auto it = index_.find(std::string(phrase));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

PhraseVocabulary PhraseVocabulary::subset(std::span<const std::size_t> columns) const {
  std::vector<std::string> phrases;
  std::vector<std::size_t> df, total;
  phrases.reserve(columns.size());
  for (std::size_t j : columns) {
    phrases.push_back(phrases_.at(j));
    df.push_back(doc_freq_[j]);
    total.push_back(total_count_[j]);
  }
  return PhraseVocabulary(std::move(phrases), std::move(df), std::move(total), params_);
}

CountMatrix::CountMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                         std::vector<std::uint32_t> col_idx, std::vector<std::uint32_t> counts)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      counts_(std::move(counts)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != counts_.size() ||
      col_idx_.size() != counts_.size()) {
    throw Error("invalid_argument", "inconsistent sparse matrix layout");
  }
  row_sums_.assign(rows_, 0);
  col_sq_norms_.assign(cols_, 0);
  col_doc_freq_.assign(cols_, 0);
  for (std::size_t i = 0; i < rows_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw Error("invalid_argument", "row pointers decrease");
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::uint32_t j = col_idx_[k];
      const std::uint64_t c = counts_[k];
      if (j >= cols_ || c == 0 || (k > row_ptr_[i] && col_idx_[k - 1] >= j)) {
        throw Error("invalid_argument", "invalid sparse entry in row " + std::to_string(i));
      }
      row_sums_[i] += c;
      col_sq_norms_[j] += c * c;
      ++col_doc_freq_[j];
    }
  }
}

CountMatrix CountMatrix::from_dense(const std::vector<std::vector<std::uint32_t>>& dense) {
  const std::size_t n = dense.size();
  const std::size_t p = n ? dense.front().size() : 0;
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx, val;
  for (const auto& row : dense) {
    if (row.size() != p) throw Error("invalid_argument", "ragged dense matrix");
    for (std::size_t j = 0; j < p; ++j) {
      if (row[j] != 0) {
        idx.push_back(static_cast<std::uint32_t>(j));
        val.push_back(row[j]);
      }
    }
    ptr.push_back(val.size());
  }
  return CountMatrix(n, p, std::move(ptr), std::move(idx), std::move(val));
}

CountMatrix::Row CountMatrix::row(std::size_t i) const {
  const std::size_t b = row_ptr_.at(i);
  const std::size_t e = row_ptr_.at(i + 1);
  return {std::span<const std::uint32_t>(col_idx_).subspan(b, e - b),
          std::span<const std::uint32_t>(counts_).subspan(b, e - b)};
}

std::uint32_t CountMatrix::at(std::size_t i, std::size_t j) const {
  const Row r = row(i);
  auto it = std::lower_bound(r.columns.begin(), r.columns.end(), j);
  if (it == r.columns.end() || *it != j) return 0;
  return r.counts[static_cast<std::size_t>(it - r.columns.begin())];
}

CountMatrix CountMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx, val;
  for (std::size_t i : rows) {
    const Row r = row(i);
    idx.insert(idx.end(), r.columns.begin(), r.columns.end());
    val.insert(val.end(), r.counts.begin(), r.counts.end());
    ptr.push_back(val.size());
  }
  return CountMatrix(rows.size(), cols_, std::move(ptr), std::move(idx), std::move(val));
}

CountMatrix CountMatrix::select_columns(std::span<const std::size_t> columns) const {
  constexpr auto kDropped = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> remap(cols_, kDropped);
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] >= cols_) throw Error("invalid_argument", "column index out of range");
    remap[columns[k]] = static_cast<std::uint32_t>(k);
  }
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx, val;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> scratch;
  for (std::size_t i = 0; i < rows_; ++i) {
    scratch.clear();
    const Row r = row(i);
    for (std::size_t k = 0; k < r.columns.size(); ++k) {
      const std::uint32_t nj = remap[r.columns[k]];
      if (nj != kDropped) scratch.emplace_back(nj, r.counts[k]);
    }
    std::sort(scratch.begin(), scratch.end());
    for (const auto& [j, c] : scratch) {
      idx.push_back(j);
      val.push_back(c);
    }
    ptr.push_back(val.size());
  }
  return CountMatrix(rows_, columns.size(), std::move(ptr), std::move(idx), std::move(val));
}

bool CountMatrix::operator==(const CountMatrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && row_ptr_ == other.row_ptr_ &&
         col_idx_ == other.col_idx_ && counts_ == other.counts_;
}

namespace {

void check_range(const VocabularyParams& params) {
  if (params.ngram.min_n < 1 || params.ngram.min_n > params.ngram.max_n) {
    throw Error("invalid_argument", "n-gram range requires 1 <= min_n <= max_n");
  }
  if (params.min_df < 1) throw Error("invalid_argument", "min_df must be positive");
}

struct NgramStats {
  std::size_t total = 0;
  std::size_t df = 0;
  std::size_t last_unit = static_cast<std::size_t>(-1);
  std::uint32_t first_token = 0;
  std::uint32_t length = 0;
  std::size_t key_offset = 0;
};

// Keys are the raw bytes of the token-id sequence.
std::string ngram_key(const std::vector<std::uint32_t>& ids, std::size_t start, std::size_t n) {
  return std::string(reinterpret_cast<const char*>(ids.data() + start),
                     n * sizeof(std::uint32_t));
}

}  // namespace

PhraseVocabulary build_vocabulary_from_texts(std::span<const std::string> texts,
                                             const VocabularyParams& params) {
  check_range(params);
  if (texts.empty()) throw Error("empty_corpus", "no units to build a vocabulary from");

  std::unordered_map<std::string, std::uint32_t> token_ids;
  std::vector<std::string> token_strings;
  std::unordered_map<std::string, NgramStats> stats;
  std::vector<std::uint32_t> ids;

  for (std::size_t u = 0; u < texts.size(); ++u) {
    ids.clear();
    for (std::string& tok : tokenize(texts[u])) {
      auto [it, inserted] =
          token_ids.emplace(std::move(tok), static_cast<std::uint32_t>(token_strings.size()));
      if (inserted) token_strings.push_back(it->first);
      ids.push_back(it->second);
    }
    for (std::size_t s = 0; s < ids.size(); ++s) {
      for (std::size_t n = params.ngram.min_n; n <= params.ngram.max_n && s + n <= ids.size();
           ++n) {
        NgramStats& st = stats[ngram_key(ids, s, n)];
        ++st.total;
        if (st.last_unit != u) {
          st.last_unit = u;
          ++st.df;
        }
      }
    }
  }

  struct Entry {
    std::string phrase;
    std::size_t df;
    std::size_t total;
  };
  std::vector<Entry> kept;
  for (const auto& [key, st] : stats) {
    if (st.df < params.min_df) continue;
    const std::size_t n = key.size() / sizeof(std::uint32_t);
    std::string phrase;
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t id;
      std::memcpy(&id, key.data() + k * sizeof(std::uint32_t), sizeof id);
      if (k) phrase.push_back(' ');
      phrase += token_strings[id];
    }
    kept.push_back({std::move(phrase), st.df, st.total});
  }
  if (kept.empty()) {
    throw Error("empty_vocabulary", "empty vocabulary: no phrase appears in at least " +
                                        std::to_string(params.min_df) + " units");
  }
  std::sort(kept.begin(), kept.end(), [](const Entry& a, const Entry& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.phrase < b.phrase;
  });

  std::vector<std::string> phrases;
  std::vector<std::size_t> df, total;
  phrases.reserve(kept.size());
  for (Entry& e : kept) {
    phrases.push_back(std::move(e.phrase));
    df.push_back(e.df);
    total.push_back(e.total);
  }
  return PhraseVocabulary(std::move(phrases), std::move(df), std::move(total), params);
}

namespace {
std::vector<std::string> unit_texts(std::span<const DocumentUnit> units) {
  std::vector<std::string> texts;
  texts.reserve(units.size());
  for (const DocumentUnit& u : units) texts.push_back(u.text);
  return texts;
}
}  // namespace

PhraseVocabulary build_vocabulary(std::span<const DocumentUnit> units,
                                  const VocabularyParams& params) {
  return build_vocabulary_from_texts(unit_texts(units), params);
}

CountMatrix build_count_matrix_from_texts(std::span<const std::string> texts,
                                          const PhraseVocabulary& vocab) {
  const NgramRange range = vocab.params().ngram;
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx, val;
  std::vector<std::uint32_t> hits;
  std::string phrase;

  for (const std::string& text : texts) {
    const auto tokens = tokenize(text);
    hits.clear();
    for (std::size_t s = 0; s < tokens.size(); ++s) {
      phrase.clear();
      for (std::size_t n = 1; n <= range.max_n && s + n <= tokens.size(); ++n) {
        if (n > 1) phrase.push_back(' ');
        phrase += tokens[s + n - 1];
        if (n < range.min_n) continue;
        if (auto j = vocab.index_of(phrase)) hits.push_back(static_cast<std::uint32_t>(*j));
      }
    }
    std::sort(hits.begin(), hits.end());
    for (std::size_t k = 0; k < hits.size();) {
      std::size_t e = k;
      while (e < hits.size() && hits[e] == hits[k]) ++e;
      idx.push_back(hits[k]);
      val.push_back(static_cast<std::uint32_t>(e - k));
      k = e;
    }
    ptr.push_back(val.size());
  }
  return CountMatrix(texts.size(), vocab.size(), std::move(ptr), std::move(idx), std::move(val));
}

CountMatrix build_count_matrix(std::span<const DocumentUnit> units, const PhraseVocabulary& vocab) {
  return build_count_matrix_from_texts(unit_texts(units), vocab);
}

}  // namespace cosum
