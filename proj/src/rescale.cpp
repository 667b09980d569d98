#include "cosum/rescale.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "cosum/error.hpp"

namespace cosum {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::stopword: return "stopword";
    case Scheme::l2: return "l2";
    case Scheme::tfidf: return "tfidf";
    case Scheme::raw: return "raw";
  }
  return "raw";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "stopword") return Scheme::stopword;
  if (text == "l2") return Scheme::l2;
  if (text == "tfidf") return Scheme::tfidf;
  if (text == "raw") return Scheme::raw;
  throw Error("invalid_argument", "unknown scheme '" + std::string(text) + "'");
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> col_ptr,
                             std::vector<std::uint32_t> row_idx, std::vector<double> values,
                             Scheme scheme, std::vector<std::size_t> column_map)
    : rows_(rows), cols_(cols), col_ptr_(std::move(col_ptr)), row_idx_(std::move(row_idx)),
      values_(std::move(values)), scheme_(scheme), column_map_(std::move(column_map)) {
  if (col_ptr_.size() != cols_ + 1 || col_ptr_.back() != values_.size() ||
      row_idx_.size() != values_.size() || column_map_.size() != cols_) {
    throw Error("invalid_argument", "inconsistent feature matrix layout");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error("non_finite", "feature matrix contains NaN or Inf");
  }
  for (std::size_t k : row_idx_) {
    if (k >= rows_) throw Error("invalid_argument", "feature row index out of range");
  }
}

FeatureMatrix FeatureMatrix::from_dense(const std::vector<std::vector<double>>& dense,
                                        Scheme scheme) {
  const std::size_t n = dense.size();
  const std::size_t p = n ? dense.front().size() : 0;
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (dense[i].size() != p) throw Error("invalid_argument", "ragged dense matrix");
      if (dense[i][j] != 0.0) {
        idx.push_back(static_cast<std::uint32_t>(i));
        val.push_back(dense[i][j]);
      }
    }
    ptr.push_back(val.size());
  }
  std::vector<std::size_t> map(p);
  for (std::size_t j = 0; j < p; ++j) map[j] = j;
  return FeatureMatrix(n, p, std::move(ptr), std::move(idx), std::move(val), scheme,
                       std::move(map));
}

std::span<const std::uint32_t> FeatureMatrix::column_rows(std::size_t j) const {
  return std::span<const std::uint32_t>(row_idx_).subspan(col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]);
}

std::span<const double> FeatureMatrix::column_values(std::size_t j) const {
  return std::span<const double>(values_).subspan(col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]);
}

double FeatureMatrix::at(std::size_t i, std::size_t j) const {
  const auto rows = column_rows(j);
  auto it = std::lower_bound(rows.begin(), rows.end(), i);
  if (it == rows.end() || *it != i) return 0.0;
  return column_values(j)[static_cast<std::size_t>(it - rows.begin())];
}

FeatureMatrix FeatureMatrix::scale_columns(std::span<const double> factor) const {
  if (factor.size() != cols_) throw Error("invalid_argument", "scale vector size mismatch");
  std::vector<double> val(values_);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) val[k] *= factor[j];
  }
  return FeatureMatrix(rows_, cols_, col_ptr_, row_idx_, std::move(val), scheme_, column_map_);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  constexpr auto kDropped = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> remap(rows_, kDropped);
  bool ordered = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= rows_) throw Error("invalid_argument", "row index out of range");
    remap[rows[k]] = static_cast<std::uint32_t>(k);
    if (k && rows[k] <= rows[k - 1]) ordered = false;
  }
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  std::vector<std::pair<std::uint32_t, double>> scratch;
  for (std::size_t j = 0; j < cols_; ++j) {
    scratch.clear();
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
      const std::uint32_t ni = remap[row_idx_[k]];
      if (ni != kDropped) scratch.emplace_back(ni, values_[k]);
    }
    if (!ordered) std::sort(scratch.begin(), scratch.end());
    for (const auto& [i, v] : scratch) {
      idx.push_back(i);
      val.push_back(v);
    }
    ptr.push_back(val.size());
  }
  return FeatureMatrix(rows.size(), cols_, std::move(ptr), std::move(idx), std::move(val), scheme_,
                       column_map_);
}

namespace {

// Transposes the retained columns of `counts` into compressed-column form,
// mapping each stored count through `value(i, j, c)`. Exact zeros are
// skipped so the pattern never grows.
template <typename ValueFn>
FeatureMatrix to_columns(const CountMatrix& counts, const std::vector<std::size_t>& keep,
                         Scheme scheme, ValueFn value) {
  constexpr auto kDropped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> remap(counts.cols(), kDropped);
  for (std::size_t k = 0; k < keep.size(); ++k) remap[keep[k]] = k;

  std::vector<std::size_t> ptr(keep.size() + 1, 0);
  for (std::uint32_t j : counts.col_idx()) {
    if (remap[j] != kDropped) ++ptr[remap[j] + 1];
  }
  for (std::size_t k = 0; k < keep.size(); ++k) ptr[k + 1] += ptr[k];

  std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
  std::vector<std::uint32_t> idx(ptr.back());
  std::vector<double> val(ptr.back());
  for (std::size_t i = 0; i < counts.rows(); ++i) {
    const auto r = counts.row(i);
    for (std::size_t k = 0; k < r.columns.size(); ++k) {
      const std::size_t nj = remap[r.columns[k]];
      if (nj == kDropped) continue;
      idx[fill[nj]] = static_cast<std::uint32_t>(i);
      val[fill[nj]] = value(i, r.columns[k], r.counts[k]);
      ++fill[nj];
    }
  }

  // Compact away exact zeros.
  std::vector<std::size_t> out_ptr{0};
  std::size_t w = 0;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    for (std::size_t k = ptr[j]; k < ptr[j + 1]; ++k) {
      if (val[k] != 0.0) {
        idx[w] = idx[k];
        val[w] = val[k];
        ++w;
      }
    }
    out_ptr.push_back(w);
  }
  idx.resize(w);
  val.resize(w);
  return FeatureMatrix(counts.rows(), keep.size(), std::move(out_ptr), std::move(idx),
                       std::move(val), scheme, keep);
}

std::vector<std::size_t> all_columns(const CountMatrix& counts) {
  std::vector<std::size_t> keep(counts.cols());
  for (std::size_t j = 0; j < keep.size(); ++j) keep[j] = j;
  return keep;
}

}  // namespace

FeatureMatrix remove_stopwords(const CountMatrix& counts, const PhraseVocabulary& vocab,
                               std::span<const std::string> stoplist) {
  if (stoplist.empty()) throw Error("invalid_argument", "stoplist is empty");
  if (vocab.size() != counts.cols()) throw Error("invalid_argument", "vocabulary/matrix mismatch");
  const std::unordered_set<std::string> stop(stoplist.begin(), stoplist.end());
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < vocab.size(); ++j) {
    std::istringstream words(vocab.phrase(j));
    std::string w;
    bool drop = false;
    while (!drop && words >> w) drop = stop.count(w) > 0;
    if (!drop) keep.push_back(j);
  }
  if (keep.empty()) throw Error("empty_vocabulary", "every phrase contains a stop word");
  return to_columns(counts, keep, Scheme::stopword,
                    [](std::size_t, std::size_t, std::uint32_t c) { return double(c); });
}

FeatureMatrix rescale_l2(const CountMatrix& counts) {
  std::vector<double> norm(counts.cols(), 0.0);
  for (std::size_t j = 0; j < counts.cols(); ++j) {
    const auto z = counts.col_sq_norms()[j];
    if (z > 0) norm[j] = std::sqrt(static_cast<double>(z));
  }
  return to_columns(counts, all_columns(counts), Scheme::l2,
                    [&](std::size_t, std::size_t j, std::uint32_t c) { return c / norm[j]; });
}

FeatureMatrix rescale_tfidf(const CountMatrix& counts) {
  const double n = static_cast<double>(counts.rows());
  std::vector<double> idf(counts.cols(), 0.0);
  for (std::size_t j = 0; j < counts.cols(); ++j) {
    const auto d = counts.col_doc_freq()[j];
    if (d > 0) idf[j] = std::log(n / static_cast<double>(d));
  }
  const auto& q = counts.row_sums();
  return to_columns(counts, all_columns(counts), Scheme::tfidf,
                    [&](std::size_t i, std::size_t j, std::uint32_t c) {
                      return (static_cast<double>(c) / static_cast<double>(q[i])) * idf[j];
                    });
}

FeatureMatrix raw_features(const CountMatrix& counts) {
  return to_columns(counts, all_columns(counts), Scheme::raw,
                    [](std::size_t, std::size_t, std::uint32_t c) { return double(c); });
}

FeatureMatrix build_features(const CountMatrix& counts, const PhraseVocabulary& vocab,
                             Scheme scheme, std::span<const std::string> stoplist) {
  switch (scheme) {
    case Scheme::stopword: return remove_stopwords(counts, vocab, stoplist);
    case Scheme::l2: return rescale_l2(counts);
    case Scheme::tfidf: return rescale_tfidf(counts);
    case Scheme::raw: return raw_features(counts);
  }
  return raw_features(counts);
}

}  // namespace cosum
