#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cosum/vocabulary.hpp"

namespace cosum {

// raw keeps X = C; it is not one of the configured schemes but serves as the
// unweighted baseline.
enum class Scheme { stopword, l2, tfidf, raw };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

// Real-valued n x p matrix in compressed-column form. column_map[j] is the
// vocabulary column that feature column j was derived from.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> col_ptr,
                std::vector<std::uint32_t> row_idx, std::vector<double> values, Scheme scheme,
                std::vector<std::size_t> column_map);
  // Test helper; zeros are not stored.
  static FeatureMatrix from_dense(const std::vector<std::vector<double>>& dense,
                                  Scheme scheme = Scheme::raw);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  Scheme scheme() const { return scheme_; }

  std::span<const std::uint32_t> column_rows(std::size_t j) const;
  std::span<const double> column_values(std::size_t j) const;
  double at(std::size_t i, std::size_t j) const;

  const std::vector<std::size_t>& col_ptr() const { return col_ptr_; }
  const std::vector<std::uint32_t>& row_idx() const { return row_idx_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::size_t>& column_map() const { return column_map_; }

  // Scales column j by factor[j].
  FeatureMatrix scale_columns(std::span<const double> factor) const;
  // Keeps the listed rows, renumbered 0..rows.size()-1 in the listed order.
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::uint32_t> row_idx_;
  std::vector<double> values_;
  Scheme scheme_ = Scheme::raw;
  std::vector<std::size_t> column_map_;
};

// Drops every column whose phrase has a stoplist token; other columns keep
// raw counts. Throws Error{"empty_vocabulary"} if nothing is left.
FeatureMatrix remove_stopwords(const CountMatrix& counts, const PhraseVocabulary& vocab,
                               std::span<const std::string> stoplist);

// x_ij = c_ij / sqrt(z_j); all-zero columns stay zero.
FeatureMatrix rescale_l2(const CountMatrix& counts);

// x_ij = (c_ij / q_i) * ln(n / d_j); columns present in every row vanish.
FeatureMatrix rescale_tfidf(const CountMatrix& counts);

FeatureMatrix raw_features(const CountMatrix& counts);

// Dispatches on scheme; `stoplist` is consulted only for Scheme::stopword.
FeatureMatrix build_features(const CountMatrix& counts, const PhraseVocabulary& vocab,
                             Scheme scheme, std::span<const std::string> stoplist);

}  // namespace cosum
