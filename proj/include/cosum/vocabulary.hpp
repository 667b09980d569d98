#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cosum/corpus.hpp"

namespace cosum {

struct NgramRange {
  std::size_t min_n = 1;
  std::size_t max_n = 3;
  bool operator==(const NgramRange&) const = default;
};

struct VocabularyParams {
  NgramRange ngram;
  std::size_t min_df = 2;
  bool operator==(const VocabularyParams&) const = default;
};

// Default document-frequency floor for a unit grain: 3 for paragraphs, 2 otherwise.
std::size_t default_min_df(UnitKind kind);

// Phrases are token sequences joined by single spaces. Column j of every
// matrix built against this vocabulary is phrases[j].
class PhraseVocabulary {
 public:
  PhraseVocabulary() = default;
  PhraseVocabulary(std::vector<std::string> phrases, std::vector<std::size_t> doc_freq,
                   std::vector<std::size_t> total_count, VocabularyParams params);

  std::size_t size() const { return phrases_.size(); }
  const std::string& phrase(std::size_t j) const { return phrases_.at(j); }
  const std::vector<std::string>& phrases() const { return phrases_; }
  std::optional<std::size_t> index_of(std::string_view phrase) const;
  const std::vector<std::size_t>& doc_freq() const { return doc_freq_; }
  const std::vector<std::size_t>& total_count() const { return total_count_; }
  const VocabularyParams& params() const { return params_; }

  // Vocabulary restricted to `columns` (old indices, in the given order).
  PhraseVocabulary subset(std::span<const std::size_t> columns) const;

 private:
  std::vector<std::string> phrases_;
  std::vector<std::size_t> doc_freq_;
  std::vector<std::size_t> total_count_;
  VocabularyParams params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Sparse n x p matrix of positive integer counts in compressed-row form.
class CountMatrix {
 public:
  struct Row {
    std::span<const std::uint32_t> columns;
    std::span<const std::uint32_t> counts;
  };

  CountMatrix() = default;
  // Column indices within each row must be strictly increasing; counts >= 1.
  CountMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
              std::vector<std::uint32_t> col_idx, std::vector<std::uint32_t> counts);
  static CountMatrix from_dense(const std::vector<std::vector<std::uint32_t>>& dense);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return counts_.size(); }
  Row row(std::size_t i) const;
  std::uint32_t at(std::size_t i, std::size_t j) const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }

  // q_i = sum_j c_ij
  const std::vector<std::uint64_t>& row_sums() const { return row_sums_; }
  // z_j = sum_i c_ij^2
  const std::vector<std::uint64_t>& col_sq_norms() const { return col_sq_norms_; }
  // d_j = #{i : c_ij > 0}
  const std::vector<std::size_t>& col_doc_freq() const { return col_doc_freq_; }

  CountMatrix select_rows(std::span<const std::size_t> rows) const;
  // Keeps the listed columns (old indices) in the listed order.
  CountMatrix select_columns(std::span<const std::size_t> columns) const;

  bool operator==(const CountMatrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint64_t> row_sums_;
  std::vector<std::uint64_t> col_sq_norms_;
  std::vector<std::size_t> col_doc_freq_;
};

// Every contiguous n-gram (min_n <= n <= max_n) found in at least min_df
// units. Columns ordered by descending total count, then lexicographically.
PhraseVocabulary build_vocabulary(std::span<const DocumentUnit> units,
                                  const VocabularyParams& params);
PhraseVocabulary build_vocabulary_from_texts(std::span<const std::string> texts,
                                             const VocabularyParams& params);

// c_ij counts overlapping occurrences of phrase j in unit i.
CountMatrix build_count_matrix(std::span<const DocumentUnit> units, const PhraseVocabulary& vocab);
CountMatrix build_count_matrix_from_texts(std::span<const std::string> texts,
                                          const PhraseVocabulary& vocab);

}  // namespace cosum
