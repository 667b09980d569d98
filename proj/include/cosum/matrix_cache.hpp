#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "cosum/corpus.hpp"
#include "cosum/vocabulary.hpp"

namespace cosum {

struct BuiltMatrix {
  PhraseVocabulary vocab;
  CountMatrix counts;
  bool cache_hit = false;
};

// Content hash of the unit texts plus the vocabulary parameters.
std::string matrix_cache_key(std::span<const DocumentUnit> units, const VocabularyParams& params);

// Little-endian binary dump; load(save(x)) reproduces x exactly.
void save_matrix(const std::filesystem::path& path, const PhraseVocabulary& vocab,
                 const CountMatrix& counts);
BuiltMatrix load_matrix(const std::filesystem::path& path);

BuiltMatrix build_matrix(std::span<const DocumentUnit> units, const VocabularyParams& params);

// Directory of <key>.bin files. An empty directory path disables caching.
class MatrixCache {
 public:
  explicit MatrixCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  BuiltMatrix get_or_build(std::span<const DocumentUnit> units,
                           const VocabularyParams& params) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace cosum
