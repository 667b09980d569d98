#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include <doctest.h>

#include "cosum/error.hpp"
#include "cosum/matrix_cache.hpp"
#include "cosum/tokenize.hpp"
#include "cosum/vocabulary.hpp"
#include "support.hpp"

using namespace cosum;

namespace {

std::vector<std::string> random_texts(std::mt19937_64& rng, std::size_t n) {
  static const char* words[] = {"oil", "Gas", "price", "spill", "the", "of", "crude", "a"};
  std::uniform_int_distribution<int> len(0, 25), w(0, 7);
  std::vector<std::string> texts(n);
  for (auto& t : texts) {
    const int l = len(rng);
    for (int k = 0; k < l; ++k) t += std::string(words[w(rng)]) + (k % 5 == 4 ? ". " : " ");
  }
  return texts;
}

// Direct enumeration of every n-gram of every text.
struct BruteForce {
  std::map<std::string, std::size_t> df, total;
  std::vector<std::map<std::string, std::uint32_t>> rows;
};

BruteForce brute_force(const std::vector<std::string>& texts, NgramRange range) {
  BruteForce b;
  for (const auto& text : texts) {
    const auto toks = tokenize(text);
    std::map<std::string, std::uint32_t> row;
    for (std::size_t n = range.min_n; n <= range.max_n; ++n) {
      for (std::size_t s = 0; s + n <= toks.size(); ++s) ++row[join_tokens(toks, s, n)];
    }
    for (const auto& [phrase, c] : row) {
      ++b.df[phrase];
      b.total[phrase] += c;
    }
    b.rows.push_back(std::move(row));
  }
  return b;
}

}  // namespace

TEST_CASE("vocabulary and counts match brute-force enumeration") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto texts = random_texts(rng, 1 + rng() % 40);
    VocabularyParams params;
    params.ngram.min_n = 1 + rng() % 2;
    params.ngram.max_n = params.ngram.min_n + rng() % 3;
    params.min_df = 1 + rng() % 3;
    const auto bf = brute_force(texts, params.ngram);
    const PhraseVocabulary vocab = build_vocabulary_from_texts(texts, params);

    std::set<std::string> expected;
    for (const auto& [phrase, d] : bf.df) {
      if (d >= params.min_df) expected.insert(phrase);
    }
    CHECK(std::set<std::string>(vocab.phrases().begin(), vocab.phrases().end()) == expected);
    for (std::size_t j = 0; j < vocab.size(); ++j) {
      CHECK(vocab.doc_freq()[j] == bf.df.at(vocab.phrase(j)));
      CHECK(vocab.total_count()[j] == bf.total.at(vocab.phrase(j)));
      CHECK(vocab.index_of(vocab.phrase(j)) == std::optional<std::size_t>(j));
      if (j > 0) {
        const bool ordered = vocab.total_count()[j - 1] > vocab.total_count()[j] ||
                             (vocab.total_count()[j - 1] == vocab.total_count()[j] &&
                              vocab.phrase(j - 1) < vocab.phrase(j));
        CHECK(ordered);
      }
    }

    const CountMatrix c = build_count_matrix_from_texts(texts, vocab);
    REQUIRE(c.rows() == texts.size());
    REQUIRE(c.cols() == vocab.size());
    for (std::size_t i = 0; i < c.rows(); ++i) {
      for (std::size_t j = 0; j < c.cols(); ++j) {
        const auto it = bf.rows[i].find(vocab.phrase(j));
        CHECK(c.at(i, j) == (it == bf.rows[i].end() ? 0u : it->second));
      }
    }
    for (std::size_t j = 0; j < c.cols(); ++j) CHECK(c.col_doc_freq()[j] == vocab.doc_freq()[j]);
  }
}

TEST_CASE("overlapping occurrences are all counted") {
  const std::vector<std::string> texts{"a a a a", "a a"};
  VocabularyParams params{{2, 2}, 1};
  const auto vocab = build_vocabulary_from_texts(texts, params);
  const auto c = build_count_matrix_from_texts(texts, vocab);
  REQUIRE(vocab.size() == 1);
  CHECK(c.at(0, 0) == 3);
  CHECK(c.at(1, 0) == 1);
}

TEST_CASE("count matrix summaries and selections") {
  std::mt19937_64 rng(5);
  const CountMatrix c = testing_support::random_counts(rng, 30, 20, 0.2);
  const auto d = testing_support::dense_counts(c);
  for (std::size_t j = 0; j < c.cols(); ++j) {
    std::uint64_t z = 0;
    std::size_t df = 0;
    for (std::size_t i = 0; i < c.rows(); ++i) {
      z += static_cast<std::uint64_t>(d[i][j] * d[i][j]);
      df += d[i][j] > 0;
    }
    CHECK(c.col_sq_norms()[j] == z);
    CHECK(c.col_doc_freq()[j] == df);
  }
  for (std::size_t i = 0; i < c.rows(); ++i) {
    double q = 0;
    for (double v : d[i]) q += v;
    CHECK(c.row_sums()[i] == static_cast<std::uint64_t>(q));
  }
  const std::vector<std::size_t> rows{4, 0, 7};
  const auto r = c.select_rows(rows);
  const std::vector<std::size_t> cols{3, 1};
  const auto s = c.select_columns(cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t j = 0; j < c.cols(); ++j) CHECK(r.at(k, j) == c.at(rows[k], j));
  }
  for (std::size_t i = 0; i < c.rows(); ++i) {
    CHECK(s.at(i, 0) == c.at(i, 3));
    CHECK(s.at(i, 1) == c.at(i, 1));
  }
  std::vector<std::vector<std::uint32_t>> dd(c.rows());
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (double v : d[i]) dd[i].push_back(static_cast<std::uint32_t>(v));
  }
  CHECK(CountMatrix::from_dense(dd) == c);
}

TEST_CASE("count matrix rejects malformed input") {
  CHECK_THROWS(CountMatrix(1, 3, {0, 2}, {2, 1}, {1, 1}));
  CHECK_THROWS(CountMatrix(1, 3, {0, 1}, {0}, {0}));
  CHECK_THROWS(CountMatrix(1, 3, {0, 1}, {5}, {1}));
}

TEST_CASE("vocabulary subset keeps statistics") {
  const auto vocab = build_vocabulary_from_texts(std::vector<std::string>{"x y z", "x y"},
                                                 VocabularyParams{{1, 2}, 1});
  const std::vector<std::size_t> keep{*vocab.index_of("x y"), *vocab.index_of("z")};
  const auto sub = vocab.subset(keep);
  REQUIRE(sub.size() == 2);
  CHECK(sub.phrase(0) == "x y");
  CHECK(sub.doc_freq()[0] == 2);
  CHECK(sub.phrase(1) == "z");
  CHECK(default_min_df(UnitKind::paragraph) == 3);
  CHECK(default_min_df(UnitKind::article) == 2);
}

TEST_CASE("matrix cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cosum-cache-test-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::vector<Document> docs(3);
  docs[0] = {"a", "s", std::nullopt, std::nullopt, "oil price rises again", {}};
  docs[1] = {"b", "s", std::nullopt, std::nullopt, "oil price falls", {}};
  docs[2] = {"c", "s", std::nullopt, std::nullopt, "gas price rises", {}};
  const Corpus corpus("c", docs);
  const auto units = segment(corpus, UnitKind::article);
  const VocabularyParams params{{1, 2}, 1};

  save_matrix(dir / "direct.bin", build_vocabulary(units, params),
              build_count_matrix(units, build_vocabulary(units, params)));
  const BuiltMatrix loaded = load_matrix(dir / "direct.bin");
  const BuiltMatrix fresh = build_matrix(units, params);
  CHECK(loaded.counts == fresh.counts);
  CHECK(loaded.vocab.phrases() == fresh.vocab.phrases());
  CHECK(loaded.vocab.doc_freq() == fresh.vocab.doc_freq());
  CHECK(loaded.vocab.params() == params);

  const MatrixCache cache(dir / "cache");
  const BuiltMatrix first = cache.get_or_build(units, params);
  const BuiltMatrix second = cache.get_or_build(units, params);
  CHECK_FALSE(first.cache_hit);
  CHECK(second.cache_hit);
  CHECK(second.counts == first.counts);
  CHECK(matrix_cache_key(units, params) != matrix_cache_key(units, VocabularyParams{{1, 3}, 1}));

  std::filesystem::resize_file(dir / "direct.bin", 10);
  CHECK_THROWS_AS(load_matrix(dir / "direct.bin"), Error);
  std::filesystem::remove_all(dir);
}
