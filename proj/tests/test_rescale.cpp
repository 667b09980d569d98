#include <cmath>

#include <doctest.h>

#include "cosum/error.hpp"
#include "cosum/rescale.hpp"
#include "support.hpp"

using namespace cosum;
using testing_support::dense_counts;
using testing_support::dense_features;

TEST_CASE("l2 rescaling against a dense oracle") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const CountMatrix c = testing_support::random_counts(rng, 5 + rng() % 60, 1 + rng() % 40, 0.1);
    const auto d = dense_counts(c);
    const auto x = dense_features(rescale_l2(c));
    for (std::size_t j = 0; j < c.cols(); ++j) {
      double z = 0.0;
      for (const auto& row : d) z += row[j] * row[j];
      double norm = 0.0;
      for (std::size_t i = 0; i < c.rows(); ++i) {
        const double expected = z > 0 ? d[i][j] / std::sqrt(z) : 0.0;
        CHECK(x[i][j] == doctest::Approx(expected).epsilon(1e-14));
        norm += x[i][j] * x[i][j];
      }
      if (z > 0) CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("tf-idf against a dense oracle") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 5 + rng() % 60;
    const CountMatrix c = testing_support::random_counts(rng, n, 1 + rng() % 40, 0.3);
    const auto d = dense_counts(c);
    const auto x = dense_features(rescale_tfidf(c));
    for (std::size_t j = 0; j < c.cols(); ++j) {
      double df = 0;
      for (const auto& row : d) df += row[j] > 0;
      for (std::size_t i = 0; i < n; ++i) {
        double q = 0;
        for (double v : d[i]) q += v;
        const double expected = q > 0 && df > 0 ? d[i][j] / q * std::log(n / df) : 0.0;
        CHECK(x[i][j] == doctest::Approx(expected).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("tf-idf drops columns present everywhere") {
  const CountMatrix c = CountMatrix::from_dense({{1, 2}, {3, 0}});
  const FeatureMatrix x = rescale_tfidf(c);
  CHECK(x.column_values(0).empty());
  CHECK(x.at(0, 1) == doctest::Approx(2.0 / 3.0 * std::log(2.0)));
}

TEST_CASE("stop word removal keeps raw counts of the remaining columns") {
  const auto vocab = testing_support::vocab_from({"the oil", "oil", "of", "spill rate"});
  const CountMatrix c = CountMatrix::from_dense({{1, 2, 3, 4}, {0, 1, 0, 0}});
  const std::vector<std::string> stop{"the", "of"};
  const FeatureMatrix x = remove_stopwords(c, vocab, stop);
  CHECK(x.cols() == 2);
  CHECK(x.column_map() == std::vector<std::size_t>{1, 3});
  CHECK(x.at(0, 0) == 2.0);
  CHECK(x.at(0, 1) == 4.0);
  CHECK(x.scheme() == Scheme::stopword);
  const std::vector<std::string> all{"the", "oil", "of", "spill"};
  CHECK_THROWS_AS(remove_stopwords(c, vocab, all), Error);
}

TEST_CASE("feature matrix helpers") {
  const FeatureMatrix x = FeatureMatrix::from_dense({{1, 0}, {0, 2}, {3, 4}});
  CHECK(x.nnz() == 4);
  const std::vector<double> f{2.0, 0.5};
  const FeatureMatrix s = x.scale_columns(f);
  CHECK(s.at(2, 0) == 6.0);
  CHECK(s.at(2, 1) == 2.0);
  const std::vector<std::size_t> rows{2, 0};
  const FeatureMatrix r = x.select_rows(rows);
  CHECK(r.rows() == 2);
  CHECK(r.at(0, 1) == 4.0);
  CHECK(r.at(1, 0) == 1.0);
  CHECK(r.at(1, 1) == 0.0);
  CHECK(parse_scheme("tfidf") == Scheme::tfidf);
  CHECK(to_string(Scheme::l2) == "l2");
  CHECK_THROWS_AS(parse_scheme("bm25"), Error);
}

TEST_CASE("build_features dispatches on scheme") {
  std::mt19937_64 rng(3);
  const CountMatrix c = testing_support::random_counts(rng, 20, 8, 0.3);
  std::vector<std::string> phrases;
  for (int j = 0; j < 8; ++j) phrases.push_back("w" + std::to_string(j));
  const auto vocab = testing_support::vocab_from(phrases);
  const std::vector<std::string> stop{"w1"};
  CHECK(dense_features(build_features(c, vocab, Scheme::l2, stop)) == dense_features(rescale_l2(c)));
  CHECK(dense_features(build_features(c, vocab, Scheme::raw, stop)) == dense_counts(c));
  CHECK(build_features(c, vocab, Scheme::stopword, stop).cols() == 7);
}
