#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cosum/rescale.hpp"
#include "cosum/vocabulary.hpp"

namespace testing_support {

using Dense = std::vector<std::vector<double>>;

// Random sparse counts; each cell is nonzero with probability `density`,
// nonzero values uniform in 1..max_count.
inline cosum::CountMatrix random_counts(std::mt19937_64& rng, std::size_t n, std::size_t p,
                                        double density, std::uint32_t max_count = 5) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> cols, vals;
  std::geometric_distribution<std::size_t> skip(density);
  std::uniform_int_distribution<std::uint32_t> value(1, max_count);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = skip(rng); j < p; j += 1 + skip(rng)) {
      cols.push_back(static_cast<std::uint32_t>(j));
      vals.push_back(value(rng));
    }
    row_ptr.push_back(cols.size());
  }
  return cosum::CountMatrix(n, p, std::move(row_ptr), std::move(cols), std::move(vals));
}

inline Dense dense_counts(const cosum::CountMatrix& c) {
  Dense d(c.rows(), std::vector<double>(c.cols(), 0.0));
  for (std::size_t i = 0; i < c.rows(); ++i) {
    const auto r = c.row(i);
    for (std::size_t k = 0; k < r.columns.size(); ++k) d[i][r.columns[k]] = r.counts[k];
  }
  return d;
}

inline Dense dense_features(const cosum::FeatureMatrix& x) {
  Dense d(x.rows(), std::vector<double>(x.cols(), 0.0));
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto rows = x.column_rows(j);
    const auto vals = x.column_values(j);
    for (std::size_t k = 0; k < rows.size(); ++k) d[rows[k]][j] = vals[k];
  }
  return d;
}

// Labels in {-1, +1} with both classes present.
inline std::vector<double> random_labels(std::mt19937_64& rng, std::size_t n, double pos_rate) {
  std::bernoulli_distribution pos(pos_rate);
  std::vector<double> y(n);
  for (auto& v : y) v = pos(rng) ? 1.0 : -1.0;
  y[0] = 1.0;
  y[n - 1] = -1.0;
  return y;
}

// Gaussian elimination with partial pivoting in long double.
inline std::vector<double> solve_linear(std::vector<std::vector<long double>> a,
                                        std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0) throw std::runtime_error("singular system");
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double f = a[r][c] / a[c][c];
      if (f == 0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    long double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
    x[c] = static_cast<double>(s / a[c][c]);
  }
  return x;
}

// Least squares with an intercept: returns {gamma, beta_1..beta_p}.
inline std::vector<double> least_squares_with_intercept(const Dense& x, const std::vector<double>& y) {
  const std::size_t n = x.size(), p = x.empty() ? 0 : x[0].size();
  std::vector<std::vector<long double>> a(p + 1, std::vector<long double>(p + 1, 0));
  std::vector<long double> b(p + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> row(p + 1);
    row[0] = 1;
    for (std::size_t j = 0; j < p; ++j) row[j + 1] = x[i][j];
    for (std::size_t r = 0; r <= p; ++r) {
      b[r] += row[r] * y[i];
      for (std::size_t c = 0; c <= p; ++c) a[r][c] += row[r] * row[c];
    }
  }
  return solve_linear(std::move(a), std::move(b));
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Phrase list drawn from a small alphabet so sub-phrase relations are common.
inline std::vector<std::string> random_phrases(std::mt19937_64& rng, std::size_t p) {
  static const char* words[] = {"oil", "gas", "price", "spill", "crude", "united", "states", "energy"};
  std::uniform_int_distribution<int> len(1, 3), w(0, 7);
  std::vector<std::string> out;
  std::vector<std::string> seen;
  while (out.size() < p) {
    std::string s;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      if (k) s += ' ';
      s += words[w(rng)];
    }
    // Suffix keeps phrases unique without breaking token containment.
    if (std::find(seen.begin(), seen.end(), s) != seen.end()) {
      s += " t" + std::to_string(out.size());
    }
    seen.push_back(s);
    out.push_back(s);
  }
  return out;
}

inline cosum::PhraseVocabulary vocab_from(const std::vector<std::string>& phrases) {
  std::vector<std::size_t> ones(phrases.size(), 1);
  return cosum::PhraseVocabulary(phrases, ones, ones, {});
}

}  // namespace testing_support
