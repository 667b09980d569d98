#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <doctest.h>

#include "cosum/error.hpp"
#include "cosum/pipeline.hpp"
#include "cosum/synthetic.hpp"
#include "cosum/tokenize.hpp"

using namespace cosum;

namespace {

TimePoint day(const char* text) { return *parse_iso8601(text); }

SyntheticParams small_params(std::uint64_t seed) {
  SyntheticParams p;
  p.n_units = 400;
  p.vocab_size = 600;
  p.n_planted = 5;
  p.planted_rate_pos = 0.02;
  p.background_rate = 0.001;
  p.unit_length = 80;
  p.seed = seed;
  return p;
}

AnalysisConfig query_config(std::size_t k = 10) {
  AnalysisConfig c;
  c.query = QuerySet::make("topic", {"qtopic"});
  c.vocab = VocabularyParams{{1, 2}, 2};
  c.selector.k = k;
  return c;
}

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

Corpus merge(const std::string& name, const std::vector<const Corpus*>& parts) {
  std::vector<Document> docs;
  for (const Corpus* c : parts) docs.insert(docs.end(), c->documents().begin(), c->documents().end());
  return Corpus(name, std::move(docs));
}

std::set<std::string> phrase_set(const Summary& s) {
  const auto list = s.phrase_list();
  return {list.begin(), list.end()};
}

bool contains_token(const std::set<std::string>& phrases, const std::string& token) {
  return std::any_of(phrases.begin(), phrases.end(), [&](const std::string& p) {
    const auto toks = tokenize(p);
    return std::find(toks.begin(), toks.end(), token) != toks.end();
  });
}

}  // namespace

TEST_CASE("synthetic corpora are deterministic and carry their truth") {
  const auto a = synthetic_corpus(small_params(9));
  const auto b = synthetic_corpus(small_params(9));
  const auto c = synthetic_corpus(small_params(10));
  CHECK(a.corpus.content_hash() == b.corpus.content_hash());
  CHECK(a.corpus.content_hash() != c.corpus.content_hash());
  CHECK(a.truth.planted.size() == 5);
  const std::set<std::string> positives(a.truth.positive_ids.begin(), a.truth.positive_ids.end());
  for (const auto& doc : a.corpus.documents()) {
    const auto toks = tokenize(doc.body);
    const bool has_query = std::find(toks.begin(), toks.end(), "qtopic") != toks.end();
    CHECK(has_query == positives.contains(doc.id));
    CHECK(doc.published_at.has_value());
  }
  CHECK(synthetic_word(0) != synthetic_word(1));
  SyntheticParams bad = small_params(1);
  bad.planted_rate_pos = 1.5;
  CHECK(error_code([&] { synthetic_corpus(bad); }) == "invalid_argument");
  bad = small_params(1);
  bad.n_planted = bad.vocab_size;
  CHECK(error_code([&] { synthetic_corpus(bad); }) == "invalid_argument");
}

TEST_CASE("planted tokens are recovered and the query token is stripped") {
  const auto sc = synthetic_corpus(small_params(3));
  const Summary s = run_summary(sc.corpus, query_config());
  const auto phrases = phrase_set(s);
  CHECK_FALSE(contains_token(phrases, "qtopic"));
  std::size_t found = 0;
  for (const auto& t : sc.truth.planted) found += contains_token(phrases, t);
  CHECK(found == sc.truth.planted.size());
  CHECK(s.topic == "topic");
  CHECK(s.rule == "count:1");
  CHECK(s.unit == "article");
  CHECK(s.n_pos == sc.truth.positive_ids.size());
}

TEST_CASE("a single all-covering window equals a direct run") {
  const auto sc = synthetic_corpus(small_params(4));
  const AnalysisConfig cfg = query_config();
  SnapshotSpec spec{cfg, {{"all", day("2000-01-01"), day("2100-01-01")}}};
  const auto series = snapshot_series(sc.corpus, spec);
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].summary);
  const Summary direct = run_summary(sc.corpus, cfg);
  REQUIRE(series[0].summary->phrases.size() == direct.phrases.size());
  for (std::size_t a = 0; a < direct.phrases.size(); ++a) {
    CHECK(series[0].summary->phrases[a].phrase == direct.phrases[a].phrase);
    CHECK(series[0].summary->phrases[a].score == direct.phrases[a].score);
  }
  CHECK(series[0].stats.total_units == sc.corpus.size());
  CHECK(series[0].stats.positive_units == sc.truth.positive_ids.size());
}

TEST_CASE("a planted phrase that changes at a known date shows up per window") {
  SyntheticParams first = small_params(5);
  first.planted_names = {"alpha"};
  first.n_planted = 1;
  first.planted_rate_pos = 0.05;
  first.id_prefix = "early";
  SyntheticParams second = first;
  second.planted_names = {"beta"};
  second.id_prefix = "late";
  second.seed = 6;
  second.start = day("2021-01-01");
  const auto a = synthetic_corpus(first);
  const auto b = synthetic_corpus(second);
  const Corpus corpus = merge("swap", {&a.corpus, &b.corpus});

  SnapshotSpec spec{query_config(), {{"w1", day("2020-01-01"), day("2021-01-01")},
                                     {"w2", day("2021-01-01"), day("2022-01-01")}}};
  spec.workers = 2;
  const auto series = snapshot_series(corpus, spec);
  REQUIRE(series.size() == 2);
  CHECK(series[0].window.name == "w1");
  REQUIRE(series[0].summary);
  REQUIRE(series[1].summary);
  const auto w1 = phrase_set(*series[0].summary);
  const auto w2 = phrase_set(*series[1].summary);
  CHECK(contains_token(w1, "alpha"));
  CHECK_FALSE(contains_token(w1, "beta"));
  CHECK(contains_token(w2, "beta"));
  CHECK_FALSE(contains_token(w2, "alpha"));

  spec.per_window_vocab = true;
  spec.workers = 1;
  const auto local = snapshot_series(corpus, spec);
  CHECK(contains_token(phrase_set(*local[0].summary), "alpha"));
  CHECK(contains_token(phrase_set(*local[1].summary), "beta"));

  const std::string grid = snapshot_grid_csv(series);
  CHECK(grid.rfind("phrase,w1,w2", 0) == 0);
}

TEST_CASE("window statistics and error markers") {
  const auto sc = synthetic_corpus(small_params(7));
  SnapshotSpec spec{query_config(), {{"empty", day("1990-01-01"), day("1990-02-01")},
                                     {"year", day("2020-01-01"), day("2021-01-01")}}};
  const auto series = snapshot_series(sc.corpus, spec);
  REQUIRE(series.size() == 2);
  CHECK(series[0].error_code == "empty_window");
  CHECK_FALSE(series[0].summary);
  const WindowStats& s = series[1].stats;
  CHECK(s.total_units == sc.corpus.size());
  CHECK(s.positives_per_week == doctest::Approx(s.positive_units / (366.0 / 7.0)));
  CHECK(s.positive_share == doctest::Approx(100.0 * s.positive_units / s.total_units));
  CHECK(error_code([&] { snapshot_series(sc.corpus, SnapshotSpec{query_config(), {}}); }) ==
        "invalid_spec");
}

TEST_CASE("swapping sources negates lasso coefficients") {
  SyntheticParams p = small_params(8);
  p.n_planted_neg = 5;
  p.label_sources = std::make_pair(std::string("alpha"), std::string("beta"));
  const auto sc = synthetic_corpus(p);
  AnalysisConfig cfg;
  cfg.query.ban_list = {"qtopic"};
  cfg.vocab = VocabularyParams{{1, 2}, 2};
  cfg.selector.k = 10;
  const Summary ab = compare_between(sc.corpus, {ComparisonMode::between_source, "alpha", "beta"}, cfg);
  const Summary ba = compare_between(sc.corpus, {ComparisonMode::between_source, "beta", "alpha"}, cfg);
  REQUIRE(ab.phrases.size() == ba.phrases.size());
  REQUIRE(ab.lambda);
  CHECK(*ab.lambda == *ba.lambda);
  for (std::size_t a = 0; a < ab.phrases.size(); ++a) {
    CHECK(ab.phrases[a].phrase == ba.phrases[a].phrase);
    CHECK(ab.phrases[a].score == -ba.phrases[a].score);
  }
  CHECK(ab.rule == "source:alpha/beta");

  // Disjoint planted vocabularies: each side's phrases come from its own set.
  const std::set<std::string> pos(sc.truth.planted.begin(), sc.truth.planted.end());
  const std::set<std::string> neg(sc.truth.planted_neg.begin(), sc.truth.planted_neg.end());
  for (const auto& ph : ab.phrases) {
    const auto toks = tokenize(ph.phrase);
    const auto& side = ph.score > 0 ? pos : neg;
    CHECK(std::any_of(toks.begin(), toks.end(), [&](const std::string& t) { return side.contains(t); }));
  }
}

TEST_CASE("identical corpora under two source tags carry no signal") {
  const auto sc = synthetic_corpus(small_params(12));
  std::vector<Document> docs;
  for (const auto& d : sc.corpus.documents()) {
    Document a = d, b = d;
    a.id += "-a";
    a.source = "left";
    b.id += "-b";
    b.source = "right";
    docs.push_back(a);
    docs.push_back(b);
  }
  const Corpus twin("twin", docs);
  AnalysisConfig cfg;
  cfg.vocab = VocabularyParams{{1, 1}, 2};
  const Summary s = compare_between(twin, {ComparisonMode::between_source, "left", "right"}, cfg);
  CHECK(s.phrases.empty());
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("comparison errors and topic filters") {
  SyntheticParams p = small_params(13);
  p.label_sources = std::make_pair(std::string("alpha"), std::string("beta"));
  const auto sc = synthetic_corpus(p);
  AnalysisConfig cfg;
  cfg.vocab = VocabularyParams{{1, 1}, 2};
  CHECK(error_code([&] { compare_between(sc.corpus, {ComparisonMode::between_source, "alpha", "alpha"}, cfg); }) ==
        "invalid_spec");
  CHECK(error_code([&] { compare_between(sc.corpus, {ComparisonMode::between_source, "alpha", "gamma"}, cfg); }) ==
        "source_absent");
  ComparisonSpec filtered{ComparisonMode::between_source, "alpha", "beta"};
  filtered.topic_filter = QuerySet::make("q", {"qtopic"});
  // Only positives mention the query token, so the negative source vanishes.
  CHECK(error_code([&] { compare_between(sc.corpus, filtered, cfg); }) == "source_absent");
  CHECK(error_code([&] { compare_within(sc.corpus, {ComparisonMode::within_source, "", "", "nowhere"}, cfg); }) ==
        "source_absent");
}

TEST_CASE("within-source comparison labels by the query inside one source") {
  SyntheticParams p = small_params(14);
  p.label_sources = std::make_pair(std::string("alpha"), std::string("beta"));
  const auto a = synthetic_corpus(p);
  SyntheticParams q = small_params(15);
  q.id_prefix = "other";
  q.source = "gamma";
  const auto b = synthetic_corpus(q);
  const Corpus corpus = merge("mixed", {&a.corpus, &b.corpus});
  const AnalysisConfig cfg = query_config();
  const Summary s = compare_within(corpus, {ComparisonMode::within_source, "", "", "gamma"}, cfg);
  const Summary direct = run_summary(b.corpus, cfg);
  CHECK(s.phrase_list() == direct.phrase_list());
  CHECK(s.n_pos == direct.n_pos);
  // Source alpha holds only positives, so labeling inside it is degenerate.
  CHECK(error_code([&] { compare_within(corpus, {ComparisonMode::within_source, "", "", "alpha"}, cfg); }) ==
        "degenerate_labeling");
}

TEST_CASE("near duplicates match an all-pairs oracle") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng() % 60, p = 1 + rng() % 12;
    std::vector<std::vector<std::uint32_t>> dense(n, std::vector<std::uint32_t>(p, 0));
    std::uniform_int_distribution<int> v(0, 3);
    for (auto& row : dense) for (auto& c : row) c = rng() % 3 == 0 ? v(rng) : 0;
    for (std::size_t i = 1; i < n; i += 5) dense[i] = dense[i - 1];
    const CountMatrix c = CountMatrix::from_dense(dense);
    for (double threshold : {0.3, 0.8, 0.95, 1.0}) {
      std::vector<std::pair<std::size_t, std::size_t>> expected;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
          double dot = 0, ni = 0, nk = 0;
          for (std::size_t j = 0; j < p; ++j) {
            dot += double(dense[i][j]) * dense[k][j];
            ni += double(dense[i][j]) * dense[i][j];
            nk += double(dense[k][j]) * dense[k][j];
          }
          if (ni > 0 && nk > 0 && dot / std::sqrt(ni * nk) >= threshold - 1e-12) expected.push_back({i, k});
        }
      }
      const auto pairs = near_duplicates(c, threshold);
      std::vector<std::pair<std::size_t, std::size_t>> got;
      for (const auto& d : pairs) {
        CHECK(d.first < d.second);
        CHECK(d.cosine >= threshold - 1e-12);
        CHECK(d.cosine <= 1.0 + 1e-12);
        got.push_back({d.first, d.second});
      }
      CHECK(got == expected);
    }
  }
}

TEST_CASE("near duplicates do not depend on row order") {
  std::mt19937_64 rng(52);
  std::vector<std::vector<std::uint32_t>> dense(40, std::vector<std::uint32_t>(6, 0));
  for (auto& row : dense) for (auto& c : row) c = rng() % 3;
  for (std::size_t i = 1; i < dense.size(); i += 4) dense[i] = dense[i - 1];
  std::vector<std::size_t> perm(dense.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::uint32_t>> shuffled;
  for (std::size_t i : perm) shuffled.push_back(dense[i]);
  auto as_set = [](const std::vector<DuplicatePair>& pairs, const std::vector<std::size_t>* map) {
    std::set<std::pair<std::size_t, std::size_t>> s;
    for (const auto& d : pairs) {
      std::size_t a = map ? (*map)[d.first] : d.first, b = map ? (*map)[d.second] : d.second;
      s.insert({std::min(a, b), std::max(a, b)});
    }
    return s;
  };
  CHECK(as_set(near_duplicates(CountMatrix::from_dense(dense), 0.9), nullptr) ==
        as_set(near_duplicates(CountMatrix::from_dense(shuffled), 0.9), &perm));
}

TEST_CASE("near duplicate edge cases") {
  const CountMatrix c = CountMatrix::from_dense({{1, 0}, {0, 1}, {0, 0}, {0, 0}, {2, 0}});
  const auto pairs = near_duplicates(c, 0.01);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].first == 0);
  CHECK(pairs[0].second == 4);
  CHECK(pairs[0].cosine == doctest::Approx(1.0));
  CHECK(duplicate_fraction(pairs, 5) == doctest::Approx(0.4));
  CHECK_THROWS_AS(near_duplicates(c, 0.0), Error);
  CHECK_THROWS_AS(near_duplicates(c, 1.5), Error);
}

TEST_CASE("five percent planted duplicates are found at 0.95") {
  SyntheticParams p = small_params(16);
  p.n_units = 380;
  p.vocab_size = 3000;
  const auto sc = synthetic_corpus(p);
  std::vector<Document> docs = sc.corpus.documents();
  for (std::size_t i = 0; i < 20; ++i) {
    Document copy = docs[i * 7];
    copy.id += "-copy";
    docs.push_back(copy);
  }
  const Corpus corpus("dupes", docs);
  const auto units = segment(corpus, UnitKind::article);
  const PreparedCorpus prepared = prepare_units(units, duplicate_vocab_params());
  const auto pairs = near_duplicates(prepared.counts, 0.95);
  std::set<std::size_t> copies;
  for (const auto& d : pairs) copies.insert(d.second);
  CHECK(pairs.size() == 20);
  CHECK(copies.size() == 20);
  CHECK(static_cast<double>(copies.size()) / units.size() == doctest::Approx(0.05));
  CHECK(duplicate_vocab_params().min_df == 1);
}

TEST_CASE("kwic sampling") {
  std::vector<Document> docs(2);
  docs[0] = {"a", "s", std::nullopt, std::nullopt,
             "Visitors came mostly from The Arab world, and the arab press noticed.", {}};
  docs[1] = {"b", "s", std::nullopt, std::nullopt, "Nothing here. THE ARAB league met.", {}};
  const Corpus corpus("k", docs);
  const auto units = segment(corpus, UnitKind::article);
  const auto all = kwic(units, "the arab", 10, 3, 7);
  REQUIRE(all.size() == 3);
  std::set<std::string> matches;
  for (const auto& s : all) {
    matches.insert(s.match);
    CHECK(s.display.find("THE ARAB") != std::string::npos);
    CHECK(normalize_phrase(s.match) == "the arab");
  }
  CHECK(matches == std::set<std::string>{"The Arab", "the arab", "THE ARAB"});
  const auto first = std::find_if(all.begin(), all.end(), [](const KwicSnippet& s) { return s.match == "The Arab"; });
  REQUIRE(first != all.end());
  CHECK(first->left == "came mostly from ");
  CHECK(first->right == " world, and the");

  const auto one = kwic(units, "the arab", 1, 3, 99);
  const auto again = kwic(units, "the arab", 1, 3, 99);
  REQUIRE(one.size() == 1);
  CHECK(one[0].display == again[0].display);
  CHECK(one[0].unit_id == again[0].unit_id);
  CHECK(kwic(units, "arab world", 5, 2, 1).size() == 1);
  CHECK(kwic(units, "absent phrase", 5, 2, 1).empty());
  CHECK_THROWS_AS(kwic(units, "  ", 5, 2, 1), Error);
}

TEST_CASE("kwic count never exceeds the occurrences or the limit") {
  const auto sc = synthetic_corpus(small_params(17));
  const auto units = segment(sc.corpus, UnitKind::article);
  std::size_t occurrences = 0;
  for (const auto& u : units) {
    const auto toks = tokenize(u.text);
    occurrences += std::count(toks.begin(), toks.end(), "qtopic");
  }
  for (std::size_t limit : {0, 1, 5, 1000}) {
    CHECK(kwic(units, "qtopic", limit, 4, 3).size() == std::min(limit, occurrences));
  }
}
