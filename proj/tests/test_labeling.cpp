#include <doctest.h>

#include "cosum/error.hpp"
#include "cosum/labeling.hpp"
#include "support.hpp"

using namespace cosum;

namespace {

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("query sets normalize and validate") {
  const QuerySet q = QuerySet::make("Energy", {"Oil Spill", "BP's"}, {"Gulf"});
  CHECK(q.terms == std::vector<std::string>{"oil spill", "bps"});
  CHECK(q.ban_list == std::vector<std::string>{"gulf"});
  CHECK(error_code([] { QuerySet::make("t", {}); }) == "invalid_query");
  CHECK(error_code([] { QuerySet::make("t", {"--"}); }) == "invalid_query");
  QuerySet raw{"t", {"Not Normal"}, {}};
  CHECK(error_code([&] { raw.validate(); }) == "invalid_query");
}

TEST_CASE("rule parsing") {
  CHECK(parse_rule("count").K == 1);
  CHECK(parse_rule("count:3").kind == RuleKind::count_k);
  CHECK(parse_rule("hcount:2").kind == RuleKind::hcount_k);
  CHECK(parse_rule("hcount:2").describe() == "hcount:2");
  CHECK(error_code([] { parse_rule("count:0"); }) == "invalid_rule");
  CHECK(error_code([] { parse_rule("count:x"); }) == "invalid_rule");
  CHECK(error_code([] { parse_rule("often"); }) == "invalid_rule");
}

TEST_CASE("count and hcount rules agree with their definitions") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::uint64_t> hit(0, 5);
  for (int K = 1; K <= 4; ++K) {
    std::vector<std::uint64_t> hits(200);
    for (auto& h : hits) h = hit(rng);
    hits[0] = 0;
    hits[1] = 5;
    const LabelVector c = apply_rule(hits, LabelingRule::count(K));
    const LabelVector h = apply_rule(hits, LabelingRule::hcount(K));
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(c[i] == (hits[i] >= static_cast<std::uint64_t>(K) ? 1 : -1));
      const int expected = hits[i] >= static_cast<std::uint64_t>(K) ? 1 : hits[i] == 0 ? -1 : 0;
      CHECK(h[i] == expected);
    }
    CHECK(c.n_pos() == h.n_pos());
    CHECK(h.n_retained() + h.dropped_rows().size() == hits.size());
  }
}

TEST_CASE("degenerate labelings are rejected") {
  const std::vector<std::uint64_t> none{0, 0, 0};
  CHECK(error_code([&] { apply_rule(none, LabelingRule::count(1)); }) == "degenerate_labeling");
  const std::vector<std::uint64_t> all{1, 2, 3};
  CHECK(error_code([&] { apply_rule(all, LabelingRule::count(1)); }) == "degenerate_labeling");
  CHECK(error_code([] { LabelVector(std::vector<std::int8_t>{2}); }) == "invalid_argument");
}

TEST_CASE("label vector helpers") {
  const LabelVector y(std::vector<std::int8_t>{1, 0, -1, 1});
  CHECK(y.n_pos() == 2);
  CHECK(y.n_neg() == 1);
  CHECK(y.retained_rows() == std::vector<std::size_t>{0, 2, 3});
  CHECK(y.dropped_rows() == std::vector<std::size_t>{1});
  const LabelVector z = y.negated();
  CHECK(z.values() == std::vector<std::int8_t>{-1, 0, 1, -1});
}

TEST_CASE("query hits sum term counts") {
  const auto vocab = testing_support::vocab_from({"oil", "oil spill", "gas"});
  const CountMatrix c = CountMatrix::from_dense({{2, 1, 0}, {0, 0, 3}, {1, 1, 1}});
  const QuerySet q = QuerySet::make("t", {"oil spill", "gas", "absent"});
  CHECK(query_hits(c, vocab, q) == std::vector<std::uint64_t>{1, 3, 2});
  CHECK(count_hits(c, 0, vocab, q) == 1);
}

TEST_CASE("metadata labeling") {
  std::vector<Document> docs(3);
  docs[0] = {"a", "wire", parse_iso8601("2020-01-05"), std::nullopt, "x", {}};
  docs[1] = {"b", "paper", parse_iso8601("2020-01-05"), std::nullopt, "y", {}};
  docs[2] = {"c", "wire", parse_iso8601("2020-03-05"), std::nullopt, "z", {}};
  const Corpus corpus("c", docs);
  const auto units = segment(corpus, UnitKind::article);
  MetadataPredicate p;
  p.source = "wire";
  p.end = parse_iso8601("2020-02-01");
  const LabelVector y = label_by_metadata(units, corpus, p);
  CHECK(y.values() == std::vector<std::int8_t>{1, -1, -1});
  CHECK(error_code([] {
          const std::vector<std::uint64_t> h{0, 1};
          apply_rule(h, LabelingRule::metadata({}));
        }) == "invalid_rule");
}

TEST_CASE("containment stripping") {
  const auto vocab = testing_support::vocab_from(
      {"oil", "oil spill", "spill", "the spill", "price", "the", "gulf coast", "of the"});
  const CountMatrix c = CountMatrix::from_dense({{1, 1, 1, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 2, 1, 0, 1}});
  const QuerySet q = QuerySet::make("t", {"the oil"}, {"gulf"});
  CHECK(strip_tokens(q) == std::vector<std::string>{"oil", "gulf"});
  const StrippedMatrix s = strip_query_columns(c, vocab, q);
  CHECK(s.vocab.phrases() == std::vector<std::string>{"spill", "the spill", "price", "the", "of the"});
  CHECK(s.kept_columns == std::vector<std::size_t>{2, 3, 4, 5, 7});
  CHECK(s.removed_columns == std::vector<std::size_t>{0, 1, 6});
  for (std::size_t j = 0; j < s.kept_columns.size(); ++j) {
    for (std::size_t i = 0; i < c.rows(); ++i) CHECK(s.counts.at(i, j) == c.at(i, s.kept_columns[j]));
  }
  const QuerySet only_stop = QuerySet::make("t", {"the"});
  CHECK(strip_tokens(only_stop) == std::vector<std::string>{"the"});
}

TEST_CASE("exact stripping and empty results") {
  const auto vocab = testing_support::vocab_from({"oil", "oil spill"});
  const CountMatrix c = CountMatrix::from_dense({{1, 1}});
  const StrippedMatrix s = strip_query_columns(c, vocab, QuerySet::make("t", {"oil"}), StripMode::exact);
  CHECK(s.vocab.phrases() == std::vector<std::string>{"oil spill"});
  CHECK(error_code([&] { strip_query_columns(c, vocab, QuerySet::make("t", {"oil"})); }) ==
        "empty_vocabulary");
}
