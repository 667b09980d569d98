#include "cosum/config_json.hpp"

#include <algorithm>
#include <array>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "cosum/error.hpp"
#include "cosum/tokenize.hpp"

namespace cosum {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& message) { throw Error("invalid_config", message); }

void check_object(const json& j, std::string_view what) {
  if (!j.is_object()) bad(std::string(what) + " must be a JSON object");
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                std::string_view what) {
  check_object(j, what);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) bad("unknown key '" + key + "' in " + std::string(what));
  }
}

std::string get_string(const json& j, const char* key, std::string fallback = {}) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_string()) bad(std::string("'") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::vector<std::string> get_strings(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key) || j[key].is_null()) return out;
  if (j[key].is_string()) return {j[key].get<std::string>()};
  if (!j[key].is_array()) bad(std::string("'") + key + "' must be an array of strings");
  for (const auto& v : j[key]) {
    if (!v.is_string()) bad(std::string("'") + key + "' must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

template <typename T>
T get_number(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  const json& v = j[key];
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
    return v.get<T>();
  } else {
    if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.get<long long>() < 0) bad(std::string("'") + key + "' must be non-negative");
    }
    return v.get<T>();
  }
}

bool get_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_boolean()) bad(std::string("'") + key + "' must be a boolean");
  return j[key].get<bool>();
}

TimePoint get_time(const json& j, const char* key) {
  const std::string text = get_string(j, key);
  if (text.empty()) bad(std::string("'") + key + "' is required");
  auto t = parse_iso8601(text);
  if (!t) bad(std::string("'") + key + "' is not an ISO-8601 date: " + text);
  return *t;
}

template <typename Fn>
auto rethrow_as_config(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == "invalid_config") throw;
    throw Error("invalid_config", e.what());
  }
}

constexpr std::array<std::string_view, 12> kAnalysisKeys = {
    "topic", "terms", "ban", "rule", "unit", "scheme", "strip", "stoplist",
    "selector", "vocab", "method", "k"};

std::vector<std::string> normalized(const std::vector<std::string>& entries) {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    std::string n = normalize_phrase(e);
    if (!n.empty() && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(std::move(n));
  }
  return out;
}

void check_keys_plus(const json& j, std::initializer_list<std::string_view> extra,
                     std::string_view what) {
  check_object(j, what);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : kAnalysisKeys) ok = ok || key == a;
    for (auto a : extra) ok = ok || key == a;
    if (!ok) bad("unknown key '" + key + "' in " + std::string(what));
  }
}

AnalysisConfig parse_analysis(const json& j, bool require_terms) {
  AnalysisConfig c;
  const auto terms = get_strings(j, "terms");
  const auto ban = get_strings(j, "ban");
  const std::string topic = get_string(j, "topic");
  if (j.contains("rule")) c.rule = rule_from_json(j["rule"]);
  if (require_terms && c.rule.kind != RuleKind::metadata) {
    c.query = rethrow_as_config([&] { return QuerySet::make(topic, terms, ban); });
  } else {
    // Metadata labeling and between-source runs need no query terms.
    c.query.topic = topic;
    c.query.terms = normalized(terms);
    c.query.ban_list = normalized(ban);
  }
  rethrow_as_config([&] {
    c.unit = parse_unit_kind(get_string(j, "unit", "article"));
    c.scheme = parse_scheme(get_string(j, "scheme", "l2"));
    return 0;
  });
  const std::string strip = get_string(j, "strip", "containment");
  if (strip == "containment") c.strip = StripMode::containment;
  else if (strip == "exact") c.strip = StripMode::exact;
  else bad("unknown strip mode: " + strip);
  c.stoplist = normalized(get_strings(j, "stoplist"));

  if (j.contains("selector") && !j["selector"].is_null()) {
    const json& s = j["selector"];
    check_keys(s, {"method", "k", "solver_tol", "max_sweeps", "search"}, "selector");
    if (s.contains("method")) {
      c.selector.method = rethrow_as_config([&] { return parse_method(get_string(s, "method")); });
    }
    c.selector.k = get_number<std::size_t>(s, "k", c.selector.k);
    c.selector.solver.tol = get_number<double>(s, "solver_tol", c.selector.solver.tol);
    c.selector.solver.max_sweeps = get_number<int>(s, "max_sweeps", c.selector.solver.max_sweeps);
    if (s.contains("search") && !s["search"].is_null()) {
      const json& l = s["search"];
      check_keys(l, {"shrink_factor", "depth", "floor_exponent"}, "selector.search");
      auto& search = c.selector.search;
      search.shrink_factor = get_number<double>(l, "shrink_factor", search.shrink_factor);
      search.depth = get_number<int>(l, "depth", search.depth);
      search.floor_exponent = get_number<int>(l, "floor_exponent", search.floor_exponent);
    }
  }
  if (j.contains("method")) {
    c.selector.method = rethrow_as_config([&] { return parse_method(get_string(j, "method")); });
  }
  c.selector.k = get_number<std::size_t>(j, "k", c.selector.k);
  if (j.contains("vocab") && !j["vocab"].is_null()) {
    const json& v = j["vocab"];
    check_keys(v, {"min_n", "max_n", "min_df"}, "vocab");
    VocabularyParams p = c.vocab_params();
    p.ngram.min_n = get_number<std::size_t>(v, "min_n", p.ngram.min_n);
    p.ngram.max_n = get_number<std::size_t>(v, "max_n", p.ngram.max_n);
    p.min_df = get_number<std::size_t>(v, "min_df", p.min_df);
    if (p.ngram.min_n < 1 || p.ngram.min_n > p.ngram.max_n) bad("vocab needs 1 <= min_n <= max_n");
    if (p.min_df < 1) bad("vocab.min_df must be at least 1");
    c.vocab = p;
  }
  rethrow_as_config([&] {
    c.rule.validate();
    c.selector.validate();
    return 0;
  });
  if (!(c.selector.search.shrink_factor > 1.0)) bad("search.shrink_factor must exceed 1");
  if (c.selector.search.depth < 0 || c.selector.search.floor_exponent < 1) {
    bad("search depth must be >= 0 and floor_exponent >= 1");
  }
  return c;
}

json query_json(const QuerySet& q) {
  return {{"topic", q.topic}, {"terms", q.terms}, {"ban", q.ban_list}};
}

std::string strip_name(StripMode m) { return m == StripMode::exact ? "exact" : "containment"; }

}  // namespace

nlohmann::json rule_to_json(const LabelingRule& rule) {
  switch (rule.kind) {
    case RuleKind::count_k: return {{"kind", "count"}, {"K", rule.K}};
    case RuleKind::hcount_k: return {{"kind", "hcount"}, {"K", rule.K}};
    case RuleKind::metadata: {
      json j = {{"kind", "metadata"}};
      const auto& p = *rule.predicate;
      j["source"] = p.source ? json(*p.source) : json(nullptr);
      j["start"] = p.start ? json(format_iso8601(*p.start)) : json(nullptr);
      j["end"] = p.end ? json(format_iso8601(*p.end)) : json(nullptr);
      return j;
    }
  }
  return {};
}

LabelingRule rule_from_json(const nlohmann::json& j) {
  if (j.is_string()) return rethrow_as_config([&] { return parse_rule(j.get<std::string>()); });
  check_keys(j, {"kind", "K", "source", "start", "end"}, "rule");
  const std::string kind = get_string(j, "kind");
  LabelingRule rule;
  if (kind == "count" || kind == "hcount") {
    const int K = get_number<int>(j, "K", 1);
    rule = kind == "count" ? LabelingRule::count(K) : LabelingRule::hcount(K);
  } else if (kind == "metadata") {
    MetadataPredicate p;
    if (j.contains("source") && !j["source"].is_null()) p.source = get_string(j, "source");
    if (j.contains("start") && !j["start"].is_null()) p.start = get_time(j, "start");
    if (j.contains("end") && !j["end"].is_null()) p.end = get_time(j, "end");
    if (!p.source && !p.start && !p.end) bad("metadata rule needs source, start or end");
    rule = LabelingRule::metadata(std::move(p));
  } else {
    bad("unknown rule kind: " + kind);
  }
  rethrow_as_config([&] {
    rule.validate();
    return 0;
  });
  return rule;
}

AnalysisConfig analysis_from_json(const nlohmann::json& j, bool require_terms) {
  check_keys_plus(j, {}, "configuration");
  return parse_analysis(j, require_terms);
}

nlohmann::json analysis_to_json(const AnalysisConfig& c) {
  const VocabularyParams v = c.vocab_params();
  const auto& s = c.selector;
  return {
      {"topic", c.query.topic},
      {"terms", c.query.terms},
      {"ban", c.query.ban_list},
      {"rule", rule_to_json(c.rule)},
      {"unit", std::string(to_string(c.unit))},
      {"scheme", std::string(to_string(c.scheme))},
      {"strip", strip_name(c.strip)},
      {"stoplist", c.stoplist},
      {"selector",
       {{"method", std::string(to_string(s.method))},
        {"k", s.k},
        {"solver_tol", s.solver.tol},
        {"max_sweeps", s.solver.max_sweeps},
        {"search",
         {{"shrink_factor", s.search.shrink_factor},
          {"depth", s.search.depth},
          {"floor_exponent", s.search.floor_exponent}}}}},
      {"vocab", {{"min_n", v.ngram.min_n}, {"max_n", v.ngram.max_n}, {"min_df", v.min_df}}},
  };
}

SnapshotSpec snapshot_spec_from_json(const nlohmann::json& j) {
  check_keys_plus(j, {"windows", "per_window_vocab", "workers"}, "snapshot spec");
  SnapshotSpec spec;
  json analysis = j;
  analysis.erase("windows");
  analysis.erase("per_window_vocab");
  analysis.erase("workers");
  spec.analysis = parse_analysis(analysis, true);
  if (!j.contains("windows") || !j["windows"].is_array() || j["windows"].empty()) {
    bad("snapshot spec needs a nonempty 'windows' array");
  }
  for (const auto& w : j["windows"]) {
    check_keys(w, {"name", "start", "end"}, "window");
    NamedWindow nw{get_string(w, "name"), get_time(w, "start"), get_time(w, "end")};
    if (nw.name.empty()) nw.name = format_iso8601(nw.start).substr(0, 10);
    if (nw.start >= nw.end) bad("window '" + nw.name + "' has start >= end");
    spec.windows.push_back(std::move(nw));
  }
  spec.per_window_vocab = get_bool(j, "per_window_vocab", false);
  spec.workers = get_number<std::size_t>(j, "workers", 1);
  return spec;
}

nlohmann::json snapshot_spec_to_json(const SnapshotSpec& spec) {
  json j = analysis_to_json(spec.analysis);
  json windows = json::array();
  for (const auto& w : spec.windows) {
    windows.push_back(
        {{"name", w.name}, {"start", format_iso8601(w.start)}, {"end", format_iso8601(w.end)}});
  }
  j["windows"] = std::move(windows);
  j["per_window_vocab"] = spec.per_window_vocab;
  // Worker count does not change results and is left out of the canonical form.
  return j;
}

ComparisonRequest comparison_from_json(const nlohmann::json& j) {
  check_keys_plus(j, {"mode", "source_a", "source_b", "source", "topic_filter"},
                  "comparison spec");
  ComparisonRequest r;
  const std::string mode = get_string(j, "mode", "between");
  json analysis = j;
  for (const char* k : {"mode", "source_a", "source_b", "source", "topic_filter"}) {
    analysis.erase(k);
  }
  if (mode == "between") {
    r.spec.mode = ComparisonMode::between_source;
    r.spec.source_a = get_string(j, "source_a");
    r.spec.source_b = get_string(j, "source_b");
    if (r.spec.source_a.empty() || r.spec.source_b.empty() || r.spec.source_a == r.spec.source_b) {
      bad("between mode needs two distinct sources 'source_a' and 'source_b'");
    }
    r.analysis = parse_analysis(analysis, false);
    if (j.contains("topic_filter") && !j["topic_filter"].is_null()) {
      const json& f = j["topic_filter"];
      check_keys(f, {"topic", "terms", "ban"}, "topic_filter");
      r.spec.topic_filter = rethrow_as_config([&] {
        return QuerySet::make(get_string(f, "topic"), get_strings(f, "terms"),
                              get_strings(f, "ban"));
      });
    }
  } else if (mode == "within") {
    r.spec.mode = ComparisonMode::within_source;
    r.spec.source = get_string(j, "source");
    if (r.spec.source.empty()) bad("within mode needs 'source'");
    if (j.contains("topic_filter")) bad("topic_filter applies to between mode only");
    r.analysis = parse_analysis(analysis, true);
  } else {
    bad("unknown comparison mode: " + mode);
  }
  return r;
}

nlohmann::json comparison_to_json(const ComparisonRequest& r) {
  json j = analysis_to_json(r.analysis);
  if (r.spec.mode == ComparisonMode::between_source) {
    j["mode"] = "between";
    j["source_a"] = r.spec.source_a;
    j["source_b"] = r.spec.source_b;
    j["topic_filter"] = r.spec.topic_filter ? query_json(*r.spec.topic_filter) : json(nullptr);
  } else {
    j["mode"] = "within";
    j["source"] = r.spec.source;
  }
  return j;
}

nlohmann::json summary_to_json(const Summary& s) {
  json phrases = json::array();
  for (std::size_t r = 0; r < s.phrases.size(); ++r) {
    const auto& p = s.phrases[r];
    phrases.push_back({{"rank", r + 1}, {"phrase", p.phrase}, {"score", p.score},
                       {"column", p.column}});
  }
  return {{"topic", s.topic},
          {"phrases", std::move(phrases)},
          {"method", std::string(to_string(s.method))},
          {"scheme", s.scheme},
          {"rule", s.rule},
          {"unit", s.unit},
          {"lambda", s.lambda ? json(*s.lambda) : json(nullptr)},
          {"n_pos", s.n_pos},
          {"n_neg", s.n_neg},
          {"created_at", s.created_at},
          {"warnings", s.warnings}};
}

Summary summary_from_json(const nlohmann::json& j) {
  check_object(j, "summary");
  Summary s;
  s.topic = get_string(j, "topic");
  for (const auto& p : j.at("phrases")) {
    s.phrases.push_back({p.at("phrase").get<std::string>(), p.at("score").get<double>(),
                         p.value("column", std::size_t{0})});
  }
  s.method = parse_method(get_string(j, "method", "lasso"));
  s.scheme = get_string(j, "scheme");
  s.rule = get_string(j, "rule");
  s.unit = get_string(j, "unit");
  if (j.contains("lambda") && !j["lambda"].is_null()) s.lambda = j["lambda"].get<double>();
  s.n_pos = j.value("n_pos", std::size_t{0});
  s.n_neg = j.value("n_neg", std::size_t{0});
  s.created_at = get_string(j, "created_at");
  s.warnings = get_strings(j, "warnings");
  return s;
}

std::string summary_to_csv(const Summary& s) {
  std::ostringstream out;
  out.precision(17);
  out << "rank,phrase,score,lambda,method\n";
  for (std::size_t r = 0; r < s.phrases.size(); ++r) {
    out << r + 1 << ',' << s.phrases[r].phrase << ',' << s.phrases[r].score << ',';
    if (s.lambda) out << *s.lambda;
    out << ',' << to_string(s.method) << '\n';
  }
  return out.str();
}

nlohmann::json snapshot_result_to_json(const SnapshotResult& r) {
  json j = {{"window",
             {{"name", r.window.name},
              {"start", format_iso8601(r.window.start)},
              {"end", format_iso8601(r.window.end)}}},
            {"stats",
             {{"total_units", r.stats.total_units},
              {"positive_units", r.stats.positive_units},
              {"positives_per_week", r.stats.positives_per_week},
              {"positive_share", r.stats.positive_share}}}};
  j["summary"] = r.summary ? summary_to_json(*r.summary) : json(nullptr);
  j["error"] = r.error_code.empty() ? json(nullptr)
                                    : json{{"code", r.error_code}, {"message", r.error}};
  return j;
}

SnapshotResult snapshot_result_from_json(const nlohmann::json& j) {
  SnapshotResult r;
  const json& w = j.at("window");
  r.window = {w.at("name").get<std::string>(), get_time(w, "start"), get_time(w, "end")};
  const json& s = j.at("stats");
  r.stats = {s.at("total_units").get<std::size_t>(), s.at("positive_units").get<std::size_t>(),
             s.at("positives_per_week").get<double>(), s.at("positive_share").get<double>()};
  if (!j.at("summary").is_null()) r.summary = summary_from_json(j["summary"]);
  if (!j.at("error").is_null()) {
    r.error_code = j["error"].at("code").get<std::string>();
    r.error = j["error"].at("message").get<std::string>();
  }
  return r;
}

nlohmann::json snapshot_results_to_json(const std::vector<SnapshotResult>& results) {
  json out = json::array();
  for (const auto& r : results) out.push_back(snapshot_result_to_json(r));
  return out;
}

nlohmann::json kwic_to_json(const std::vector<KwicSnippet>& snippets) {
  json out = json::array();
  for (const auto& s : snippets) {
    out.push_back({{"unit_id", s.unit_id}, {"left", s.left}, {"match", s.match},
                   {"right", s.right}, {"display", s.display}});
  }
  return out;
}

}  // namespace cosum
