#include "cosum/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cosum/config_json.hpp"
#include "cosum/error.hpp"
#include "cosum/pipeline.hpp"
#include "cosum/run_store.hpp"
#include "cosum/service.hpp"
#include "cosum/stoplist.hpp"

namespace cosum {

using nlohmann::json;

namespace {

struct AnalysisFlags {
  std::string config_path;
  std::string topic;
  std::vector<std::string> terms;
  std::vector<std::string> ban;
  std::string rule = "count:1";
  std::string unit = "article";
  std::string scheme = "l2";
  std::string method = "lasso";
  std::size_t k = 15;
  std::optional<std::size_t> min_df;
  std::optional<std::size_t> max_n;
  std::string strip = "containment";
  std::string stoplist_path;

  void attach(CLI::App* cmd, bool terms_required) {
    cmd->add_option("--config", config_path, "analysis configuration JSON (flags override)");
    auto* t = cmd->add_option("--terms", terms, "query terms (repeat or comma-separate)")
                  ->delimiter(',');
    if (terms_required) t->required();
    cmd->add_option("--topic", topic, "topic label");
    cmd->add_option("--ban", ban, "phrases to strip from the features")->delimiter(',');
    cmd->add_option("--rule", rule, "labeling rule: count:K or hcount:K")->capture_default_str();
    cmd->add_option("--unit", unit, "article, paragraph or headline")->capture_default_str();
    cmd->add_option("--scheme", scheme, "l2, tfidf, stopword or raw")->capture_default_str();
    cmd->add_option("--method", method, "lasso, l1lr, cooccurrence or correlation")
        ->capture_default_str();
    cmd->add_option("--k", k, "maximum summary length")->capture_default_str();
    cmd->add_option("--min-df", min_df, "minimum unit frequency of a phrase");
    cmd->add_option("--max-n", max_n, "longest phrase in tokens");
    cmd->add_option("--strip", strip, "containment or exact")->capture_default_str();
    cmd->add_option("--stoplist", stoplist_path, "stop word file for --scheme stopword");
  }

  // Builds the configuration document; explicitly given flags win over --config.
  json to_json(const CLI::App* cmd) const {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error("not_found", "cannot read " + config_path);
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw Error("invalid_json", config_path + ": " + e.what());
      }
    }
    auto given = [&](const char* name) { return cmd->count(name) > 0; };
    auto set = [&](const char* key, const json& value, const char* flag) {
      if (given(flag) || !j.contains(key)) j[key] = value;
    };
    set("terms", terms, "--terms");
    set("ban", ban, "--ban");
    if (given("--topic") || !j.contains("topic")) j["topic"] = topic.empty() && !terms.empty() ? terms.front() : topic;
    set("rule", rule, "--rule");
    set("unit", unit, "--unit");
    set("scheme", scheme, "--scheme");
    set("strip", strip, "--strip");
    if (given("--method") || given("--k") || !j.contains("selector")) {
      json sel = j.value("selector", json::object());
      for (const char* key : {"method", "k"}) {
        if (j.contains(key)) {
          if (!sel.contains(key)) sel[key] = j[key];
          j.erase(key);
        }
      }
      if (given("--method") || !sel.contains("method")) sel["method"] = method;
      if (given("--k") || !sel.contains("k")) sel["k"] = k;
      j["selector"] = sel;
    }
    if (min_df || max_n) {
      json v = j.value("vocab", json::object());
      if (min_df) v["min_df"] = *min_df;
      if (max_n) v["max_n"] = *max_n;
      j["vocab"] = v;
    }
    if (!stoplist_path.empty()) j["stoplist"] = read_stoplist_file(stoplist_path);
    return j;
  }
};

struct CorpusFlags {
  std::string corpus;
  std::string store;

  void attach(CLI::App* cmd) {
    cmd->add_option("--corpus", corpus, "JSONL file, or a corpus id/name in --store")->required();
    cmd->add_option("--store", store, "run store directory");
  }

  bool is_file() const { return std::filesystem::is_regular_file(corpus); }

  std::shared_ptr<const Corpus> load(std::optional<RunStore>& rs) const {
    if (!store.empty()) rs.emplace(store);
    if (is_file()) {
      IngestOptions opts;
      opts.name = std::filesystem::path(corpus).stem().string();
      opts.source_path = corpus;
      auto c = std::make_shared<const Corpus>(ingest_jsonl_file(corpus, opts));
      if (rs) rs->add_corpus(*c);
      return c;
    }
    if (!rs) throw Error("not_found", "no such corpus file: " + corpus + " (and no --store given)");
    return rs->load_corpus(corpus);
  }
};

void print_summary_table(std::ostream& out, const Summary& s) {
  out << "topic: " << s.topic << "  method: " << to_string(s.method) << "  scheme: " << s.scheme
      << "  rule: " << s.rule << "  unit: " << s.unit << "  positives: " << s.n_pos << "/"
      << (s.n_pos + s.n_neg);
  if (s.lambda) out << "  lambda: " << std::setprecision(6) << *s.lambda;
  out << '\n';
  std::size_t width = 6;
  for (const auto& p : s.phrases) width = std::max(width, p.phrase.size());
  for (std::size_t r = 0; r < s.phrases.size(); ++r) {
    out << std::setw(3) << r + 1 << "  " << std::left << std::setw(static_cast<int>(width))
        << s.phrases[r].phrase << std::right << "  " << std::setprecision(6) << s.phrases[r].score
        << '\n';
  }
  if (s.phrases.empty()) out << "  (no phrases selected)\n";
}

struct Output {
  std::string format = "table";
  std::string order = "score";
};

void emit_summary(std::ostream& out, std::ostream& err, Summary s, const Output& output,
                  const std::string& run_id) {
  const std::string& format = output.format;
  if (output.order == "alpha") {
    std::stable_sort(s.phrases.begin(), s.phrases.end(),
                     [](const SummaryPhrase& a, const SummaryPhrase& b) { return a.phrase < b.phrase; });
  } else if (output.order != "score") {
    throw Error("invalid_argument", "unknown order '" + output.order + "' (score or alpha)");
  }
  for (const auto& w : s.warnings) err << "warning: " << w << '\n';
  if (format == "json") {
    json j = summary_to_json(s);
    if (!run_id.empty()) j["run_id"] = run_id;
    out << j.dump(2) << '\n';
  } else if (format == "csv") {
    out << summary_to_csv(s);
  } else {
    print_summary_table(out, s);
    if (!run_id.empty()) out << "run: " << run_id << '\n';
  }
}

void emit_record(std::ostream& out, std::ostream& err, const RunRecord& r, const Output& output) {
  if (r.status == RunStatus::error) {
    throw Error(r.messages.empty() ? "analysis_failed" : r.messages.front().substr(0, r.messages.front().find(':')),
                r.messages.empty() ? "analysis failed" : r.messages.front());
  }
  if (r.summary) {
    emit_summary(out, err, *r.summary, output, r.run_id);
  }
}

void print_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse predictive phrase summaries of text corpora"};
  app.name("cosum");
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a JSONL corpus and optionally store it");
  std::string ingest_path, ingest_name, ingest_store;
  bool fail_fast = false;
  ingest->add_option("jsonl", ingest_path, "line-delimited JSON documents")->required();
  ingest->add_option("--name", ingest_name, "corpus name");
  ingest->add_option("--store", ingest_store, "run store directory");
  ingest->add_flag("--fail-fast", fail_fast, "stop at the first invalid line");

  // summarize
  auto* summarize_cmd = app.add_subcommand("summarize", "summarize a topic");
  AnalysisFlags sum_flags;
  CorpusFlags sum_corpus;
  Output sum_output;
  sum_flags.attach(summarize_cmd, false);
  sum_corpus.attach(summarize_cmd);
  summarize_cmd->add_option("--format", sum_output.format, "table, json or csv")->capture_default_str();
  summarize_cmd->add_option("--order", sum_output.order, "phrase order: score or alpha")->capture_default_str();

  // snapshot
  auto* snapshot_cmd = app.add_subcommand("snapshot", "summaries over time windows");
  std::string spec_path, snap_format = "json";
  std::size_t snap_workers = 1;
  CorpusFlags snap_corpus;
  snapshot_cmd->add_option("--spec", spec_path, "snapshot spec JSON")->required();
  snap_corpus.attach(snapshot_cmd);
  snapshot_cmd->add_option("--format", snap_format, "json or csv (phrase x window grid)")
      ->capture_default_str();
  snapshot_cmd->add_option("--workers", snap_workers, "parallel windows")->capture_default_str();

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "between- or within-source comparison");
  std::string mode = "between", source_a, source_b, source;
  Output cmp_output;
  std::vector<std::string> filter_terms;
  AnalysisFlags cmp_flags;
  CorpusFlags cmp_corpus;
  compare_cmd->add_option("--mode", mode, "between or within")->capture_default_str();
  compare_cmd->add_option("--source-a", source_a, "source labeled positive (between)");
  compare_cmd->add_option("--source-b", source_b, "source labeled negative (between)");
  compare_cmd->add_option("--source", source, "source to analyze (within)");
  compare_cmd->add_option("--filter-terms", filter_terms, "topic filter terms (between)")
      ->delimiter(',');
  cmp_flags.attach(compare_cmd, false);
  cmp_corpus.attach(compare_cmd);
  compare_cmd->add_option("--format", cmp_output.format, "table, json or csv")->capture_default_str();
  compare_cmd->add_option("--order", cmp_output.order, "phrase order: score or alpha")->capture_default_str();

  // kwic
  auto* kwic_cmd = app.add_subcommand("kwic", "sample occurrences of a phrase in context");
  std::string phrase, kwic_unit = "article", kwic_format = "text";
  std::size_t limit = 10, window = 8;
  std::uint64_t seed = 0;
  CorpusFlags kwic_corpus;
  kwic_cmd->add_option("--phrase", phrase, "phrase to look up")->required();
  kwic_cmd->add_option("--limit", limit, "maximum snippets")->capture_default_str();
  kwic_cmd->add_option("--window", window, "tokens of context per side")->capture_default_str();
  kwic_cmd->add_option("--seed", seed, "sampling seed")->capture_default_str();
  kwic_cmd->add_option("--unit", kwic_unit, "article, paragraph or headline")->capture_default_str();
  kwic_cmd->add_option("--format", kwic_format, "text or json")->capture_default_str();
  kwic_corpus.attach(kwic_cmd);

  // dupes
  auto* dupes_cmd = app.add_subcommand("dupes", "report near-duplicate units");
  double threshold = 0.95;
  std::string dupes_unit = "article", dupes_format = "text";
  CorpusFlags dupes_corpus;
  dupes_cmd->add_option("--threshold", threshold, "cosine threshold in (0, 1]")->capture_default_str();
  dupes_cmd->add_option("--unit", dupes_unit, "article, paragraph or headline")->capture_default_str();
  dupes_cmd->add_option("--format", dupes_format, "text or json")->capture_default_str();
  dupes_corpus.attach(dupes_cmd);

  // stoplist
  auto* stoplist_cmd = app.add_subcommand("stoplist", "stop word list");
  stoplist_cmd->require_subcommand(1);
  auto* stoplist_print = stoplist_cmd->add_subcommand("print", "print the built-in stop words");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP/JSON service");
  ServiceOptions service_opts;
  std::string serve_store = "cosum-store";
  serve_cmd->add_option("--port", service_opts.port, "TCP port")->capture_default_str();
  serve_cmd->add_option("--host", service_opts.host, "bind address")->capture_default_str();
  serve_cmd->add_option("--store", serve_store, "run store directory")->capture_default_str();
  serve_cmd->add_option("--workers", service_opts.workers, "concurrent analysis jobs")
      ->capture_default_str();

  // runs
  auto* runs_cmd = app.add_subcommand("runs", "inspect recorded runs");
  runs_cmd->require_subcommand(1);
  std::string runs_store = "cosum-store", run_id;
  auto* runs_list = runs_cmd->add_subcommand("list", "list recorded runs");
  auto* runs_show = runs_cmd->add_subcommand("show", "print a run record");
  auto* runs_replay = runs_cmd->add_subcommand("replay", "re-execute a run and compare results");
  for (auto* c : {runs_list, runs_show, runs_replay}) {
    c->add_option("--store", runs_store, "run store directory")->capture_default_str();
  }
  runs_show->add_option("run_id", run_id, "run id")->required();
  runs_replay->add_option("run_id", run_id, "run id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    out << failing->help();
    print_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (ingest->parsed()) {
      IngestOptions opts;
      opts.name = ingest_name.empty() ? std::filesystem::path(ingest_path).stem().string() : ingest_name;
      opts.source_path = ingest_path;
      opts.fail_fast = fail_fast;
      IngestReport report;
      const Corpus corpus = ingest_jsonl_file(ingest_path, opts, &report);
      json j = {{"name", corpus.name()},
                {"hash", corpus.content_hash()},
                {"documents", corpus.size()},
                {"lines_read", report.lines_read}};
      json issues = json::array();
      for (const auto& i : report.issues) issues.push_back({{"line", i.line}, {"message", i.message}});
      j["issues"] = issues;
      if (!ingest_store.empty()) {
        RunStore store(ingest_store);
        j["id"] = store.add_corpus(corpus).id;
      }
      out << j.dump(2) << '\n';
      return 0;
    }

    if (summarize_cmd->parsed()) {
      const json config = sum_flags.to_json(summarize_cmd);
      std::optional<RunStore> store;
      const auto corpus = sum_corpus.load(store);
      if (store) {
        const auto [record, created] =
            store->submit(corpus_id_for(*corpus), RunKind::summary, config);
        emit_record(out, err, record, sum_output);
      } else {
        emit_summary(out, err, run_summary(*corpus, analysis_from_json(config)), sum_output, "");
      }
      return 0;
    }

    if (snapshot_cmd->parsed()) {
      std::ifstream in(spec_path);
      if (!in) throw Error("not_found", "cannot read " + spec_path);
      json spec_json;
      try {
        spec_json = json::parse(in);
      } catch (const json::exception& e) {
        throw Error("invalid_json", spec_path + ": " + e.what());
      }
      std::optional<RunStore> store;
      const auto corpus = snap_corpus.load(store);
      std::vector<SnapshotResult> results;
      std::string id;
      if (store) {
        const auto [record, created] =
            store->submit(corpus_id_for(*corpus), RunKind::snapshot, spec_json);
        if (record.status == RunStatus::error) {
          throw Error("analysis_failed", record.messages.empty() ? "snapshot failed" : record.messages.front());
        }
        results = record.snapshots;
        id = record.run_id;
      } else {
        SnapshotSpec spec = snapshot_spec_from_json(spec_json);
        spec.workers = snap_workers;
        results = snapshot_series(*corpus, spec);
      }
      for (const auto& r : results) {
        if (!r.error_code.empty()) err << "warning: window " << r.window.name << ": " << r.error << '\n';
      }
      if (snap_format == "csv") {
        out << snapshot_grid_csv(results);
      } else {
        json j = {{"windows", snapshot_results_to_json(results)}};
        if (!id.empty()) j["run_id"] = id;
        out << j.dump(2) << '\n';
      }
      return 0;
    }

    if (compare_cmd->parsed()) {
      json config = cmp_flags.to_json(compare_cmd);
      config["mode"] = mode;
      if (mode == "between") {
        config["source_a"] = source_a;
        config["source_b"] = source_b;
        if (!filter_terms.empty()) {
          config["topic_filter"] = {{"topic", config.value("topic", "")}, {"terms", filter_terms}};
        }
        if (config.contains("terms") && config["terms"].empty()) config.erase("terms");
      } else {
        config["source"] = source;
      }
      std::optional<RunStore> store;
      const auto corpus = cmp_corpus.load(store);
      if (store) {
        const auto [record, created] =
            store->submit(corpus_id_for(*corpus), RunKind::comparison, config);
        emit_record(out, err, record, cmp_output);
      } else {
        const ComparisonRequest req = comparison_from_json(config);
        const Summary s = req.spec.mode == ComparisonMode::between_source
                              ? compare_between(*corpus, req.spec, req.analysis)
                              : compare_within(*corpus, req.spec, req.analysis);
        emit_summary(out, err, s, cmp_output, "");
      }
      return 0;
    }

    if (kwic_cmd->parsed()) {
      std::optional<RunStore> store;
      const auto corpus = kwic_corpus.load(store);
      const auto units = segment(*corpus, parse_unit_kind(kwic_unit));
      const auto snippets = kwic(units, phrase, limit, window, seed);
      if (kwic_format == "json") {
        out << kwic_to_json(snippets).dump(2) << '\n';
      } else {
        for (const auto& s : snippets) out << s.unit_id << "\t" << s.display << '\n';
      }
      return 0;
    }

    if (dupes_cmd->parsed()) {
      std::optional<RunStore> store;
      const auto corpus = dupes_corpus.load(store);
      const auto units = segment(*corpus, parse_unit_kind(dupes_unit));
      const BuiltMatrix m = store ? store->matrix_cache().get_or_build(units, duplicate_vocab_params())
                                  : build_matrix(units, duplicate_vocab_params());
      const auto pairs = near_duplicates(m.counts, threshold);
      const double fraction = duplicate_fraction(pairs, units.size());
      if (dupes_format == "json") {
        json list = json::array();
        for (const auto& p : pairs) {
          list.push_back({{"first", units[p.first].unit_id},
                          {"second", units[p.second].unit_id},
                          {"cosine", p.cosine}});
        }
        out << json{{"threshold", threshold}, {"rows", units.size()},
                    {"duplicate_fraction", fraction}, {"pairs", list}}
                   .dump(2)
            << '\n';
      } else {
        for (const auto& p : pairs) {
          out << units[p.first].unit_id << '\t' << units[p.second].unit_id << '\t'
              << std::setprecision(6) << p.cosine << '\n';
        }
        out << "# " << pairs.size() << " pairs; " << std::setprecision(4) << 100.0 * fraction
            << "% of " << units.size() << " units have a near-duplicate\n";
      }
      return 0;
    }

    if (stoplist_print->parsed()) {
      out << "# " << default_stoplist_version() << '\n';
      for (const auto& w : default_stoplist()) out << w << '\n';
      return 0;
    }

    if (serve_cmd->parsed()) {
      RunStore store(serve_store, service_opts.workers);
      Service service(store, service_opts);
      const int port = service.bind();
      out << "listening on http://" << service_opts.host << ":" << port << std::endl;
      service.run();
      return 0;
    }

    if (runs_list->parsed()) {
      RunStore store(runs_store);
      for (const auto& r : store.list_runs()) out << r.dump() << '\n';
      return 0;
    }
    if (runs_show->parsed()) {
      RunStore store(runs_store);
      const auto record = store.find_run(run_id);
      if (!record) throw Error("not_found", "unknown run: " + run_id);
      out << run_to_json(*record).dump(2) << '\n';
      return 0;
    }
    if (runs_replay->parsed()) {
      RunStore store(runs_store);
      const auto record = store.find_run(run_id);
      if (!record) throw Error("not_found", "unknown run: " + run_id);
      const auto corpus = store.load_corpus(record->corpus_id);
      const ReplayReport report = verify_replay(*record, *corpus, &store.matrix_cache());
      out << json{{"run_id", run_id},
                  {"identical", report.identical},
                  {"max_score_diff", report.max_score_diff},
                  {"message", report.message}}
                 .dump()
          << '\n';
      return report.identical ? 0 : 3;
    }
  } catch (const Error& e) {
    print_error(err, e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace cosum
