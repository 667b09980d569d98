#include "cosum/run_store.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cosum/error.hpp"
#include "cosum/hash.hpp"

namespace cosum {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(RunKind kind) {
  switch (kind) {
    case RunKind::summary: return "summary";
    case RunKind::snapshot: return "snapshot";
    case RunKind::comparison: return "comparison";
  }
  return "summary";
}

RunKind parse_run_kind(std::string_view text) {
  if (text == "summary") return RunKind::summary;
  if (text == "snapshot") return RunKind::snapshot;
  if (text == "comparison") return RunKind::comparison;
  throw Error("invalid_argument", "unknown run kind: " + std::string(text));
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::ok: return "ok";
    case RunStatus::warning: return "warning";
    case RunStatus::error: return "error";
  }
  return "ok";
}

namespace {

RunStatus parse_status(std::string_view text) {
  if (text == "ok") return RunStatus::ok;
  if (text == "warning") return RunStatus::warning;
  if (text == "error") return RunStatus::error;
  throw Error("corrupt_store", "unknown run status: " + std::string(text));
}

std::string now_iso() {
  return format_iso8601(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("store_unwritable", "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("store_unwritable", "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("not_found", "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("corrupt_store", path.string() + ": " + e.what());
  }
}

}  // namespace

nlohmann::json run_to_json(const RunRecord& r) {
  json j = {{"run_id", r.run_id},
            {"created_at", r.created_at},
            {"corpus", {{"id", r.corpus_id}, {"name", r.corpus_name}, {"hash", r.corpus_hash}}},
            {"kind", std::string(to_string(r.kind))},
            {"config", r.config},
            {"status", std::string(to_string(r.status))},
            {"messages", r.messages}};
  if (r.kind == RunKind::snapshot) {
    j["result"] = snapshot_results_to_json(r.snapshots);
  } else {
    j["result"] = r.summary ? summary_to_json(*r.summary) : json(nullptr);
  }
  return j;
}

RunRecord run_from_json(const nlohmann::json& j) {
  try {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.created_at = j.at("created_at").get<std::string>();
    r.corpus_id = j.at("corpus").at("id").get<std::string>();
    r.corpus_name = j.at("corpus").at("name").get<std::string>();
    r.corpus_hash = j.at("corpus").at("hash").get<std::string>();
    r.kind = parse_run_kind(j.at("kind").get<std::string>());
    r.config = j.at("config");
    r.status = parse_status(j.at("status").get<std::string>());
    r.messages = j.at("messages").get<std::vector<std::string>>();
    const json& result = j.at("result");
    if (r.kind == RunKind::snapshot) {
      for (const auto& s : result) r.snapshots.push_back(snapshot_result_from_json(s));
    } else if (!result.is_null()) {
      r.summary = summary_from_json(result);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error("corrupt_store", std::string("malformed run record: ") + e.what());
  }
}

nlohmann::json canonical_config(RunKind kind, const nlohmann::json& config) {
  switch (kind) {
    case RunKind::summary: return analysis_to_json(analysis_from_json(config));
    case RunKind::snapshot: return snapshot_spec_to_json(snapshot_spec_from_json(config));
    case RunKind::comparison: return comparison_to_json(comparison_from_json(config));
  }
  return config;
}

std::string compute_run_id(const std::string& corpus_hash, RunKind kind,
                           const nlohmann::json& canonical) {
  ContentHasher h;
  h.field("run");
  h.field(corpus_hash);
  h.field(to_string(kind));
  h.field(canonical.dump());
  return h.hex_digest().substr(0, 32);
}

RunRecord execute_run(const Corpus& corpus, const std::string& corpus_id, RunKind kind,
                      const nlohmann::json& config, const MatrixCache* cache,
                      std::size_t workers) {
  RunRecord r;
  r.kind = kind;
  r.config = canonical_config(kind, config);
  r.corpus_id = corpus_id;
  r.corpus_name = corpus.name();
  r.corpus_hash = corpus.content_hash();
  r.run_id = compute_run_id(r.corpus_hash, kind, r.config);
  r.created_at = now_iso();
  try {
    switch (kind) {
      case RunKind::summary:
        r.summary = run_summary(corpus, analysis_from_json(r.config), cache);
        break;
      case RunKind::snapshot: {
        SnapshotSpec spec = snapshot_spec_from_json(r.config);
        spec.workers = workers;
        r.snapshots = snapshot_series(corpus, spec, cache);
        break;
      }
      case RunKind::comparison: {
        const ComparisonRequest req = comparison_from_json(r.config);
        r.summary = req.spec.mode == ComparisonMode::between_source
                        ? compare_between(corpus, req.spec, req.analysis, cache)
                        : compare_within(corpus, req.spec, req.analysis, cache);
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() == "invalid_config") throw;
    r.status = RunStatus::error;
    r.messages.push_back(e.code() + ": " + e.what());
    return r;
  }
  if (r.summary) {
    for (const auto& w : r.summary->warnings) r.messages.push_back(w);
  }
  for (const auto& s : r.snapshots) {
    if (!s.error_code.empty()) {
      r.messages.push_back(s.window.name + ": " + s.error_code + ": " + s.error);
    } else if (s.summary) {
      for (const auto& w : s.summary->warnings) r.messages.push_back(s.window.name + ": " + w);
    }
  }
  r.status = r.messages.empty() ? RunStatus::ok : RunStatus::warning;
  return r;
}

namespace {

void compare_summaries(const Summary& a, const Summary& b, const std::string& where,
                       double tolerance, ReplayReport& report) {
  if (a.phrase_list() != b.phrase_list()) {
    report.identical = false;
    if (report.message.empty()) report.message = where + "phrase lists differ";
    return;
  }
  for (std::size_t i = 0; i < a.phrases.size(); ++i) {
    const double d = std::abs(a.phrases[i].score - b.phrases[i].score);
    report.max_score_diff = std::max(report.max_score_diff, d);
    if (!(d <= tolerance)) {
      report.identical = false;
      if (report.message.empty()) report.message = where + "scores differ for " + a.phrases[i].phrase;
    }
  }
}

}  // namespace

ReplayReport verify_replay(const RunRecord& record, const Corpus& corpus, const MatrixCache* cache,
                           double tolerance) {
  ReplayReport report;
  if (corpus.content_hash() != record.corpus_hash) {
    report.message = "corpus hash differs from the recorded run";
    return report;
  }
  const RunRecord again = execute_run(corpus, record.corpus_id, record.kind, record.config, cache);
  report.identical = true;
  if (again.run_id != record.run_id) {
    report.identical = false;
    report.message = "configuration no longer canonicalizes to the recorded run id";
  }
  if (again.status != record.status) {
    report.identical = false;
    if (report.message.empty()) report.message = "status differs";
  }
  if (record.summary.has_value() != again.summary.has_value()) {
    report.identical = false;
    if (report.message.empty()) report.message = "result presence differs";
  } else if (record.summary) {
    compare_summaries(*record.summary, *again.summary, "", tolerance, report);
  }
  if (record.snapshots.size() != again.snapshots.size()) {
    report.identical = false;
    if (report.message.empty()) report.message = "window count differs";
  } else {
    for (std::size_t w = 0; w < record.snapshots.size(); ++w) {
      const auto& a = record.snapshots[w];
      const auto& b = again.snapshots[w];
      if (a.summary.has_value() != b.summary.has_value() || a.error_code != b.error_code) {
        report.identical = false;
        if (report.message.empty()) report.message = a.window.name + ": outcome differs";
      } else if (a.summary) {
        compare_summaries(*a.summary, *b.summary, a.window.name + ": ", tolerance, report);
      }
    }
  }
  if (report.identical) report.message = "identical";
  return report;
}

nlohmann::json corpus_info_to_json(const CorpusInfo& info) {
  return {{"id", info.id},
          {"name", info.name},
          {"hash", info.hash},
          {"documents", info.documents},
          {"provenance", info.provenance}};
}

namespace {

CorpusInfo corpus_info_from_json(const json& j) {
  return {j.at("id").get<std::string>(), j.at("name").get<std::string>(),
          j.at("hash").get<std::string>(), j.at("documents").get<std::size_t>(),
          j.value("provenance", json::object())};
}

}  // namespace

std::string corpus_id_for(const Corpus& corpus) {
  std::string slug;
  for (char c : corpus.name()) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) slug += static_cast<char>(std::tolower(u));
    else if (!slug.empty() && slug.back() != '-') slug += '-';
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  if (slug.empty()) slug = "corpus";
  if (slug.size() > 40) slug.resize(40);
  return slug + "-" + corpus.content_hash().substr(0, 12);
}

RunStore::RunStore(std::filesystem::path root, std::size_t workers)
    : root_(std::move(root)), workers_(std::max<std::size_t>(1, workers)), cache_(root_ / "cache") {
  std::error_code ec;
  for (const char* sub : {"corpora", "cache", "runs"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) {
      throw Error("store_unwritable", "cannot create " + (root_ / sub).string() + ": " + ec.message());
    }
  }
  const fs::path probe = root_ / "runs" / ".probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error("store_unwritable", "store path is not writable: " + root_.string());
  }
  fs::remove(probe, ec);
}

CorpusInfo RunStore::add_corpus(const Corpus& corpus) {
  CorpusInfo info{corpus_id_for(corpus), corpus.name(), corpus.content_hash(), corpus.size(),
                  corpus.provenance()};
  std::lock_guard write(write_mutex_);
  const fs::path meta = root_ / "corpora" / (info.id + ".json");
  if (fs::exists(meta)) return corpus_info_from_json(read_json_file(meta));
  std::ostringstream jsonl;
  write_jsonl(jsonl, corpus);
  write_atomically(root_ / "corpora" / (info.id + ".jsonl"), jsonl.str());
  write_atomically(meta, corpus_info_to_json(info).dump(2) + "\n");
  return info;
}

std::vector<CorpusInfo> RunStore::list_corpora() const {
  std::vector<CorpusInfo> out;
  for (const auto& entry : fs::directory_iterator(root_ / "corpora")) {
    if (entry.path().extension() != ".json") continue;
    out.push_back(corpus_info_from_json(read_json_file(entry.path())));
  }
  std::sort(out.begin(), out.end(), [](const CorpusInfo& a, const CorpusInfo& b) { return a.id < b.id; });
  return out;
}

std::optional<CorpusInfo> RunStore::find_corpus(const std::string& id_or_name) const {
  if (id_or_name.empty() || id_or_name.find('/') != std::string::npos ||
      id_or_name.find("..") != std::string::npos) {
    return std::nullopt;
  }
  const fs::path meta = root_ / "corpora" / (id_or_name + ".json");
  if (fs::exists(meta)) return corpus_info_from_json(read_json_file(meta));
  std::optional<CorpusInfo> found;
  for (auto& info : list_corpora()) {
    if (info.name != id_or_name) continue;
    if (found) {
      throw Error("ambiguous_corpus", "several stored corpora are named '" + id_or_name + "'");
    }
    found = std::move(info);
  }
  return found;
}

std::shared_ptr<const Corpus> RunStore::load_corpus(const std::string& id_or_name) const {
  const auto info = find_corpus(id_or_name);
  if (!info) throw Error("not_found", "unknown corpus: " + id_or_name);
  {
    std::lock_guard lock(read_mutex_);
    if (auto it = loaded_.find(info->id); it != loaded_.end()) return it->second;
  }
  IngestOptions opts;
  opts.name = info->name;
  opts.fail_fast = true;
  const fs::path path = root_ / "corpora" / (info->id + ".jsonl");
  Corpus corpus = ingest_jsonl_file(path.string(), opts);
  if (corpus.content_hash() != info->hash) {
    throw Error("corrupt_store", "stored corpus " + info->id + " no longer matches its hash");
  }
  corpus = Corpus(info->name, std::vector<Document>(corpus.documents()), info->provenance);
  auto shared = std::make_shared<const Corpus>(std::move(corpus));
  std::lock_guard lock(read_mutex_);
  return loaded_.try_emplace(info->id, std::move(shared)).first->second;
}

std::optional<RunRecord> RunStore::find_run(const std::string& run_id) const {
  if (run_id.empty() || run_id.find_first_not_of("0123456789abcdef") != std::string::npos) {
    return std::nullopt;
  }
  const fs::path path = root_ / "runs" / (run_id + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return run_from_json(read_json_file(path));
}

std::vector<nlohmann::json> RunStore::list_runs() const {
  std::vector<json> out;
  std::ifstream in(root_ / "runs" / "log.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception&) {
      // A torn final line from an interrupted write is skipped.
    }
  }
  return out;
}

std::pair<RunRecord, bool> RunStore::put_run(const RunRecord& record) {
  std::lock_guard write(write_mutex_);
  const fs::path path = root_ / "runs" / (record.run_id + ".json");
  if (fs::exists(path)) return {run_from_json(read_json_file(path)), false};
  write_atomically(path, run_to_json(record).dump(2) + "\n");
  std::ofstream log(root_ / "runs" / "log.jsonl", std::ios::app);
  log << json{{"run_id", record.run_id},
              {"created_at", record.created_at},
              {"kind", std::string(to_string(record.kind))},
              {"corpus_id", record.corpus_id},
              {"status", std::string(to_string(record.status))}}
             .dump()
      << '\n';
  return {record, true};
}

std::pair<RunRecord, bool> RunStore::submit(const std::string& corpus_id, RunKind kind,
                                            const nlohmann::json& config) {
  const auto corpus = load_corpus(corpus_id);
  const std::string id = corpus_id_for(*corpus);
  const json canonical = canonical_config(kind, config);
  if (auto existing = find_run(compute_run_id(corpus->content_hash(), kind, canonical))) {
    return {std::move(*existing), false};
  }
  return put_run(execute_run(*corpus, id, kind, canonical, &cache_, workers_));
}

}  // namespace cosum
