#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosum/config_json.hpp"
#include "cosum/corpus.hpp"
#include "cosum/matrix_cache.hpp"
#include "cosum/pipeline.hpp"

namespace cosum {

enum class RunKind { summary, snapshot, comparison };
enum class RunStatus { ok, warning, error };

std::string_view to_string(RunKind kind);
RunKind parse_run_kind(std::string_view text);
std::string_view to_string(RunStatus status);

struct RunRecord {
  std::string run_id;
  std::string created_at;
  std::string corpus_id;
  std::string corpus_name;
  std::string corpus_hash;
  RunKind kind = RunKind::summary;
  nlohmann::json config;  // canonical form
  std::optional<Summary> summary;
  std::vector<SnapshotResult> snapshots;
  RunStatus status = RunStatus::ok;
  std::vector<std::string> messages;
};

nlohmann::json run_to_json(const RunRecord& record);
RunRecord run_from_json(const nlohmann::json& j);

// Parses a configuration document for `kind` and returns its canonical form.
// Throws Error{"invalid_config"}.
nlohmann::json canonical_config(RunKind kind, const nlohmann::json& config);

std::string compute_run_id(const std::string& corpus_hash, RunKind kind,
                           const nlohmann::json& canonical);

// Runs the analysis described by a configuration. Analysis failures are
// captured in the record (status error); malformed configurations throw.
RunRecord execute_run(const Corpus& corpus, const std::string& corpus_id, RunKind kind,
                      const nlohmann::json& config, const MatrixCache* cache = nullptr,
                      std::size_t workers = 1);

struct ReplayReport {
  bool identical = false;
  double max_score_diff = 0.0;
  std::string message;
};

// Re-executes the record's configuration and compares phrase lists and scores.
ReplayReport verify_replay(const RunRecord& record, const Corpus& corpus,
                           const MatrixCache* cache = nullptr, double tolerance = 1e-10);

struct CorpusInfo {
  std::string id;
  std::string name;
  std::string hash;
  std::size_t documents = 0;
  nlohmann::json provenance;
};
nlohmann::json corpus_info_to_json(const CorpusInfo& info);

// Directory layout:
//   corpora/<id>.jsonl, corpora/<id>.json   stored corpora and their metadata
//   cache/                                  count-matrix cache
//   runs/<run_id>.json, runs/log.jsonl      run records and the append-only index
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root, std::size_t workers = 1);

  const std::filesystem::path& root() const { return root_; }
  const MatrixCache& matrix_cache() const { return cache_; }

  // Stores the corpus unless an identical one is present.
  CorpusInfo add_corpus(const Corpus& corpus);
  std::vector<CorpusInfo> list_corpora() const;
  // Looks up by id, then by unique name.
  std::optional<CorpusInfo> find_corpus(const std::string& id_or_name) const;
  // Throws Error{"not_found"}.
  std::shared_ptr<const Corpus> load_corpus(const std::string& id_or_name) const;

  std::optional<RunRecord> find_run(const std::string& run_id) const;
  std::vector<nlohmann::json> list_runs() const;
  // Returns the stored record and whether this call wrote it.
  std::pair<RunRecord, bool> put_run(const RunRecord& record);
  // Returns the cached run for an identical configuration, else executes and stores.
  std::pair<RunRecord, bool> submit(const std::string& corpus_id, RunKind kind,
                                    const nlohmann::json& config);

 private:
  std::filesystem::path root_;
  std::size_t workers_;
  MatrixCache cache_;
  mutable std::mutex read_mutex_;
  std::mutex write_mutex_;
  mutable std::map<std::string, std::shared_ptr<const Corpus>> loaded_;
};

std::string corpus_id_for(const Corpus& corpus);

}  // namespace cosum
