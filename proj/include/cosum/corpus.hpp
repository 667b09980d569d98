#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace cosum {

using TimePoint = std::chrono::sys_seconds;

// Accepts "YYYY-MM-DD" and "YYYY-MM-DDTHH:MM[:SS[.frac]][Z|+HH:MM|-HHMM]"
// (a space may replace the 'T'). Offsets are folded into UTC.
std::optional<TimePoint> parse_iso8601(std::string_view text);
std::string format_iso8601(TimePoint t);

struct Document {
  std::string id;
  std::string source;
  std::optional<TimePoint> published_at;
  std::optional<std::string> title;
  std::string body;
  // Fields of the input record this library does not interpret.
  nlohmann::json extra = nlohmann::json::object();
};

enum class UnitKind { article, paragraph, headline };

std::string_view to_string(UnitKind kind);
UnitKind parse_unit_kind(std::string_view text);

struct DocumentUnit {
  std::string unit_id;
  std::string parent_id;
  std::size_t parent_index = 0;  // position of the parent in Corpus::documents
  UnitKind kind = UnitKind::article;
  std::size_t ordinal = 0;
  std::string text;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string name, std::vector<Document> documents,
         nlohmann::json provenance = nlohmann::json::object());

  const std::string& name() const { return name_; }
  const std::vector<Document>& documents() const { return documents_; }
  const nlohmann::json& provenance() const { return provenance_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  const Document& document(std::size_t index) const { return documents_.at(index); }
  std::optional<std::size_t> find(std::string_view id) const;

  // SHA-256 over every document field in order; stable across processes.
  std::string content_hash() const;

 private:
  std::string name_;
  std::vector<Document> documents_;
  nlohmann::json provenance_ = nlohmann::json::object();
  std::unordered_map<std::string, std::size_t> index_;
};

struct IngestOptions {
  std::string name = "corpus";
  std::string source_path;  // recorded in provenance only
  bool fail_fast = false;
};

struct IngestIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestReport {
  std::size_t lines_read = 0;
  std::size_t accepted = 0;
  std::vector<IngestIssue> issues;
};

// One Document per valid line, in input order. Invalid lines and duplicate
// ids are collected in `report` (or thrown with fail_fast). Throws
// Error{"empty_corpus"} when nothing was accepted.
Corpus ingest_jsonl(std::istream& in, const IngestOptions& options,
                    IngestReport* report = nullptr);
Corpus ingest_jsonl_file(const std::string& path, IngestOptions options,
                         IngestReport* report = nullptr);

nlohmann::json document_to_json(const Document& doc);
void write_jsonl(std::ostream& out, const Corpus& corpus);

std::vector<DocumentUnit> segment(const Corpus& corpus, UnitKind kind);

// Splits on runs of blank lines; each paragraph is trimmed, empty ones dropped.
std::vector<std::string> split_paragraphs(std::string_view body);

// Units whose parent satisfies start <= published_at < end.
std::vector<DocumentUnit> filter_window(const std::vector<DocumentUnit>& units,
                                        const Corpus& corpus, TimePoint start,
                                        TimePoint end);
// Same membership test, returning positions into `units`.
std::vector<std::size_t> window_indices(const std::vector<DocumentUnit>& units,
                                        const Corpus& corpus, TimePoint start,
                                        TimePoint end);

}  // namespace cosum
