#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosum/pipeline.hpp"

namespace cosum {

// Analysis configuration document:
//   {"topic", "terms": [...], "ban": [...],
//    "rule": "count:1" | {"kind": "count"|"hcount", "K"} |
//            {"kind": "metadata", "source", "start", "end"},
//    "unit", "scheme", "strip": "containment"|"exact", "stoplist": [...],
//    "selector": {"method", "k", "solver_tol", "max_sweeps",
//                 "search": {"shrink_factor", "depth", "floor_exponent"}},
//    "vocab": {"min_n", "max_n", "min_df"}}
// "method" and "k" are also accepted at top level. Unknown keys are
// rejected with Error{"invalid_config"}.
AnalysisConfig analysis_from_json(const nlohmann::json& j, bool require_terms = true);
// Fully explicit form; equal configurations serialize identically.
nlohmann::json analysis_to_json(const AnalysisConfig& config);

nlohmann::json rule_to_json(const LabelingRule& rule);
LabelingRule rule_from_json(const nlohmann::json& j);

// Analysis keys plus "windows": [{"name", "start", "end"}], "per_window_vocab", "workers".
SnapshotSpec snapshot_spec_from_json(const nlohmann::json& j);
nlohmann::json snapshot_spec_to_json(const SnapshotSpec& spec);

// Analysis keys plus "mode": "between"|"within", "source_a", "source_b",
// "source", "topic_filter": {"topic", "terms", "ban"}.
struct ComparisonRequest {
  ComparisonSpec spec;
  AnalysisConfig analysis;
};
ComparisonRequest comparison_from_json(const nlohmann::json& j);
nlohmann::json comparison_to_json(const ComparisonRequest& request);

nlohmann::json summary_to_json(const Summary& summary);
Summary summary_from_json(const nlohmann::json& j);
// rank,phrase,score,lambda,method
std::string summary_to_csv(const Summary& summary);

nlohmann::json snapshot_result_to_json(const SnapshotResult& result);
SnapshotResult snapshot_result_from_json(const nlohmann::json& j);
nlohmann::json snapshot_results_to_json(const std::vector<SnapshotResult>& results);

nlohmann::json kwic_to_json(const std::vector<KwicSnippet>& snippets);

}  // namespace cosum
