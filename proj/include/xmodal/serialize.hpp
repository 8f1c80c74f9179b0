#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "xmodal/geometry.hpp"
#include "xmodal/metrics.hpp"
#include "xmodal/retrieval.hpp"

namespace xmodal {

// Embedded in every report so a run can be audited and repeated.
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  nlohmann::json parameters = nlohmann::json::object();
  std::string tool_version = XMODAL_VERSION;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest run_manifest_from_json(const nlohmann::json& j);

// {"metric", "orientation", "row_ids", "col_ids", "values": [[...], ...]}
nlohmann::json to_json(const ScoreMatrix& matrix);
// Header row: empty corner cell then column ids; each line starts with its row id.
std::string to_csv(const ScoreMatrix& matrix);

nlohmann::json to_json(const RetrievalReport& report);
RetrievalReport retrieval_report_from_json(const nlohmann::json& j);
// One row per (direction, metric, k).
std::string retrieval_csv_header();
std::string to_csv_rows(const RetrievalReport& report, const std::string& label = {});

// query_id, rank (1-based), candidate_id, score
std::string rankings_tsv(const std::vector<Ranking>& rankings);

nlohmann::json to_json(const GapReport& report);

// Quotes a CSV field when it contains separators or quotes.
std::string csv_field(const std::string& value);

}  // namespace xmodal
