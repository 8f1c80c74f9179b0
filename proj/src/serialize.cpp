#include "xmodal/serialize.hpp"

#include <sstream>

#include "xmodal/error.hpp"

namespace xmodal {
namespace {

using nlohmann::json;

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

json to_json(const RunManifest& manifest) {
  return {{"command", manifest.command},
          {"inputs", manifest.inputs},
          {"parameters", manifest.parameters},
          {"tool_version", manifest.tool_version}};
}

RunManifest run_manifest_from_json(const json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.inputs = j.at("inputs").get<std::vector<std::string>>();
  m.parameters = j.at("parameters");
  m.tool_version = j.at("tool_version").get<std::string>();
  return m;
}

json to_json(const ScoreMatrix& matrix) {
  json values = json::array();
  for (std::size_t r = 0; r < matrix.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < matrix.cols; ++c) row.push_back(matrix.at(r, c));
    values.push_back(std::move(row));
  }
  return {{"metric", matrix.label()},
          {"orientation",
           matrix.orientation == Orientation::kSimilarity ? "similarity" : "dissimilarity"},
          {"rows", matrix.rows},
          {"cols", matrix.cols},
          {"row_ids", matrix.row_ids},
          {"col_ids", matrix.col_ids},
          {"values", std::move(values)}};
}

std::string to_csv(const ScoreMatrix& matrix) {
  std::string out;
  for (const auto& id : matrix.col_ids) out += "," + csv_field(id);
  out += '\n';
  for (std::size_t r = 0; r < matrix.rows; ++r) {
    out += csv_field(matrix.row_ids[r]);
    for (std::size_t c = 0; c < matrix.cols; ++c) out += "," + format_double(matrix.at(r, c));
    out += '\n';
  }
  return out;
}

json to_json(const RetrievalReport& report) {
  return {{"direction", direction_name(report.direction)},
          {"metric", report.metric},
          {"query_count", report.query_count},
          {"candidate_count", report.candidate_count},
          {"k", report.k_values},
          {"hits", report.hits},
          {"relevant_found", report.relevant_found},
          {"hit_rate", report.hit_rate},
          {"precision", report.precision},
          {"precision_upper_bound", report.upper_bound}};
}

RetrievalReport retrieval_report_from_json(const json& j) {
  try {
    RetrievalReport r;
    const auto dir = parse_direction(j.at("direction").get<std::string>());
    if (!dir) throw Error(ErrorCode::kParse, "unknown direction in report");
    r.direction = *dir;
    r.metric = j.at("metric").get<std::string>();
    r.query_count = j.at("query_count").get<std::size_t>();
    r.candidate_count = j.value("candidate_count", std::size_t{0});
    r.k_values = j.at("k").get<std::vector<std::size_t>>();
    r.hits = j.at("hits").get<std::vector<std::size_t>>();
    r.relevant_found = j.value("relevant_found", std::vector<std::size_t>{});
    r.hit_rate = j.at("hit_rate").get<std::vector<double>>();
    r.precision = j.at("precision").get<std::vector<double>>();
    r.upper_bound = j.value("precision_upper_bound", std::vector<double>{});
    if (r.hits.size() != r.k_values.size() || r.hit_rate.size() != r.k_values.size()) {
      throw Error(ErrorCode::kParse, "report arrays disagree with its K list");
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed retrieval report: ") + e.what());
  }
}

std::string retrieval_csv_header() {
  return "label,direction,metric,k,queries,hits,hit_rate,precision,precision_upper_bound\n";
}

std::string to_csv_rows(const RetrievalReport& report, const std::string& label) {
  std::string out;
  for (std::size_t i = 0; i < report.k_values.size(); ++i) {
    out += csv_field(label) + "," + std::string(direction_name(report.direction)) + "," +
           csv_field(report.metric) + "," + std::to_string(report.k_values[i]) + "," +
           std::to_string(report.query_count) + "," + std::to_string(report.hits[i]) + "," +
           format_double(report.hit_rate[i]) + "," + format_double(report.precision[i]) + "," +
           format_double(report.upper_bound.empty() ? 1.0 : report.upper_bound[i]) + "\n";
  }
  return out;
}

std::string rankings_tsv(const std::vector<Ranking>& rankings) {
  std::string out = "query_id\trank\tcandidate_id\tscore\n";
  for (const auto& r : rankings) {
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      out += r.query_id + "\t" + std::to_string(i + 1) + "\t" + r.candidate_ids[i] + "\t" +
             format_double(r.scores[i]) + "\n";
    }
  }
  return out;
}

json to_json(const GapReport& report) {
  return {{"centroid_gap", report.centroid_gap},
          {"w2_mean", report.w2_mean},
          {"w2_batches", report.w2_batches},
          {"batch_size", report.batch_size},
          {"dropped_rows", report.dropped_rows},
          {"seed", report.seed},
          {"w2_batch_values", report.batch_values}};
}

}  // namespace xmodal
