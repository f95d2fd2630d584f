#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "vdr/error.hpp"
#include "vdr/predictions.hpp"

namespace vdr {

namespace {

using json = nlohmann::ordered_json;

bool row_order(const PredictionRow& a, const PredictionRow& b) {
  if (a.dialog_id != b.dialog_id) return a.dialog_id < b.dialog_id;
  return a.round < b.round;
}

}  // namespace

double to_file_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

void round_to_file_precision(PredictionSet& preds) {
  for (PredictionRow& row : preds) {
    for (double& v : row.log_probs) v = to_file_precision(v);
  }
}

void save_predictions(const PredictionSet& preds, const std::string& path) {
  PredictionSet sorted = preds;
  std::sort(sorted.begin(), sorted.end(), row_order);
  round_to_file_precision(sorted);

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "prediction-parse:0", "cannot open prediction file for writing: " + path);
  for (const PredictionRow& row : sorted) {
    json j;
    j["dialog_id"] = row.dialog_id;
    j["round"] = row.round;
    j["log_probs"] = row.log_probs;
    out << j.dump() << '\n';
  }
  out.flush();
  require(out.good(), "prediction-parse:0", "failed writing prediction file: " + path);
}

PredictionSet load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "prediction-parse:0", "cannot open prediction file: " + path);
  PredictionSet preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "prediction-parse:" + std::to_string(line_no);
    PredictionRow row;
    try {
      const json j = json::parse(line);
      row.dialog_id = j.at("dialog_id").get<std::int64_t>();
      row.round = j.at("round").get<int>();
      row.log_probs = j.at("log_probs").get<std::vector<double>>();
    } catch (const json::exception& e) {
      fail(where, std::string("invalid prediction line: ") + e.what());
    }
    require(!row.log_probs.empty(), where, "prediction line has no log_probs");
    for (double& v : row.log_probs) v = to_file_precision(v);
    preds.push_back(std::move(row));
  }
  return preds;
}

}  // namespace vdr
