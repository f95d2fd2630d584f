#include <fstream>

#include <json.hpp>

#include "vdr/dialog.hpp"
#include "vdr/error.hpp"
#include "vdr/tokenize.hpp"

namespace vdr {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad_record(const std::string& id, const std::string& why) {
  fail("dataset-parse:" + id, why);
}

void validate_round(const RawRound& r, int n_cand, const std::string& where) {
  require(static_cast<int>(r.candidates.size()) == n_cand, "candidate-count",
          where + ": round has " + std::to_string(r.candidates.size()) + " candidates, expected " +
              std::to_string(n_cand));
  require(r.gt_index >= 0 && r.gt_index < n_cand, "candidate-count",
          where + ": gt_index " + std::to_string(r.gt_index) + " outside [0, " +
              std::to_string(n_cand) + ")");
  if (r.relevance) {
    const auto& rel = *r.relevance;
    if (static_cast<int>(rel.size()) != n_cand) bad_record(where, "relevance length mismatch");
    bool any_positive = false;
    for (double v : rel) {
      if (!(v >= 0.0 && v <= 1.0)) bad_record(where, "relevance outside [0,1]");
      any_positive = any_positive || v > 0.0;
    }
    if (!(rel[r.gt_index] > 0.0)) bad_record(where, "ground truth has zero relevance");
    if (!any_positive) bad_record(where, "relevance has no positive entry");
  }
}

}  // namespace

RawDataset load_raw_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "dataset-parse:top", "cannot open dataset file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    bad_record("top", std::string("invalid JSON: ") + e.what());
  }

  RawDataset data;
  try {
    require(root.at("version").get<int>() == 1, "dataset-parse:top", "unsupported dataset version");
    data.n_cand = root.at("n_cand").get<int>();
    data.n_rounds = root.at("n_rounds").get<int>();
    require(data.n_cand >= 2, "dataset-parse:top", "n_cand must be at least 2");
    require(data.n_rounds >= 1, "dataset-parse:top", "n_rounds must be at least 1");
    for (const json& jd : root.at("dialogs")) {
      RawDialog d;
      d.dialog_id = jd.at("dialog_id").get<std::int64_t>();
      const std::string where = std::to_string(d.dialog_id);
      d.image_id = jd.at("image_id").get<std::int64_t>();
      d.caption = jd.at("caption").get<std::string>();
      for (const json& jr : jd.at("rounds")) {
        RawRound r;
        r.question = jr.at("question").get<std::string>();
        r.candidates = jr.at("candidates").get<std::vector<std::string>>();
        r.gt_index = jr.at("gt_index").get<int>();
        const json& rel = jr.at("relevance");
        if (!rel.is_null()) r.relevance = rel.get<std::vector<double>>();
        validate_round(r, data.n_cand, where);
        d.rounds.push_back(std::move(r));
      }
      if (static_cast<int>(d.rounds.size()) != data.n_rounds)
        bad_record(where, "dialog has " + std::to_string(d.rounds.size()) + " rounds, expected " +
                              std::to_string(data.n_rounds));
      data.dialogs.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    bad_record("top", std::string("missing or mistyped field: ") + e.what());
  }
  return data;
}

void save_raw_dataset(const RawDataset& data, const std::string& path) {
  json root;
  root["version"] = 1;
  root["n_cand"] = data.n_cand;
  root["n_rounds"] = data.n_rounds;
  json dialogs = json::array();
  for (const RawDialog& d : data.dialogs) {
    json jd;
    jd["dialog_id"] = d.dialog_id;
    jd["image_id"] = d.image_id;
    jd["caption"] = d.caption;
    json rounds = json::array();
    for (const RawRound& r : d.rounds) {
      json jr;
      jr["question"] = r.question;
      jr["candidates"] = r.candidates;
      jr["gt_index"] = r.gt_index;
      if (r.relevance) {
        jr["relevance"] = *r.relevance;
      } else {
        jr["relevance"] = nullptr;
      }
      rounds.push_back(std::move(jr));
    }
    jd["rounds"] = std::move(rounds);
    dialogs.push_back(std::move(jd));
  }
  root["dialogs"] = std::move(dialogs);

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "dataset-parse:top", "cannot open dataset file for writing: " + path);
  out << root.dump(2) << '\n';
  out.flush();
  require(out.good(), "dataset-parse:top", "failed writing dataset file: " + path);
}

Dataset tokenize_dataset(const RawDataset& raw, const Vocabulary& vocab,
                         const std::unordered_set<std::string>* keep_verbatim) {
  auto to_ids = [&](const std::string& text) {
    std::vector<std::uint32_t> ids;
    for (const std::string& tok : normalize_tokenize(text, keep_verbatim)) {
      ids.push_back(vocab.id_of(tok));
    }
    return ids;
  };

  Dataset data;
  data.n_cand = raw.n_cand;
  data.n_rounds = raw.n_rounds;
  for (const RawDialog& rd : raw.dialogs) {
    Dialog d;
    d.dialog_id = rd.dialog_id;
    d.image_id = rd.image_id;
    d.caption = to_ids(rd.caption);
    for (const RawRound& rr : rd.rounds) {
      Round r;
      r.question = to_ids(rr.question);
      for (const std::string& cand : rr.candidates) r.candidates.push_back(to_ids(cand));
      r.gt_index = rr.gt_index;
      r.relevance = rr.relevance;
      d.rounds.push_back(std::move(r));
    }
    data.dialogs.push_back(std::move(d));
  }
  return data;
}

Dataset load_dialogs(const std::string& path, const Vocabulary& vocab,
                     const std::unordered_set<std::string>* keep_verbatim) {
  return tokenize_dataset(load_raw_dataset(path), vocab, keep_verbatim);
}

}  // namespace vdr
