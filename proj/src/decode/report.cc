// decode/report.cc

// Copyright 2026  avlearn authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "decode/report.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "train/trainer.hpp"
#include "util/common.hpp"

namespace fs = std::filesystem;

namespace avlearn {

void save_decode_rows(const std::vector<DecodeRow> &rows, double wer_value,
                      const std::string &dir) {
  fs::create_directories(dir);
  std::ofstream csv(fs::path(dir) / "decode.csv");
  if (!csv) throw IoError("cannot write decode.csv in " + dir);
  csv << "utt,ref_len,edits\n";
  for (const DecodeRow &r : rows) csv << r.utt << "," << r.ref_len << "," << r.edits << "\n";

  nlohmann::json j;
  j["wer"] = wer_value;
  j["utterances"] = rows.size();
  std::ofstream js(fs::path(dir) / "wer.json");
  if (!js) throw IoError("cannot write wer.json in " + dir);
  js << j.dump(2) << "\n";
}

namespace {

std::optional<double> read_wer(const std::string &dir) {
  std::ifstream is(fs::path(dir) / "wer.json");
  if (!is) return std::nullopt;
  nlohmann::json j;
  try {
    is >> j;
    return j.at("wer").get<double>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError("bad wer.json in " + dir + ": " + e.what());
  }
}

std::vector<DecodeRow> read_decode_rows(const std::string &dir) {
  std::ifstream is(fs::path(dir) / "decode.csv");
  std::vector<DecodeRow> rows;
  if (!is) return rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    DecodeRow r;
    std::string f;
    std::getline(ss, r.utt, ',');
    std::getline(ss, f, ',');
    r.ref_len = std::stoi(f);
    std::getline(ss, f, ',');
    r.edits = std::stoi(f);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

ReportPaths report(const std::vector<std::string> &run_dirs, const std::string &out_dir) {
  if (run_dirs.empty()) throw ParamError("report: empty run list");

  std::vector<RunRecord> runs;
  std::vector<std::string> missing;
  for (const std::string &dir : run_dirs) {
    RunRecord r = load_run_record(dir);
    for (const IterationRecord &ir : r.iterations)
      for (const std::string &artifact : {ir.checkpoint, ir.codebook_file, ir.targets_file})
        if (!fs::exists(artifact)) missing.push_back(artifact);
    runs.push_back(std::move(r));
  }
  if (!missing.empty()) {
    std::string msg = "report: missing run artifacts:";
    for (const std::string &m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }

  fs::create_directories(out_dir);
  ReportPaths out;
  out.iterations_csv = (fs::path(out_dir) / "iterations.csv").string();
  out.variants_csv = (fs::path(out_dir) / "variants.csv").string();
  out.wer_by_length_csv = (fs::path(out_dir) / "wer_by_length.csv").string();

  std::ofstream it_csv(out.iterations_csv);
  if (!it_csv) throw IoError("cannot write " + out.iterations_csv);
  it_csv << "run,variant,iteration,layer,K,purity,nmi,wer\n";
  for (const RunRecord &r : runs) {
    std::optional<double> w = read_wer(r.dir);
    for (const IterationRecord &ir : r.iterations) {
      it_csv << r.dir << "," << r.variant << "," << ir.iteration << "," << ir.layer << ","
             << ir.K << "," << ir.purity << "," << ir.nmi << ",";
      if (w && ir.iteration == int(r.iterations.size())) it_csv << *w;
      it_csv << "\n";
    }
  }
  it_csv.close();

  std::ofstream v_csv(out.variants_csv);
  if (!v_csv) throw IoError("cannot write " + out.variants_csv);
  v_csv << "run,variant,iterations,final_purity,final_nmi,wer\n";
  for (const RunRecord &r : runs) {
    const IterationRecord &last = r.iterations.back();
    std::optional<double> w = read_wer(r.dir);
    v_csv << r.dir << "," << r.variant << "," << r.iterations.size() << "," << last.purity
          << "," << last.nmi << ",";
    if (w) v_csv << *w;
    v_csv << "\n";
  }
  v_csv.close();

  std::ofstream l_csv(out.wer_by_length_csv);
  if (!l_csv) throw IoError("cannot write " + out.wer_by_length_csv);
  l_csv << "run,ref_len,count,wer\n";
  for (const RunRecord &r : runs) {
    std::map<int, std::pair<long, long>> buckets;  // ref_len -> (count, edits)
    for (const DecodeRow &row : read_decode_rows(r.dir)) {
      buckets[row.ref_len].first += 1;
      buckets[row.ref_len].second += row.edits;
    }
    for (const auto &[len, agg] : buckets)
      l_csv << r.dir << "," << len << "," << agg.first << ","
            << double(agg.second) / double(agg.first * len) << "\n";
  }
  l_csv.close();
  return out;
}

}  // namespace avlearn
