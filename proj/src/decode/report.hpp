// decode/report.hpp

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

#ifndef AVLEARN_DECODE_REPORT_HPP
#define AVLEARN_DECODE_REPORT_HPP

#include <string>
#include <vector>

namespace avlearn {

// Per-utterance decode outcome, persisted as decode.csv
// (columns utt,ref_len,edits) next to a wer.json summary.
struct DecodeRow {
  std::string utt;
  int ref_len = 0;
  int edits = 0;
};

void save_decode_rows(const std::vector<DecodeRow> &rows, double wer_value,
                      const std::string &dir);

struct ReportPaths {
  std::string iterations_csv;     // run,variant,iteration,layer,K,purity,nmi,wer
  std::string variants_csv;       // run,variant,iterations,final_purity,final_nmi,wer
  std::string wer_by_length_csv;  // run,ref_len,count,wer
};

// Assembles comparison tables from finished run directories. Every artifact
// referenced by a run record must exist; all gaps are listed in one error.
// The WER column is filled for runs that contain a wer.json; the by-length
// table draws on decode.csv files and partitions each run's decoded set.
ReportPaths report(const std::vector<std::string> &run_dirs, const std::string &out_dir);

}  // namespace avlearn

#endif  // AVLEARN_DECODE_REPORT_HPP
