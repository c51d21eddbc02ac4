// eval/oracles.hpp

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

// Exact self-check suite: every check recomputes its expected answer through
// an independent route (finite differences, exhaustive enumeration, brute
// force) and compares against the production code. Shared by the `selftest`
// command and the test binaries.

#ifndef AVLEARN_EVAL_ORACLES_HPP
#define AVLEARN_EVAL_ORACLES_HPP

#include <string>
#include <vector>

namespace avlearn {

struct OracleResult {
  std::string name;
  bool pass = false;
  std::string detail;  // worst-case numbers, counts
};

OracleResult oracle_gradients(uint64_t seed);          // finite differences, full model
OracleResult oracle_ctc_enumeration(uint64_t seed);    // vs exhaustive alignment sums
OracleResult oracle_beam_exhaustive(uint64_t seed);    // vs brute-force best labeling
OracleResult oracle_metrics_bruteforce(uint64_t seed); // purity/NMI vs contingency
OracleResult oracle_kmeans(uint64_t seed);             // monotone Lloyd + exact 1-D case
OracleResult oracle_masking_examples(uint64_t seed);   // worked substitution examples
OracleResult oracle_dropout_frequencies(uint64_t seed);
OracleResult oracle_span_coverage(uint64_t seed);

// All eight, in criterion order.
std::vector<OracleResult> run_all_oracles(uint64_t seed);

}  // namespace avlearn

#endif  // AVLEARN_EVAL_ORACLES_HPP
