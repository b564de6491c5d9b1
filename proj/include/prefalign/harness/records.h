// Copyright 2026 The PrefAlign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// One row per run: the resolved grid cell, the measured gap, and timing.

#ifndef PREFALIGN_HARNESS_RECORDS_H_
#define PREFALIGN_HARNESS_RECORDS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "prefalign/harness/config.h"
#include "prefalign/noise.h"
#include "prefalign/stats.h"

namespace prefalign {

struct RunRecord {
  std::size_t run_index = 0;
  Experiment experiment = Experiment::kOffline;
  Solver solver = Solver::kPrivChipo;
  Ordering ordering = Ordering::kClean;
  AdversarySpec adversary;
  double epsilon = kNoPrivacy;
  double alpha = 0.0;
  // Dataset size (offline) or number of rounds (online).
  std::size_t size = 0;
  std::size_t replicate = 0;
  uint64_t seed = 0;
  double beta = 1.0;
  double gamma = 0.0;
  std::size_t chosen_index = 0;
  // J(pi*) - J(pi_hat) offline, J_beta(pi*_beta) - J_beta(pi_hat) online.
  double gap = 0.0;
  // Share of observed labels that differ from the clean ones.
  double flip_rate = 0.0;
  double wall_time = 0.0;
};

// Column order of the records CSV; wall_time is last.
const std::vector<std::string>& RecordColumns();

void WriteRecordsHeader(std::ostream& out);
void WriteRecordRow(std::ostream& out, const RunRecord& record);
// Parses a records CSV. A final line without a newline (an interrupted
// write) is ignored. Malformed complete lines raise IoError.
std::vector<RunRecord> ReadRecordsCsv(std::istream& in);
std::vector<RunRecord> ReadRecordsFile(const std::string& path);

// Numeric view of a column: epsilon, alpha, size (aliases n and T),
// replicate, seed, beta, gamma, chosen_index, gap, flip_rate, wall_time.
double RecordValue(const RunRecord& record, const std::string& field);
// Text view of any column, as written to CSV.
std::string RecordText(const RunRecord& record, const std::string& field);

// Log-log least squares of per-x medians of y_field against x_field.
// DegenerateFit with fewer than 3 distinct x values.
LineFit FitScaling(const std::vector<RunRecord>& records,
                   const std::string& x_field, const std::string& y_field);

// Per grid cell (every column except replicate, seed, chosen_index, gap,
// flip_rate, wall_time): count, median, quartiles and mean of the gap.
void WriteSummaryCsv(std::ostream& out, const std::vector<RunRecord>& records);

}  // namespace prefalign

#endif  // PREFALIGN_HARNESS_RECORDS_H_
