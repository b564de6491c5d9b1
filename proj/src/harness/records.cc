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

#include "prefalign/harness/records.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "prefalign/error.h"

namespace prefalign {
namespace {

double ParseNumber(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') {
    throw Error(ErrorCode::kIoError, "bad number '" + s + "' in records");
  }
  return v;
}

uint64_t ParseUnsigned(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') {
    throw Error(ErrorCode::kIoError, "bad integer '" + s + "' in records");
  }
  return v;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

const std::vector<std::string>& RecordColumns() {
  static const std::vector<std::string> kColumns = {
      "run_index", "experiment", "solver",       "ordering", "adversary",
      "epsilon",   "alpha",      "size",         "replicate", "seed",
      "beta",      "gamma",      "chosen_index", "gap",      "flip_rate",
      "wall_time"};
  return kColumns;
}

std::string RecordText(const RunRecord& r, const std::string& field) {
  if (field == "run_index") return std::to_string(r.run_index);
  if (field == "experiment") return ExperimentName(r.experiment);
  if (field == "solver") return SolverName(r.solver);
  if (field == "ordering") return OrderingName(r.ordering);
  if (field == "adversary") return AdversaryName(r.adversary);
  if (field == "epsilon") return FormatDouble(r.epsilon);
  if (field == "alpha") return FormatDouble(r.alpha);
  if (field == "size" || field == "n" || field == "T") {
    return std::to_string(r.size);
  }
  if (field == "replicate") return std::to_string(r.replicate);
  if (field == "seed") return std::to_string(r.seed);
  if (field == "beta") return FormatDouble(r.beta);
  if (field == "gamma") return FormatDouble(r.gamma);
  if (field == "chosen_index") return std::to_string(r.chosen_index);
  if (field == "gap") return FormatDouble(r.gap);
  if (field == "flip_rate") return FormatDouble(r.flip_rate);
  if (field == "wall_time") return FormatDouble(r.wall_time);
  throw Error(ErrorCode::kConfigError, "unknown record field '" + field + "'");
}

double RecordValue(const RunRecord& r, const std::string& field) {
  if (field == "epsilon") return r.epsilon;
  if (field == "alpha") return r.alpha;
  if (field == "size" || field == "n" || field == "T") {
    return static_cast<double>(r.size);
  }
  if (field == "replicate") return static_cast<double>(r.replicate);
  if (field == "seed") return static_cast<double>(r.seed);
  if (field == "beta") return r.beta;
  if (field == "gamma") return r.gamma;
  if (field == "chosen_index") return static_cast<double>(r.chosen_index);
  if (field == "gap") return r.gap;
  if (field == "flip_rate") return r.flip_rate;
  if (field == "wall_time") return r.wall_time;
  if (field == "run_index") return static_cast<double>(r.run_index);
  throw Error(ErrorCode::kConfigError,
              "record field '" + field + "' is not numeric");
}

void WriteRecordsHeader(std::ostream& out) {
  const auto& columns = RecordColumns();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << columns[i];
  }
  out << '\n';
}

void WriteRecordRow(std::ostream& out, const RunRecord& record) {
  const auto& columns = RecordColumns();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << RecordText(record, columns[i]);
  }
  out << '\n';
}

std::vector<RunRecord> ReadRecordsCsv(std::istream& in) {
  std::vector<RunRecord> out;
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  bool header = true;
  const auto& columns = RecordColumns();
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) break;  // Interrupted final line.
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    const auto cells = SplitCsv(line);
    if (header) {
      if (cells != columns) {
        throw Error(ErrorCode::kIoError, "unexpected records header");
      }
      header = false;
      continue;
    }
    if (cells.size() != columns.size()) {
      throw Error(ErrorCode::kIoError, "records row has wrong width");
    }
    RunRecord r;
    try {
      r.run_index = ParseUnsigned(cells[0]);
      r.experiment =
          cells[1] == "online" ? Experiment::kOnline : Experiment::kOffline;
      r.solver = ParseSolver(cells[2]);
      r.ordering = ParseOrdering(cells[3]);
      r.adversary = ParseAdversary(cells[4]);
    } catch (const Error& e) {
      throw Error(ErrorCode::kIoError, e.what());
    }
    r.epsilon = ParseNumber(cells[5]);
    r.alpha = ParseNumber(cells[6]);
    r.size = ParseUnsigned(cells[7]);
    r.replicate = ParseUnsigned(cells[8]);
    r.seed = ParseUnsigned(cells[9]);
    r.beta = ParseNumber(cells[10]);
    r.gamma = ParseNumber(cells[11]);
    r.chosen_index = ParseUnsigned(cells[12]);
    r.gap = ParseNumber(cells[13]);
    r.flip_rate = ParseNumber(cells[14]);
    r.wall_time = ParseNumber(cells[15]);
    out.push_back(r);
  }
  return out;
}

std::vector<RunRecord> ReadRecordsFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  return ReadRecordsCsv(in);
}

LineFit FitScaling(const std::vector<RunRecord>& records,
                   const std::string& x_field, const std::string& y_field) {
  std::map<double, std::vector<double>> groups;
  for (const auto& r : records) {
    groups[RecordValue(r, x_field)].push_back(RecordValue(r, y_field));
  }
  if (groups.size() < 3) {
    throw Error(ErrorCode::kDegenerateFit, "need at least 3 distinct x values");
  }
  std::vector<double> x, y;
  for (const auto& [key, values] : groups) {
    x.push_back(key);
    y.push_back(Median(values));
  }
  return FitLogLog(x, y);
}

void WriteSummaryCsv(std::ostream& out, const std::vector<RunRecord>& records) {
  static const std::vector<std::string> kKey = {
      "experiment", "solver", "ordering", "adversary", "epsilon",
      "alpha",      "size",   "beta",     "gamma"};
  std::map<std::vector<std::string>, std::vector<double>> cells;
  std::vector<std::vector<std::string>> order;
  for (const auto& r : records) {
    std::vector<std::string> key;
    for (const auto& f : kKey) key.push_back(RecordText(r, f));
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.gap);
  }
  for (std::size_t i = 0; i < kKey.size(); ++i) out << kKey[i] << ',';
  out << "count,median_gap,q25_gap,q75_gap,mean_gap\n";
  for (const auto& key : order) {
    const auto& gaps = cells[key];
    for (const auto& k : key) out << k << ',';
    out << gaps.size() << ',' << FormatDouble(Median(gaps)) << ','
        << FormatDouble(Quantile(gaps, 0.25)) << ','
        << FormatDouble(Quantile(gaps, 0.75)) << ','
        << FormatDouble(Mean(gaps)) << '\n';
  }
}

}  // namespace prefalign
