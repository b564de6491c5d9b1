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

// Sweep execution. Seeding: the environment comes from
// Stream(base, kEnvironmentStream); replicate r draws its policy class from
// Stream(base, r).Child(1) and its data from Stream(base, r).Child(2). Grid
// cells that share a replicate therefore share the class and the data
// stream, and smaller sizes see a prefix of the larger sizes' data.

#ifndef PREFALIGN_HARNESS_RUNNER_H_
#define PREFALIGN_HARNESS_RUNNER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prefalign/env.h"
#include "prefalign/harness/config.h"
#include "prefalign/harness/records.h"

namespace prefalign {

inline constexpr uint64_t kEnvironmentStream = uint64_t{1} << 63;

struct RunCell {
  std::size_t size = 0;
  NoiseConfig noise;
  std::size_t replicate = 0;
};

// Sizes outermost, then epsilon, alpha, ordering, adversary, replicate.
std::vector<RunCell> EnumerateCells(const ExperimentConfig& config);

Environment SweepEnvironment(const ExperimentConfig& config);

RunRecord RunSingle(const ExperimentConfig& config, const Environment& env,
                    const RunCell& cell);

struct SweepOptions {
  // Records are appended here in run order, one flush per record.
  std::optional<std::string> records_path;
  // 0 uses the OpenMP default.
  int workers = 0;
};

// ConfigError (with field path) on an invalid config. Output does not
// depend on the worker count.
std::vector<RunRecord> RunSweep(const ExperimentConfig& config,
                                const SweepOptions& options = {});

// A config whose sweep is exactly the run behind `record`.
ExperimentConfig ResolveSingleRun(const ExperimentConfig& config,
                                  const RunRecord& record);

}  // namespace prefalign

#endif  // PREFALIGN_HARNESS_RUNNER_H_
