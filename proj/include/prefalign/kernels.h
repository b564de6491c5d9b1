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

// Hot loops with an OpenMP path and a serial reference path.
//
// Every kernel produces bit-identical output under both paths: work is split
// over independent units (samples, class members, trials) and any sum inside
// a unit runs in a fixed serial order.

#ifndef PREFALIGN_KERNELS_H_
#define PREFALIGN_KERNELS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "prefalign/env.h"
#include "prefalign/noise.h"
#include "prefalign/objectives.h"

namespace prefalign {

enum class Execution { kSerial, kParallel };

enum class LossKind { kPrivateLog, kDebiasedSquare };

// Sets the OpenMP team size used by kParallel kernels; 0 keeps the runtime
// default. Has no effect on results.
void SetWorkerCount(int workers);
int WorkerCount();

// Runs body(i) for i in [0, n). Exceptions thrown by any iteration are
// captured and the one from the lowest index is rethrown after the loop.
void ForEachIndex(std::size_t n, Execution exec,
                  const std::function<void(std::size_t)>& body);

// Sample i is drawn from RandomSource::Stream(seed, i).
std::vector<PreferenceSample> GenerateOfflineSamples(const Environment& env,
                                                     std::size_t n,
                                                     const NoiseConfig& config,
                                                     uint64_t seed,
                                                     Execution exec);

// Per-member dataset loss (LogLossDataset or SquareLossDataset).
std::vector<double> ClassLosses(std::span<const Policy> members,
                                const PreferenceDataset& dataset,
                                const LossContext& ctx, const Policy& pi_ref,
                                LossKind kind, Execution exec);

// Adds one sample's loss term to each member's running sum.
void AccumulateSampleTerms(std::span<const Policy> members,
                           const PreferenceSample& sample,
                           const LossContext& ctx, const Policy& pi_ref,
                           LossKind kind, std::span<double> sums,
                           Execution exec);

}  // namespace prefalign

#endif  // PREFALIGN_KERNELS_H_
