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

#include "prefalign/kernels.h"

#include <algorithm>
#include <atomic>
#include <exception>

#include <omp.h>

#include "prefalign/error.h"

namespace prefalign {
namespace {

std::atomic<int> g_workers{0};

double Term(const Policy& policy, const PreferenceSample& sample,
            const LossContext& ctx, const Policy& pi_ref, LossKind kind) {
  return kind == LossKind::kPrivateLog
             ? LogLossTerm(policy, sample, ctx, pi_ref)
             : SquareLossTerm(policy, sample, ctx, pi_ref);
}

}  // namespace

void SetWorkerCount(int workers) {
  if (workers < 0) {
    throw Error(ErrorCode::kInvalidArgument, "worker count must be >= 0");
  }
  g_workers.store(workers);
}

int WorkerCount() {
  const int w = g_workers.load();
  return w > 0 ? w : omp_get_max_threads();
}

void ForEachIndex(std::size_t n, Execution exec,
                  const std::function<void(std::size_t)>& body) {
  if (exec == Execution::kSerial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<bool> failed{false};
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(WorkerCount())
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
      failed.store(true);
    }
  }
  if (failed.load()) {
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
}

std::vector<PreferenceSample> GenerateOfflineSamples(const Environment& env,
                                                     std::size_t n,
                                                     const NoiseConfig& config,
                                                     uint64_t seed,
                                                     Execution exec) {
  std::vector<PreferenceSample> samples(n);
  // Chunk the samples so each task amortizes scheduling overhead.
  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  ForEachIndex(chunks, exec, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      RandomSource stream = RandomSource::Stream(seed, i);
      samples[i] = GenerateOfflineSample(env, config, stream);
    }
  });
  return samples;
}

std::vector<double> ClassLosses(std::span<const Policy> members,
                                const PreferenceDataset& dataset,
                                const LossContext& ctx, const Policy& pi_ref,
                                LossKind kind, Execution exec) {
  std::vector<double> out(members.size(), 0.0);
  ForEachIndex(members.size(), exec, [&](std::size_t k) {
    double total = 0.0;
    for (const auto& sample : dataset.samples) {
      total += Term(members[k], sample, ctx, pi_ref, kind);
    }
    out[k] = total;
  });
  return out;
}

void AccumulateSampleTerms(std::span<const Policy> members,
                           const PreferenceSample& sample,
                           const LossContext& ctx, const Policy& pi_ref,
                           LossKind kind, std::span<double> sums,
                           Execution exec) {
  if (sums.size() != members.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one running sum per member");
  }
  ForEachIndex(members.size(), exec, [&](std::size_t k) {
    sums[k] += Term(members[k], sample, ctx, pi_ref, kind);
  });
}

}  // namespace prefalign
