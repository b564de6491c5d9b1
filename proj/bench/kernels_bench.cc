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


#include <cstdint>

#include "benchmark/benchmark.h"
#include "prefalign/env.h"
#include "prefalign/kernels.h"
#include "prefalign/noise.h"
#include "prefalign/objectives.h"
#include "prefalign/random.h"

namespace prefalign {
namespace {

struct Instance {
  Environment env;
  PolicyClass policy_class;
  PreferenceDataset dataset;
};

const Instance& DefaultInstance() {
  static const Instance* instance = [] {
    RandomSource rng(17);
    Environment env = MakeEnvironment(EnvSpec{}, rng);
    PolicyClass policy_class = BuildPolicyClass(env, 1.0, ClassSpec{}, rng);
    NoiseConfig noise{1.0, 0.1, Ordering::kCtl, AdversarySpec{}};
    PreferenceDataset dataset;
    dataset.channel = noise;
    dataset.samples = GenerateOfflineSamples(env, 20000, noise, 3,
                                             Execution::kParallel);
    return new Instance{std::move(env), std::move(policy_class),
                        std::move(dataset)};
  }();
  return *instance;
}

Execution ExecutionOf(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

void BM_GenerateOfflineSamples(benchmark::State& state) {
  const Instance& inst = DefaultInstance();
  const NoiseConfig noise{1.0, 0.1, Ordering::kCtl, AdversarySpec{}};
  uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(GenerateOfflineSamples(
        inst.env, 20000, noise, ++seed, ExecutionOf(state)));
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_GenerateOfflineSamples)->Arg(0)->Arg(1);

void BM_ClassLosses(benchmark::State& state) {
  const Instance& inst = DefaultInstance();
  const LossContext ctx{1.0, 1.0, inst.env.r_max(), Flavor::kChiPo};
  const LossKind kind =
      state.range(1) == 0 ? LossKind::kPrivateLog : LossKind::kDebiasedSquare;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ClassLosses(inst.policy_class.members, inst.dataset, ctx,
                    inst.env.pi_ref(), kind, ExecutionOf(state)));
  }
  state.SetItemsProcessed(state.iterations() * inst.dataset.size() *
                          inst.policy_class.size());
}
BENCHMARK(BM_ClassLosses)->ArgsProduct({{0, 1}, {0, 1}});

}  // namespace
}  // namespace prefalign

BENCHMARK_MAIN();
