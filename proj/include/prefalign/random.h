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

#ifndef PREFALIGN_RANDOM_H_
#define PREFALIGN_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace prefalign {

// Finalizer of SplitMix64. Used to derive child-stream seeds.
uint64_t MixSeed(uint64_t seed, uint64_t index);

// Seedable, cross-platform random source. The engine is std::mt19937_64,
// whose output sequence is fixed by the standard; every derived variate is
// computed here from raw 64-bit draws instead of std::*_distribution, whose
// algorithms differ between standard libraries.
//
// A RandomSource is an exclusive-use handle: one per logical task. Parallel
// work derives child streams with Stream(seed, index) so results do not
// depend on scheduling.
class RandomSource {
 public:
  explicit RandomSource(uint64_t seed) : seed_(seed), engine_(seed) {}

  // Independent stream number `index` under `seed`.
  static RandomSource Stream(uint64_t seed, uint64_t index) {
    return RandomSource(MixSeed(seed, index));
  }
  RandomSource Child(uint64_t index) const { return Stream(seed_, index); }

  uint64_t seed() const { return seed_; }

  // Number of raw engine draws consumed so far.
  uint64_t draws() const { return draws_; }

  uint64_t NextU64() {
    ++draws_;
    return engine_();
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double Uniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1).
  double OpenUniform() {
    return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // One draw, true with probability p.
  bool Bernoulli(double p) { return Uniform() < p; }

  // Standard normal via Box-Muller; consumes two draws.
  double Normal();

  // Unit-rate exponential; consumes one draw.
  double Exponential();

  // Inverse-CDF categorical draw; consumes one draw. Zero-mass entries are
  // never returned. The weights need not be normalized.
  std::size_t Categorical(std::span<const double> weights);

  // Uniform integer in [0, n); consumes one draw.
  std::size_t UniformIndex(std::size_t n);

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  uint64_t draws_ = 0;
};

}  // namespace prefalign

#endif  // PREFALIGN_RANDOM_H_
