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

// The label channel: Bradley-Terry sampling, randomized response, Huber
// corruption and their two compositions.

#ifndef PREFALIGN_NOISE_H_
#define PREFALIGN_NOISE_H_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "prefalign/env.h"
#include "prefalign/random.h"

namespace prefalign {

inline constexpr double kNoPrivacy = std::numeric_limits<double>::infinity();

// Preference labels are signed: kPlus means the first slot is preferred.
enum class Label : int { kMinus = -1, kPlus = 1 };

inline int Sign(Label y) { return static_cast<int>(y); }
inline Label Flip(Label y) {
  return y == Label::kPlus ? Label::kMinus : Label::kPlus;
}

enum class Ordering { kClean, kPrivacyOnly, kCorruptionOnly, kCtl, kLtc };

struct AdversarySpec {
  enum class Kind { kAlwaysFlip, kConstantPlus, kConstantMinus, kBernoulliPlus };
  Kind kind = Kind::kAlwaysFlip;
  // P(+1) for kBernoulliPlus.
  double p = 0.5;

  friend bool operator==(const AdversarySpec&, const AdversarySpec&) = default;
};

struct NoiseConfig {
  double epsilon = kNoPrivacy;
  double alpha = 0.0;
  Ordering ordering = Ordering::kClean;
  AdversarySpec adversary;

  // Throws InvalidArgument unless epsilon > 0, 0 <= alpha < 0.5 and the
  // adversary parameter is a probability.
  void Validate() const;
  // Parameters actually applied under `ordering`.
  double effective_epsilon() const;
  double effective_alpha() const;

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

std::string OrderingName(Ordering ordering);
Ordering ParseOrdering(const std::string& name);
std::string AdversaryName(const AdversarySpec& adversary);
AdversarySpec ParseAdversary(const std::string& name);

// sigma(eps) = e^eps / (1 + e^eps); 1 at eps = +inf.
double SigmaEps(double epsilon);
// c(eps) = (e^eps + 1) / (e^eps - 1) = 1 / (2 sigma(eps) - 1); 1 at +inf.
double CEps(double epsilon);

Label SampleBtLabel(const Environment& env, const Trajectory& tau,
                    const Trajectory& tau_prime, RandomSource& rng);

// Keeps the label with probability sigma(eps). No draw at eps = +inf.
Label RandomizedResponse(Label y, double epsilon, RandomSource& rng);

// With probability alpha, replaces the label by a draw from the adversary.
// No draw at alpha = 0.
Label HuberCorrupt(Label y, double alpha, const AdversarySpec& adversary,
                   RandomSource& rng);

// Corruption then RR for kCtl, RR then corruption for kLtc.
Label ApplyChannel(Label y, const NoiseConfig& config, RandomSource& rng);

struct PreferenceSample {
  PromptId prompt = 0;
  // The tau_1 slot: a kPlus label means this response won.
  Trajectory pos_slot;
  // The tau_{-1} slot.
  Trajectory neg_slot;
  Label label = Label::kPlus;
  // Simulator-only ground truth before the channel.
  Label clean_label = Label::kPlus;
};

struct PreferenceDataset {
  std::vector<PreferenceSample> samples;
  NoiseConfig channel;
  uint64_t seed = 0;

  std::size_t size() const { return samples.size(); }
};

// n samples: prompt ~ rho, both slots i.i.d. from pi_ref, clean BT label,
// observed label through the channel. Sample i uses child stream i of a
// dataset seed drawn from `rng`, so the result is independent of how the
// work is scheduled. Prefixes agree across n for the same seed.
PreferenceDataset GenerateOfflineDataset(const Environment& env, std::size_t n,
                                         const NoiseConfig& config,
                                         RandomSource& rng);

// One sample from child stream `stream`; shared by the serial and parallel
// generators.
PreferenceSample GenerateOfflineSample(const Environment& env,
                                       const NoiseConfig& config,
                                       RandomSource& stream);

// CSV with header
// index,prompt,response_pos_slot,response_neg_slot,observed_label,clean_label
void WriteDatasetCsv(std::ostream& out, const PreferenceDataset& dataset);

}  // namespace prefalign

#endif  // PREFALIGN_NOISE_H_
