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

#include "prefalign/noise.h"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "prefalign/error.h"
#include "prefalign/kernels.h"

namespace prefalign {

void NoiseConfig::Validate() const {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  if (!(alpha >= 0.0 && alpha < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 0.5)");
  }
  if (adversary.kind == AdversarySpec::Kind::kBernoulliPlus &&
      !(adversary.p >= 0.0 && adversary.p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "adversary probability must lie in [0, 1]");
  }
}

double NoiseConfig::effective_epsilon() const {
  switch (ordering) {
    case Ordering::kClean:
    case Ordering::kCorruptionOnly:
      return kNoPrivacy;
    default:
      return epsilon;
  }
}

double NoiseConfig::effective_alpha() const {
  switch (ordering) {
    case Ordering::kClean:
    case Ordering::kPrivacyOnly:
      return 0.0;
    default:
      return alpha;
  }
}

std::string OrderingName(Ordering ordering) {
  switch (ordering) {
    case Ordering::kClean:
      return "Clean";
    case Ordering::kPrivacyOnly:
      return "PrivacyOnly";
    case Ordering::kCorruptionOnly:
      return "CorruptionOnly";
    case Ordering::kCtl:
      return "CTL";
    case Ordering::kLtc:
      return "LTC";
  }
  return "Clean";
}

Ordering ParseOrdering(const std::string& name) {
  if (name == "Clean") return Ordering::kClean;
  if (name == "PrivacyOnly") return Ordering::kPrivacyOnly;
  if (name == "CorruptionOnly") return Ordering::kCorruptionOnly;
  if (name == "CTL") return Ordering::kCtl;
  if (name == "LTC") return Ordering::kLtc;
  throw Error(ErrorCode::kConfigError, "unknown ordering '" + name + "'");
}

std::string AdversaryName(const AdversarySpec& adversary) {
  switch (adversary.kind) {
    case AdversarySpec::Kind::kAlwaysFlip:
      return "AlwaysFlip";
    case AdversarySpec::Kind::kConstantPlus:
      return "ConstantPlus";
    case AdversarySpec::Kind::kConstantMinus:
      return "ConstantMinus";
    case AdversarySpec::Kind::kBernoulliPlus: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "BernoulliPlus(%.17g)", adversary.p);
      return buf;
    }
  }
  return "AlwaysFlip";
}

AdversarySpec ParseAdversary(const std::string& name) {
  AdversarySpec out;
  if (name == "AlwaysFlip") return out;
  if (name == "ConstantPlus") {
    out.kind = AdversarySpec::Kind::kConstantPlus;
    return out;
  }
  if (name == "ConstantMinus") {
    out.kind = AdversarySpec::Kind::kConstantMinus;
    return out;
  }
  const std::string prefix = "BernoulliPlus(";
  if (name.rfind(prefix, 0) == 0 && name.back() == ')') {
    out.kind = AdversarySpec::Kind::kBernoulliPlus;
    const std::string arg =
        name.substr(prefix.size(), name.size() - prefix.size() - 1);
    char* end = nullptr;
    out.p = std::strtod(arg.c_str(), &end);
    if (end == arg.c_str() || *end != '\0') {
      throw Error(ErrorCode::kConfigError, "bad adversary '" + name + "'");
    }
    return out;
  }
  throw Error(ErrorCode::kConfigError, "unknown adversary '" + name + "'");
}

double SigmaEps(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kDomainError, "epsilon must be positive");
  }
  if (std::isinf(epsilon)) return 1.0;
  return 1.0 / (1.0 + std::exp(-epsilon));
}

double CEps(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kDomainError, "epsilon must be positive");
  }
  if (std::isinf(epsilon)) return 1.0;
  const double em1 = std::expm1(epsilon);
  return (em1 + 2.0) / em1;
}

Label SampleBtLabel(const Environment& env, const Trajectory& tau,
                    const Trajectory& tau_prime, RandomSource& rng) {
  const double p = BtProb(env, tau, tau_prime);
  return rng.Bernoulli(p) ? Label::kPlus : Label::kMinus;
}

Label RandomizedResponse(Label y, double epsilon, RandomSource& rng) {
  if (std::isinf(epsilon) && epsilon > 0.0) return y;
  return rng.Bernoulli(SigmaEps(epsilon)) ? y : Flip(y);
}

Label HuberCorrupt(Label y, double alpha, const AdversarySpec& adversary,
                   RandomSource& rng) {
  if (alpha == 0.0) return y;
  if (!rng.Bernoulli(alpha)) return y;
  switch (adversary.kind) {
    case AdversarySpec::Kind::kAlwaysFlip:
      return Flip(y);
    case AdversarySpec::Kind::kConstantPlus:
      return Label::kPlus;
    case AdversarySpec::Kind::kConstantMinus:
      return Label::kMinus;
    case AdversarySpec::Kind::kBernoulliPlus:
      return rng.Bernoulli(adversary.p) ? Label::kPlus : Label::kMinus;
  }
  return y;
}

Label ApplyChannel(Label y, const NoiseConfig& config, RandomSource& rng) {
  const double eps = config.effective_epsilon();
  const double alpha = config.effective_alpha();
  switch (config.ordering) {
    case Ordering::kClean:
      return y;
    case Ordering::kPrivacyOnly:
      return RandomizedResponse(y, eps, rng);
    case Ordering::kCorruptionOnly:
      return HuberCorrupt(y, alpha, config.adversary, rng);
    case Ordering::kCtl:
      return RandomizedResponse(HuberCorrupt(y, alpha, config.adversary, rng),
                                eps, rng);
    case Ordering::kLtc:
      return HuberCorrupt(RandomizedResponse(y, eps, rng), alpha,
                          config.adversary, rng);
  }
  return y;
}

PreferenceSample GenerateOfflineSample(const Environment& env,
                                       const NoiseConfig& config,
                                       RandomSource& stream) {
  PreferenceSample sample;
  sample.prompt = SamplePrompt(env, stream);
  sample.pos_slot = {sample.prompt,
                     SampleResponse(env.pi_ref(), sample.prompt, stream)};
  sample.neg_slot = {sample.prompt,
                     SampleResponse(env.pi_ref(), sample.prompt, stream)};
  sample.clean_label =
      SampleBtLabel(env, sample.pos_slot, sample.neg_slot, stream);
  sample.label = ApplyChannel(sample.clean_label, config, stream);
  return sample;
}

PreferenceDataset GenerateOfflineDataset(const Environment& env, std::size_t n,
                                         const NoiseConfig& config,
                                         RandomSource& rng) {
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dataset size must be positive");
  }
  config.Validate();
  PreferenceDataset dataset;
  dataset.channel = config;
  dataset.seed = rng.NextU64();
  dataset.samples = GenerateOfflineSamples(env, n, config, dataset.seed,
                                           Execution::kParallel);
  return dataset;
}

void WriteDatasetCsv(std::ostream& out, const PreferenceDataset& dataset) {
  out << "index,prompt,response_pos_slot,response_neg_slot,observed_label,"
         "clean_label\n";
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    out << i << ',' << s.prompt << ',' << s.pos_slot.response << ','
        << s.neg_slot.response << ',' << Sign(s.label) << ','
        << Sign(s.clean_label) << '\n';
  }
}

}  // namespace prefalign
