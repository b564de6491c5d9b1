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

#include "prefalign/objectives.h"

#include <algorithm>
#include <cmath>

#include "prefalign/error.h"

namespace prefalign {
namespace {

void CheckSamePrompt(const Trajectory& a, const Trajectory& b) {
  if (a.prompt != b.prompt) {
    throw Error(ErrorCode::kPromptMismatch, "pair spans two prompts");
  }
}

}  // namespace

double Clip(double x, double bound) {
  if (!(bound > 0.0)) {
    throw Error(ErrorCode::kDomainError, "clip bound must be positive");
  }
  return std::min(bound, std::max(-bound, x));
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double HChipo(const Policy& policy, const Policy& pi_ref,
              const Trajectory& tau_plus, const Trajectory& tau_minus,
              double beta) {
  CheckSamePrompt(tau_plus, tau_minus);
  const double ratio_plus =
      std::max(kPhiRatioFloor, policy(tau_plus) / pi_ref(tau_plus));
  const double ratio_minus =
      std::max(kPhiRatioFloor, policy(tau_minus) / pi_ref(tau_minus));
  return beta * Phi(ratio_plus) - beta * Phi(ratio_minus);
}

double PChipo(double h_value, double r_max) {
  return Sigmoid(Clip(h_value, 2.0 * r_max));
}

double HXpo(const Policy& policy, const Policy& pi_ref, const Trajectory& tau_a,
            const Trajectory& tau_b, double beta) {
  CheckSamePrompt(tau_a, tau_b);
  const double pa = policy(tau_a);
  const double pb = policy(tau_b);
  if (!(pa > 0.0) || !(pb > 0.0)) {
    throw Error(ErrorCode::kUnboundedRatio,
                "XPO link needs positive policy mass on both responses");
  }
  return beta * std::log(pa / pi_ref(tau_a)) -
         beta * std::log(pb / pi_ref(tau_b));
}

double PreferenceProbability(const Policy& policy, const Policy& pi_ref,
                             const Trajectory& first, const Trajectory& second,
                             const LossContext& ctx) {
  if (ctx.flavor == Flavor::kChiPo) {
    return PChipo(HChipo(policy, pi_ref, first, second, ctx.beta), ctx.r_max);
  }
  return Sigmoid(HXpo(policy, pi_ref, first, second, ctx.beta));
}

double PrivateLogTerm(double p, double epsilon) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "probability outside [0, 1]");
  }
  const double sigma = SigmaEps(epsilon);
  const double mixed = (2.0 * sigma - 1.0) * p + (1.0 - sigma);
  if (!(mixed > 0.0)) {
    throw Error(ErrorCode::kDomainError,
                "log of a zero probability without privatization");
  }
  return std::log(mixed);
}

double LogLossTerm(const Policy& policy, const PreferenceSample& sample,
                   const LossContext& ctx, const Policy& pi_ref) {
  const bool keep = sample.label == Label::kPlus;
  const Trajectory& winner = keep ? sample.pos_slot : sample.neg_slot;
  const Trajectory& loser = keep ? sample.neg_slot : sample.pos_slot;
  return PrivateLogTerm(
      PreferenceProbability(policy, pi_ref, winner, loser, ctx), ctx.epsilon);
}

double SquareLossTerm(const Policy& policy, const PreferenceSample& sample,
                      const LossContext& ctx, const Policy& pi_ref) {
  const double p = PreferenceProbability(policy, pi_ref, sample.pos_slot,
                                         sample.neg_slot, ctx);
  const double residual = 2.0 * p - 1.0 - CEps(ctx.epsilon) * Sign(sample.label);
  return residual * residual;
}

double LogLossDataset(const Policy& policy, const PreferenceDataset& dataset,
                      const LossContext& ctx, const Policy& pi_ref) {
  double total = 0.0;
  for (const auto& sample : dataset.samples) {
    total += LogLossTerm(policy, sample, ctx, pi_ref);
  }
  return total;
}

double SquareLossDataset(const Policy& policy, const PreferenceDataset& dataset,
                         const LossContext& ctx, const Policy& pi_ref) {
  double total = 0.0;
  for (const auto& sample : dataset.samples) {
    total += SquareLossTerm(policy, sample, ctx, pi_ref);
  }
  return total;
}

}  // namespace prefalign
