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

// Reparameterized preference probabilities and the two empirical losses.
//
// Log losses are returned as log-likelihood sums (higher is better); square
// losses as sums of squared residuals (lower is better). Both are sums over
// samples, not means.

#ifndef PREFALIGN_OBJECTIVES_H_
#define PREFALIGN_OBJECTIVES_H_

#include "prefalign/env.h"
#include "prefalign/noise.h"

namespace prefalign {

// Floor applied to pi / pi_ref before phi in the chi-PO link.
inline constexpr double kPhiRatioFloor = 1e-12;

struct LossContext {
  double beta = 1.0;
  double epsilon = kNoPrivacy;
  double r_max = 1.0;
  Flavor flavor = Flavor::kChiPo;
};

double Clip(double x, double bound);

// Logistic function, evaluated on the side that cannot overflow.
double Sigmoid(double x);

// beta * phi(pi(tau+) / pi_ref(tau+)) - beta * phi(pi(tau-) / pi_ref(tau-)).
double HChipo(const Policy& policy, const Policy& pi_ref,
              const Trajectory& tau_plus, const Trajectory& tau_minus,
              double beta);
// sigmoid(clip_{2 r_max}(h)).
double PChipo(double h_value, double r_max);

// beta * log ratio difference; no clipping is applied downstream.
double HXpo(const Policy& policy, const Policy& pi_ref, const Trajectory& tau_a,
            const Trajectory& tau_b, double beta);

// Model probability that `first` beats `second` under ctx.flavor.
double PreferenceProbability(const Policy& policy, const Policy& pi_ref,
                             const Trajectory& first, const Trajectory& second,
                             const LossContext& ctx);

// log[(2 sigma(eps) - 1) p + (1 - sigma(eps))].
double PrivateLogTerm(double p, double epsilon);

// One sample's log-likelihood term, the pair oriented by its label.
double LogLossTerm(const Policy& policy, const PreferenceSample& sample,
                   const LossContext& ctx, const Policy& pi_ref);
// One sample's (2P - 1 - c(eps) z)^2 with the slots kept in place.
double SquareLossTerm(const Policy& policy, const PreferenceSample& sample,
                      const LossContext& ctx, const Policy& pi_ref);

double LogLossDataset(const Policy& policy, const PreferenceDataset& dataset,
                      const LossContext& ctx, const Policy& pi_ref);
double SquareLossDataset(const Policy& policy, const PreferenceDataset& dataset,
                         const LossContext& ctx, const Policy& pi_ref);

}  // namespace prefalign

#endif  // PREFALIGN_OBJECTIVES_H_
