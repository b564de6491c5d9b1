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

// Offline chi-PO solvers over a finite policy class.

#ifndef PREFALIGN_SOLVE_OFFLINE_H_
#define PREFALIGN_SOLVE_OFFLINE_H_

#include <cstddef>
#include <vector>

#include "prefalign/env.h"
#include "prefalign/kernels.h"
#include "prefalign/noise.h"
#include "prefalign/objectives.h"

namespace prefalign {

struct OfflineSolveReport {
  std::size_t chosen_index = 0;
  // LogLossDataset (maximized) or SquareLossDataset (minimized) per member.
  std::vector<double> objective_values;
  Policy chosen_policy;
  double wall_time = 0.0;
};

// Lowest index attaining the max (or min) of `values`; EmptyClass if empty.
std::size_t ArgMaxLowest(const std::vector<double>& values);
std::size_t ArgMinLowest(const std::vector<double>& values);

// Private log-likelihood maximizer. ctx.flavor must be kChiPo.
OfflineSolveReport PrivChipo(const PreferenceDataset& dataset,
                             const PolicyClass& policy_class,
                             const LossContext& ctx, const Policy& pi_ref,
                             Execution exec = Execution::kParallel);

// Debiased square-loss minimizer. Reads only the observed labels.
OfflineSolveReport SquareChipo(const PreferenceDataset& dataset,
                               const PolicyClass& policy_class,
                               const LossContext& ctx, const Policy& pi_ref,
                               Execution exec = Execution::kParallel);

// sqrt(2 / c_pi_star) * v_max * err_stat / r_max.
double TheoreticalBetaOffline(double c_pi_star, double v_max, double r_max,
                              double err_stat);

}  // namespace prefalign

#endif  // PREFALIGN_SOLVE_OFFLINE_H_
