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

#include "prefalign/solve_offline.h"

#include <chrono>
#include <cmath>

#include "prefalign/error.h"

namespace prefalign {
namespace {

void CheckClass(const PolicyClass& policy_class, const LossContext& ctx) {
  if (policy_class.members.empty()) {
    throw Error(ErrorCode::kEmptyClass, "policy class is empty");
  }
  if (ctx.flavor != Flavor::kChiPo) {
    throw Error(ErrorCode::kInvalidArgument, "offline solvers use chi-PO");
  }
}

OfflineSolveReport Solve(const PreferenceDataset& dataset,
                         const PolicyClass& policy_class,
                         const LossContext& ctx, const Policy& pi_ref,
                         LossKind kind, Execution exec) {
  CheckClass(policy_class, ctx);
  const auto start = std::chrono::steady_clock::now();
  OfflineSolveReport report;
  report.objective_values =
      ClassLosses(policy_class.members, dataset, ctx, pi_ref, kind, exec);
  report.chosen_index = kind == LossKind::kPrivateLog
                            ? ArgMaxLowest(report.objective_values)
                            : ArgMinLowest(report.objective_values);
  report.chosen_policy = policy_class.members[report.chosen_index];
  report.wall_time = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return report;
}

}  // namespace

std::size_t ArgMaxLowest(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyClass, "no candidates");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

std::size_t ArgMinLowest(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyClass, "no candidates");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] < values[best]) best = k;
  }
  return best;
}

OfflineSolveReport PrivChipo(const PreferenceDataset& dataset,
                             const PolicyClass& policy_class,
                             const LossContext& ctx, const Policy& pi_ref,
                             Execution exec) {
  return Solve(dataset, policy_class, ctx, pi_ref, LossKind::kPrivateLog, exec);
}

OfflineSolveReport SquareChipo(const PreferenceDataset& dataset,
                               const PolicyClass& policy_class,
                               const LossContext& ctx, const Policy& pi_ref,
                               Execution exec) {
  return Solve(dataset, policy_class, ctx, pi_ref, LossKind::kDebiasedSquare,
               exec);
}

double TheoreticalBetaOffline(double c_pi_star, double v_max, double r_max,
                              double err_stat) {
  if (!(c_pi_star > 0.0) || !(v_max > 0.0) || !(r_max > 0.0) ||
      !(err_stat > 0.0)) {
    throw Error(ErrorCode::kDomainError, "inputs must be positive");
  }
  return std::sqrt(2.0 / c_pi_star) * v_max * err_stat / r_max;
}

}  // namespace prefalign
