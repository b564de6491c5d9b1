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

// Online XPO with global optimism over a finite policy class.
//
// Round t: s ~ rho, tau ~ pi^(t)(.|s), tau_tilde ~ pi_ref(.|s), a clean
// Bradley-Terry label for "tau beats tau_tilde" passes through the label
// channel, and pi^(t+1) minimizes the composite objective over the class.
// The learner sees the observed label and epsilon only.

#ifndef PREFALIGN_SOLVE_ONLINE_H_
#define PREFALIGN_SOLVE_ONLINE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "prefalign/env.h"
#include "prefalign/kernels.h"
#include "prefalign/noise.h"

namespace prefalign {

enum class OnlineLoss { kPrivateLog, kDebiasedSquare };

std::string OnlineLossName(OnlineLoss loss);
OnlineLoss ParseOnlineLoss(const std::string& name);

struct OnlineConfig {
  std::size_t T = 1000;
  double beta = 1.0;
  double gamma = 0.0;
  NoiseConfig noise;
  OnlineLoss loss = OnlineLoss::kDebiasedSquare;

  // ConfigError on T == 0, gamma < 0, beta <= 0, or a private-log run under
  // an ordering that corrupts labels.
  void Validate() const;
};

// What the learner is allowed to know.
struct LearnerSpec {
  double beta = 1.0;
  double gamma = 0.0;
  double epsilon = kNoPrivacy;
  OnlineLoss loss = OnlineLoss::kDebiasedSquare;
};

struct OnlineRound {
  std::size_t t = 0;  // 1-based.
  PromptId prompt = 0;
  ResponseId tau = 0;
  ResponseId tau_tilde = 0;
  Label clean_label = Label::kPlus;
  Label label = Label::kPlus;
  // Index of pi^(t+1), its composite objective and its exact J_beta gap.
  std::size_t chosen_index = 0;
  double objective_of_chosen = 0.0;
  double exact_gap_of_chosen = 0.0;
};

struct OnlineTrace {
  // Class indices of pi^(1), ..., pi^(T+1).
  std::vector<std::size_t> iterates;
  std::vector<OnlineRound> rounds;
  // Observed data; sample t-1 is appended in round t. pos_slot holds tau.
  std::vector<PreferenceSample> data;
  // Composite objective per member after the last round.
  std::vector<double> final_objectives;
  // Position in `iterates` picked by BestIterate, and its class index.
  std::size_t final_position = 0;
  std::size_t final_index = 0;
  double final_gap = 0.0;
  uint64_t seed = 0;
};

// Produces the observed label for round t (1-based). `stream` is dedicated
// to the label and independent of the response draws.
using LabelOracle = std::function<Label(
    std::size_t t, const Trajectory& tau, const Trajectory& tau_tilde,
    Label clean_label, RandomSource& stream)>;

// Round t draws responses from Stream(seed, t).Child(0) and labels from
// Stream(seed, t).Child(1), so shorter runs are prefixes of longer ones.
OnlineTrace RunLearner(const Environment& env, const PolicyClass& policy_class,
                       const LearnerSpec& learner, std::size_t T, uint64_t seed,
                       const LabelOracle& oracle,
                       Execution exec = Execution::kParallel);

// Seeds from rng.NextU64() and labels through cfg.noise.
OnlineTrace RunOnline(const Environment& env, const PolicyClass& policy_class,
                      const OnlineConfig& cfg, RandomSource& rng,
                      Execution exec = Execution::kParallel);

// Position of the iterate with the largest KlValue; lowest position on ties.
std::size_t BestIterate(const Environment& env, const PolicyClass& policy_class,
                        const std::vector<std::size_t>& iterates, double beta);

// (8 (r_max + v_max) e^{2 r_max})^{-2}.
double Kappa(double r_max, double v_max);

// Private log: c * sqrt(beta kappa * beta * L / (T * c_cov)).
// Square: sqrt(beta kappa * beta * (c^2 L + bias_term) / (T * c_cov)), with
// bias_term = t alpha^2 (CTL) or t c^2 alpha^2 (LTC) supplied by the caller.
double TheoreticalGamma(double c_eps, double beta, double kappa,
                        double log_card_term, std::size_t T, double c_cov,
                        OnlineLoss loss, double bias_term = 0.0);

void WriteTraceCsv(std::ostream& out, const OnlineTrace& trace);

}  // namespace prefalign

#endif  // PREFALIGN_SOLVE_ONLINE_H_
