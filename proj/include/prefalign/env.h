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

// Tabular ground truth: prompts, responses, rewards, policies and the exact
// quantities (values, regularized optima, coverage coefficients) that every
// experiment is scored against.

#ifndef PREFALIGN_ENV_H_
#define PREFALIGN_ENV_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "prefalign/random.h"

namespace prefalign {

using PromptId = std::size_t;
using ResponseId = std::size_t;

// A response is an atomic trajectory; it carries its prompt.
struct Trajectory {
  PromptId prompt = 0;
  ResponseId response = 0;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Per-prompt response distributions. Rows are validated on construction:
// entries nonnegative, each row sums to one within 1e-12.
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<std::vector<double>> probs);

  // Divides every row by its sum before validating.
  static Policy Normalized(std::vector<std::vector<double>> weights);

  double operator()(const Trajectory& tau) const {
    return probs_[tau.prompt][tau.response];
  }
  double prob(PromptId s, ResponseId a) const { return probs_[s][a]; }
  std::span<const double> row(PromptId s) const { return probs_[s]; }
  std::size_t num_prompts() const { return probs_.size(); }
  const std::vector<std::vector<double>>& probs() const { return probs_; }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::vector<std::vector<double>> probs_;
};

// Environment invariants: rho is a distribution, rewards lie in [0, r_max],
// and pi_ref puts strictly positive mass on every response.
class Environment {
 public:
  Environment(std::vector<double> rho,
              std::vector<std::vector<double>> reward, double r_max,
              Policy pi_ref);

  std::size_t num_prompts() const { return rho_.size(); }
  std::size_t num_responses(PromptId s) const { return reward_[s].size(); }
  const std::vector<double>& rho() const { return rho_; }
  double reward(const Trajectory& tau) const {
    return reward_[tau.prompt][tau.response];
  }
  std::span<const double> rewards(PromptId s) const { return reward_[s]; }
  const std::vector<std::vector<double>>& reward_table() const {
    return reward_;
  }
  double r_max() const { return r_max_; }
  const Policy& pi_ref() const { return pi_ref_; }

  // True when `policy` has one row per prompt of matching length.
  bool Conforms(const Policy& policy) const;
  void CheckConforms(const Policy& policy) const;

 private:
  std::vector<double> rho_;
  std::vector<std::vector<double>> reward_;
  double r_max_;
  Policy pi_ref_;
};

enum class RewardRule { kUniform, kLinear };
enum class ReferenceRule { kUniform, kRandom };

struct EnvSpec {
  std::size_t prompts = 4;
  std::size_t responses = 6;
  RewardRule reward_rule = RewardRule::kUniform;
  double r_max = 2.0;
  ReferenceRule reference_rule = ReferenceRule::kUniform;
  // Lower bound on pi_ref mass per response (kRandom only).
  double reference_min_mass = 1e-3;
};

// Random instance: uniform rho, rewards per `reward_rule` (kLinear spreads
// r_max * j / (k - 1) over a random permutation of each prompt's
// responses), pi_ref per `reference_rule`.
Environment MakeEnvironment(const EnvSpec& spec, RandomSource& rng);

PromptId SamplePrompt(const Environment& env, RandomSource& rng);
ResponseId SampleResponse(const Policy& policy, PromptId prompt,
                          RandomSource& rng);

// Bradley-Terry probability that tau is preferred to tau_prime.
double BtProb(const Environment& env, const Trajectory& tau,
              const Trajectory& tau_prime);

// J(pi) = E_pi[r].
double Value(const Environment& env, const Policy& policy);
// E_rho[D_KL(pi(.|s) || pi_ref(.|s))], with 0 log 0 = 0.
double KlDivergence(const Environment& env, const Policy& policy);
// E_rho[sum_tau pi_ref (pi/pi_ref - 1)^2] / 2, so that the concentrability
// coefficient equals 2 * D + 1.
double ChiSquaredDivergence(const Environment& env, const Policy& policy);
// J(pi) - beta * KL.
double KlValue(const Environment& env, const Policy& policy, double beta);
// J(pi) - beta * (chi^2 + KL).
double ChiMixValue(const Environment& env, const Policy& policy, double beta);

// Link of the mixed chi^2/KL objective: phi(u) = u + ln u.
double Phi(double u);
// Unique u > 0 with |phi(u) - v| <= 1e-10.
double PhiInverse(double v);

// pi*(tau) proportional to pi_ref(tau) exp(r(tau) / beta).
Policy OptimalKlPolicy(const Environment& env, double beta);

struct ChiMixSolution {
  Policy policy;
  // Per-prompt Z with r = beta * phi(pi / pi_ref) + Z.
  std::vector<double> normalizers;
};

ChiMixSolution SolveChiMixPolicy(const Environment& env, double beta);
inline Policy OptimalChiMixPolicy(const Environment& env, double beta) {
  return SolveChiMixPolicy(env, beta).policy;
}

// C^pi = E_pi[pi / pi_ref].
double Concentrability(const Environment& env, const Policy& policy);

enum class Regularizer { kKl, kChiMix };

struct PolicyClass {
  std::vector<Policy> members;
  std::optional<std::size_t> optimal_index;
  std::optional<std::size_t> reference_index;

  std::size_t size() const { return members.size(); }
};

// C_cov(Pi) = sum_{s, tau} max_{pi in Pi} rho(s) pi(tau|s).
double Coverability(const Environment& env, const PolicyClass& policy_class);

enum class ClassKind {
  // pi*, pi_ref, and Dirichlet-style jitters of pi_ref.
  kJitter,
  // pi*, pi_ref, a few jitters, and the regularized optima of randomly
  // perturbed rewards r + delta * u with delta log-uniform on
  // [min_scale, max_scale] * r_max. Members sit at graded distances from
  // pi*, so estimation error shrinks smoothly with sample size instead of
  // vanishing once the class is resolved.
  kGraded,
};

struct ClassSpec {
  std::size_t size = 32;
  Regularizer regularizer = Regularizer::kChiMix;
  ClassKind kind = ClassKind::kGraded;
  double min_scale = 1e-3;
  double max_scale = 1.0;
  // Share of non-anchor members that are pi_ref jitters in kGraded.
  double jitter_fraction = 0.125;
  // Dirichlet-style jitter strength: weights pi_ref * Exp(1)^strength.
  double jitter_strength = 1.0;
};

// The class always contains the exact regularized optimum at index 0
// (optimal_index) and, when size >= 2, pi_ref at index 1
// (reference_index). For the chi-mix regularizer every other member is
// drawn so that its unregularized value does not exceed the optimum's,
// which keeps offline gaps J(pi*) - J(pi_hat) nonnegative.
PolicyClass BuildPolicyClass(const Environment& env, double beta,
                             const ClassSpec& spec, RandomSource& rng);
PolicyClass BuildPolicyClass(const Environment& env, double beta,
                             std::size_t size, Regularizer regularizer,
                             RandomSource& rng);

// Reparameterization family: chi-PO uses beta * phi(pi / pi_ref), XPO uses
// beta * log(pi / pi_ref).
enum class Flavor { kChiPo, kXpo };

// Exact bound on implicit reward differences (kChiPo) or log density ratios
// (kXpo) over the class.
double ComputeVmax(const Environment& env, const PolicyClass& policy_class,
                   double beta, Flavor flavor);

}  // namespace prefalign

#endif  // PREFALIGN_ENV_H_
