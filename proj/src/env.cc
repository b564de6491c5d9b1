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

#include "prefalign/env.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "prefalign/error.h"

namespace prefalign {
namespace {

constexpr double kSumTolerance = 1e-12;
constexpr int kMaxIterations = 200;

using Table = std::vector<std::vector<double>>;

void CheckDistribution(std::span<const double> row, const char* what) {
  if (row.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is empty");
  }
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(what) + " has a negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " does not sum to one");
  }
}

// Softmax of log pi_ref + r / beta, row by row.
Table KlOptimalRows(const Table& reward, const Policy& pi_ref, double beta) {
  Table out(reward.size());
  for (std::size_t s = 0; s < reward.size(); ++s) {
    const auto& r = reward[s];
    std::vector<double> logits(r.size());
    for (std::size_t a = 0; a < r.size(); ++a) {
      logits[a] = std::log(pi_ref.prob(s, a)) + r[a] / beta;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    out[s].resize(r.size());
    for (std::size_t a = 0; a < r.size(); ++a) {
      out[s][a] = std::exp(logits[a] - top);
    }
  }
  return out;
}

// Sum_tau pi_ref(tau) phi^{-1}((r(tau) - z) / beta); strictly decreasing in z.
double ChiMixMass(std::span<const double> r, std::span<const double> ref,
                  double beta, double z) {
  double mass = 0.0;
  for (std::size_t a = 0; a < r.size(); ++a) {
    mass += ref[a] * PhiInverse((r[a] - z) / beta);
  }
  return mass;
}

// Chi-mix optimum for one prompt. Returns the unnormalized ratios u and Z.
std::pair<std::vector<double>, double> ChiMixRow(std::span<const double> r,
                                                 std::span<const double> ref,
                                                 double beta) {
  const double min_ref = *std::min_element(ref.begin(), ref.end());
  const double min_r = *std::min_element(r.begin(), r.end());
  const double max_r = *std::max_element(r.begin(), r.end());
  double lo = min_r - beta * Phi(1.0 / min_ref);
  double hi = max_r - beta * Phi(1.0);
  for (int i = 0; i < kMaxIterations && ChiMixMass(r, ref, beta, lo) < 1.0;
       ++i) {
    lo -= std::max(1.0, hi - lo);
  }
  for (int i = 0; i < kMaxIterations && ChiMixMass(r, ref, beta, hi) > 1.0;
       ++i) {
    hi += std::max(1.0, hi - lo);
  }
  for (int i = 0; i < kMaxIterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (ChiMixMass(r, ref, beta, mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double z = 0.5 * (lo + hi);
  std::vector<double> u(r.size());
  double mass = 0.0;
  for (std::size_t a = 0; a < r.size(); ++a) {
    u[a] = PhiInverse((r[a] - z) / beta);
    mass += ref[a] * u[a];
  }
  if (!(std::abs(mass - 1.0) <= 1e-9)) {
    throw Error(ErrorCode::kNoConvergence,
                "chi-mix normalizer bisection did not converge");
  }
  return {std::move(u), z};
}

ChiMixSolution ChiMixRows(const Table& reward, const Policy& pi_ref,
                          double beta) {
  Table weights(reward.size());
  std::vector<double> normalizers(reward.size());
  for (std::size_t s = 0; s < reward.size(); ++s) {
    auto [u, z] = ChiMixRow(reward[s], pi_ref.row(s), beta);
    weights[s].resize(u.size());
    for (std::size_t a = 0; a < u.size(); ++a) {
      weights[s][a] = pi_ref.prob(s, a) * u[a];
    }
    normalizers[s] = z;
  }
  return {Policy::Normalized(std::move(weights)), std::move(normalizers)};
}

Policy OptimalFor(const Table& reward, const Policy& pi_ref, double beta,
                  Regularizer regularizer) {
  if (regularizer == Regularizer::kKl) {
    return Policy::Normalized(KlOptimalRows(reward, pi_ref, beta));
  }
  return ChiMixRows(reward, pi_ref, beta).policy;
}

Policy Jitter(const Environment& env, double strength, RandomSource& rng) {
  Table weights(env.num_prompts());
  for (PromptId s = 0; s < env.num_prompts(); ++s) {
    weights[s].resize(env.num_responses(s));
    for (ResponseId a = 0; a < env.num_responses(s); ++a) {
      weights[s][a] =
          env.pi_ref().prob(s, a) * std::pow(rng.Exponential(), strength);
    }
  }
  return Policy::Normalized(std::move(weights));
}

Policy Mix(const Policy& a, const Policy& b, double weight_a) {
  Table rows(a.num_prompts());
  for (std::size_t s = 0; s < a.num_prompts(); ++s) {
    rows[s].resize(a.row(s).size());
    for (std::size_t k = 0; k < rows[s].size(); ++k) {
      rows[s][k] = weight_a * a.prob(s, k) + (1.0 - weight_a) * b.prob(s, k);
    }
  }
  return Policy::Normalized(std::move(rows));
}

// Shrinks `candidate` toward pi_ref until its value is at most `cap`.
Policy DominatedBy(const Environment& env, Policy candidate, double cap) {
  if (Value(env, candidate) <= cap) return candidate;
  double weight = 0.5;
  for (int i = 0; i < 60; ++i, weight *= 0.5) {
    Policy mixed = Mix(candidate, env.pi_ref(), weight);
    if (Value(env, mixed) <= cap) return mixed;
  }
  return env.pi_ref();
}

// Unit-RMS direction in reward space, centered within each prompt.
Table RandomDirection(const Environment& env, RandomSource& rng) {
  Table u(env.num_prompts());
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (PromptId s = 0; s < env.num_prompts(); ++s) {
    u[s].resize(env.num_responses(s));
    double mean = 0.0;
    for (double& x : u[s]) {
      x = rng.Normal();
      mean += x;
    }
    mean /= static_cast<double>(u[s].size());
    for (double& x : u[s]) {
      x -= mean;
      sum_sq += x * x;
      ++count;
    }
  }
  const double rms = std::sqrt(sum_sq / static_cast<double>(count));
  if (rms > 0.0) {
    for (auto& row : u) {
      for (double& x : row) x /= rms;
    }
  }
  return u;
}

Table Shifted(const Table& reward, const Table& direction, double scale) {
  Table out = reward;
  for (std::size_t s = 0; s < out.size(); ++s) {
    for (std::size_t a = 0; a < out[s].size(); ++a) {
      out[s][a] += scale * direction[s][a];
    }
  }
  return out;
}

}  // namespace

Policy::Policy(std::vector<std::vector<double>> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "policy has no prompts");
  }
  for (const auto& row : probs_) CheckDistribution(row, "policy row");
}

Policy Policy::Normalized(std::vector<std::vector<double>> weights) {
  for (auto& row : weights) {
    double sum = 0.0;
    for (double w : row) sum += w;
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "policy row has no positive finite mass");
    }
    for (double& w : row) w /= sum;
  }
  return Policy(std::move(weights));
}

Environment::Environment(std::vector<double> rho,
                         std::vector<std::vector<double>> reward, double r_max,
                         Policy pi_ref)
    : rho_(std::move(rho)),
      reward_(std::move(reward)),
      r_max_(r_max),
      pi_ref_(std::move(pi_ref)) {
  CheckDistribution(rho_, "rho");
  if (!(r_max_ > 0.0) || !std::isfinite(r_max_)) {
    throw Error(ErrorCode::kInvalidArgument, "r_max must be positive");
  }
  if (reward_.size() != rho_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "reward table and rho disagree on prompt count");
  }
  for (const auto& row : reward_) {
    if (row.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "prompt without responses");
    }
    for (double r : row) {
      if (!(r >= 0.0 && r <= r_max_)) {
        throw Error(ErrorCode::kInvalidArgument, "reward outside [0, r_max]");
      }
    }
  }
  CheckConforms(pi_ref_);
  for (const auto& row : pi_ref_.probs()) {
    for (double p : row) {
      if (!(p > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "pi_ref must be strictly positive");
      }
    }
  }
}

bool Environment::Conforms(const Policy& policy) const {
  if (policy.num_prompts() != reward_.size()) return false;
  for (std::size_t s = 0; s < reward_.size(); ++s) {
    if (policy.row(s).size() != reward_[s].size()) return false;
  }
  return true;
}

void Environment::CheckConforms(const Policy& policy) const {
  if (!Conforms(policy)) {
    throw Error(ErrorCode::kInvalidArgument,
                "policy shape does not match the environment");
  }
}

Environment MakeEnvironment(const EnvSpec& spec, RandomSource& rng) {
  if (spec.prompts == 0 || spec.responses == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty environment spec");
  }
  const std::size_t k = spec.responses;
  std::vector<double> rho(spec.prompts, 1.0 / static_cast<double>(spec.prompts));
  Table reward(spec.prompts, std::vector<double>(k));
  for (auto& row : reward) {
    if (spec.reward_rule == RewardRule::kUniform) {
      for (double& r : row) r = spec.r_max * rng.Uniform();
    } else {
      std::vector<std::size_t> order(k);
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = k; i > 1; --i) {
        std::swap(order[i - 1], order[rng.UniformIndex(i)]);
      }
      for (std::size_t j = 0; j < k; ++j) {
        row[order[j]] = k == 1 ? spec.r_max
                               : spec.r_max * static_cast<double>(j) /
                                     static_cast<double>(k - 1);
      }
    }
  }
  Table ref(spec.prompts, std::vector<double>(k, 1.0 / static_cast<double>(k)));
  if (spec.reference_rule == ReferenceRule::kRandom) {
    const double floor_mass = spec.reference_min_mass;
    if (!(floor_mass > 0.0) || floor_mass * static_cast<double>(k) >= 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "reference_min_mass must lie in (0, 1 / responses)");
    }
    for (auto& row : ref) {
      double sum = 0.0;
      for (double& p : row) {
        p = rng.Exponential();
        sum += p;
      }
      const double free_mass = 1.0 - floor_mass * static_cast<double>(k);
      for (double& p : row) p = floor_mass + free_mass * p / sum;
    }
  }
  return Environment(std::move(rho), std::move(reward), spec.r_max,
                     Policy::Normalized(std::move(ref)));
}

PromptId SamplePrompt(const Environment& env, RandomSource& rng) {
  return rng.Categorical(env.rho());
}

ResponseId SampleResponse(const Policy& policy, PromptId prompt,
                          RandomSource& rng) {
  return rng.Categorical(policy.row(prompt));
}

double BtProb(const Environment& env, const Trajectory& tau,
              const Trajectory& tau_prime) {
  if (tau.prompt != tau_prime.prompt) {
    throw Error(ErrorCode::kPromptMismatch,
                "Bradley-Terry comparison across prompts");
  }
  const double diff = env.reward(tau) - env.reward(tau_prime);
  // exp(r) / (exp(r) + exp(r')) evaluated without overflow.
  return diff >= 0.0 ? 1.0 / (1.0 + std::exp(-diff))
                     : std::exp(diff) / (1.0 + std::exp(diff));
}

double Value(const Environment& env, const Policy& policy) {
  env.CheckConforms(policy);
  double total = 0.0;
  for (PromptId s = 0; s < env.num_prompts(); ++s) {
    double inner = 0.0;
    for (ResponseId a = 0; a < env.num_responses(s); ++a) {
      inner += policy.prob(s, a) * env.reward({s, a});
    }
    total += env.rho()[s] * inner;
  }
  return total;
}

double KlDivergence(const Environment& env, const Policy& policy) {
  env.CheckConforms(policy);
  double total = 0.0;
  for (PromptId s = 0; s < env.num_prompts(); ++s) {
    double inner = 0.0;
    for (ResponseId a = 0; a < env.num_responses(s); ++a) {
      const double p = policy.prob(s, a);
      if (p > 0.0) inner += p * std::log(p / env.pi_ref().prob(s, a));
    }
    total += env.rho()[s] * inner;
  }
  return total;
}

double ChiSquaredDivergence(const Environment& env, const Policy& policy) {
  env.CheckConforms(policy);
  double total = 0.0;
  for (PromptId s = 0; s < env.num_prompts(); ++s) {
    double inner = 0.0;
    for (ResponseId a = 0; a < env.num_responses(s); ++a) {
      const double ref = env.pi_ref().prob(s, a);
      const double dev = policy.prob(s, a) / ref - 1.0;
      inner += ref * dev * dev;
    }
    total += env.rho()[s] * inner;
  }
  return 0.5 * total;
}

double KlValue(const Environment& env, const Policy& policy, double beta) {
  return Value(env, policy) - beta * KlDivergence(env, policy);
}

double ChiMixValue(const Environment& env, const Policy& policy, double beta) {
  return Value(env, policy) -
         beta * (ChiSquaredDivergence(env, policy) + KlDivergence(env, policy));
}

double Phi(double u) {
  if (!(u > 0.0)) {
    throw Error(ErrorCode::kDomainError, "phi requires u > 0");
  }
  return u + std::log(u);
}

double PhiInverse(double v) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kDomainError, "phi_inverse requires a finite value");
  }
  const double tol =
      std::max(1e-10, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(v));
  // u <= max(1, v) because phi(u) >= u for u >= 1.
  double hi = std::max(1.0, v);
  double lo = std::max(1e-12, std::exp(v - std::abs(v) - 2.0));
  while (Phi(lo) > v) {
    lo *= 1e-3;
    if (!(lo > 0.0)) {
      throw Error(ErrorCode::kNoConvergence, "phi_inverse underflow");
    }
  }
  double u = 0.5 * (lo + hi);
  for (int i = 0; i < kMaxIterations; ++i) {
    const double f = Phi(u) - v;
    if (std::abs(f) <= 0.01 * tol) return u;
    if (f > 0.0) {
      hi = u;
    } else {
      lo = u;
    }
    // Newton step, falling back to bisection when it leaves the bracket.
    double next = u - f / (1.0 + 1.0 / u);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == u) break;
    u = next;
  }
  if (std::abs(Phi(u) - v) > tol) {
    throw Error(ErrorCode::kNoConvergence, "phi_inverse did not converge");
  }
  return u;
}

Policy OptimalKlPolicy(const Environment& env, double beta) {
  if (!(beta > 0.0)) {
    throw Error(ErrorCode::kDomainError, "beta must be positive");
  }
  return OptimalFor(env.reward_table(), env.pi_ref(), beta, Regularizer::kKl);
}

ChiMixSolution SolveChiMixPolicy(const Environment& env, double beta) {
  if (!(beta > 0.0)) {
    throw Error(ErrorCode::kDomainError, "beta must be positive");
  }
  return ChiMixRows(env.reward_table(), env.pi_ref(), beta);
}

double Concentrability(const Environment& env, const Policy& policy) {
  env.CheckConforms(policy);
  double total = 0.0;
  for (PromptId s = 0; s < env.num_prompts(); ++s) {
    double inner = 0.0;
    for (ResponseId a = 0; a < env.num_responses(s); ++a) {
      const double p = policy.prob(s, a);
      inner += p * p / env.pi_ref().prob(s, a);
    }
    total += env.rho()[s] * inner;
  }
  return total;
}

double Coverability(const Environment& env, const PolicyClass& policy_class) {
  if (policy_class.members.empty()) {
    throw Error(ErrorCode::kEmptyClass, "coverability of an empty class");
  }
  for (const auto& member : policy_class.members) env.CheckConforms(member);
  double total = 0.0;
  for (PromptId s = 0; s < env.num_prompts(); ++s) {
    for (ResponseId a = 0; a < env.num_responses(s); ++a) {
      double best = 0.0;
      for (const auto& member : policy_class.members) {
        best = std::max(best, env.rho()[s] * member.prob(s, a));
      }
      total += best;
    }
  }
  return total;
}

PolicyClass BuildPolicyClass(const Environment& env, double beta,
                             const ClassSpec& spec, RandomSource& rng) {
  if (spec.size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "class size must be at least 1");
  }
  if (!(beta > 0.0)) {
    throw Error(ErrorCode::kDomainError, "beta must be positive");
  }
  if (!(spec.min_scale > 0.0) || spec.max_scale < spec.min_scale) {
    throw Error(ErrorCode::kInvalidArgument, "invalid graded scale range");
  }
  const bool chi_mix = spec.regularizer == Regularizer::kChiMix;
  PolicyClass out;
  Policy optimal = OptimalFor(env.reward_table(), env.pi_ref(), beta,
                              spec.regularizer);
  const double value_cap = Value(env, optimal);
  out.members.push_back(optimal);
  out.optimal_index = 0;
  if (spec.size >= 2) {
    out.members.push_back(env.pi_ref());
    out.reference_index = 1;
  }
  const std::size_t remaining = spec.size - out.members.size();
  std::size_t jitters = remaining;
  if (spec.kind == ClassKind::kGraded) {
    jitters = static_cast<std::size_t>(
        std::lround(spec.jitter_fraction * static_cast<double>(remaining)));
    jitters = std::min(jitters, remaining);
  }
  for (std::size_t i = 0; i < jitters; ++i) {
    Policy member = Jitter(env, spec.jitter_strength, rng);
    if (chi_mix) member = DominatedBy(env, std::move(member), value_cap);
    out.members.push_back(std::move(member));
  }
  const double log_lo = std::log(spec.min_scale);
  const double log_hi = std::log(spec.max_scale);
  while (out.members.size() < spec.size) {
    const double scale =
        env.r_max() * std::exp(log_lo + (log_hi - log_lo) * rng.Uniform());
    Table direction = RandomDirection(env, rng);
    Policy member = OptimalFor(Shifted(env.reward_table(), direction, scale),
                               env.pi_ref(), beta, spec.regularizer);
    if (chi_mix && Value(env, member) > value_cap) {
      // Reverse the perturbation; at second order both signs can still
      // overshoot, in which case the member is shrunk toward pi_ref.
      Policy flipped =
          OptimalFor(Shifted(env.reward_table(), direction, -scale),
                     env.pi_ref(), beta, spec.regularizer);
      member = DominatedBy(env, std::move(flipped), value_cap);
    } else if (!chi_mix && rng.Bernoulli(0.5)) {
      member = OptimalFor(Shifted(env.reward_table(), direction, -scale),
                          env.pi_ref(), beta, spec.regularizer);
    }
    out.members.push_back(std::move(member));
  }
  return out;
}

PolicyClass BuildPolicyClass(const Environment& env, double beta,
                             std::size_t size, Regularizer regularizer,
                             RandomSource& rng) {
  ClassSpec spec;
  spec.size = size;
  spec.regularizer = regularizer;
  spec.kind = ClassKind::kJitter;
  return BuildPolicyClass(env, beta, spec, rng);
}

double ComputeVmax(const Environment& env, const PolicyClass& policy_class,
                   double beta, Flavor flavor) {
  if (policy_class.members.empty()) {
    throw Error(ErrorCode::kEmptyClass, "v_max of an empty class");
  }
  double vmax = 0.0;
  for (const auto& member : policy_class.members) {
    env.CheckConforms(member);
    for (PromptId s = 0; s < env.num_prompts(); ++s) {
      if (flavor == Flavor::kXpo) {
        for (ResponseId a = 0; a < env.num_responses(s); ++a) {
          const double p = member.prob(s, a);
          if (!(p > 0.0)) {
            throw Error(ErrorCode::kUnboundedRatio,
                        "zero-mass response makes the log ratio unbounded");
          }
          vmax = std::max(vmax,
                          std::abs(beta * std::log(p / env.pi_ref().prob(s, a))));
        }
      } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (ResponseId a = 0; a < env.num_responses(s); ++a) {
          const double p = member.prob(s, a);
          const double implicit =
              p > 0.0 ? beta * Phi(p / env.pi_ref().prob(s, a))
                      : -std::numeric_limits<double>::infinity();
          lo = std::min(lo, implicit);
          hi = std::max(hi, implicit);
        }
        if (std::isinf(lo)) return std::numeric_limits<double>::infinity();
        vmax = std::max(vmax, hi - lo);
      }
    }
  }
  return vmax;
}

}  // namespace prefalign
