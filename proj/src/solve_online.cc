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

#include "prefalign/solve_online.h"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "prefalign/error.h"
#include "prefalign/objectives.h"
#include "prefalign/solve_offline.h"

namespace prefalign {
namespace {

std::size_t StartIndex(const PolicyClass& policy_class, const Policy& pi_ref) {
  if (policy_class.reference_index) return *policy_class.reference_index;
  for (std::size_t k = 0; k < policy_class.size(); ++k) {
    if (policy_class.members[k] == pi_ref) return k;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "online runs start from pi_ref, which is not in the class");
}

void CheckPositive(const PolicyClass& policy_class) {
  for (const auto& member : policy_class.members) {
    for (const auto& row : member.probs()) {
      for (double p : row) {
        if (!(p > 0.0)) {
          throw Error(ErrorCode::kUnboundedRatio,
                      "XPO classes need full support");
        }
      }
    }
  }
}

}  // namespace

std::string OnlineLossName(OnlineLoss loss) {
  return loss == OnlineLoss::kPrivateLog ? "private_log" : "debiased_square";
}

OnlineLoss ParseOnlineLoss(const std::string& name) {
  if (name == "private_log") return OnlineLoss::kPrivateLog;
  if (name == "debiased_square") return OnlineLoss::kDebiasedSquare;
  throw Error(ErrorCode::kConfigError, "unknown online loss '" + name + "'");
}

void OnlineConfig::Validate() const {
  if (T == 0) throw Error(ErrorCode::kConfigError, "T must be >= 1");
  if (!(beta > 0.0)) throw Error(ErrorCode::kConfigError, "beta must be > 0");
  if (!(gamma >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "gamma must be >= 0");
  }
  try {
    noise.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  if (loss == OnlineLoss::kPrivateLog && noise.ordering != Ordering::kClean &&
      noise.ordering != Ordering::kPrivacyOnly) {
    throw Error(ErrorCode::kConfigError,
                "private_log handles Clean and PrivacyOnly channels only");
  }
}

OnlineTrace RunLearner(const Environment& env, const PolicyClass& policy_class,
                       const LearnerSpec& learner, std::size_t T, uint64_t seed,
                       const LabelOracle& oracle, Execution exec) {
  if (policy_class.members.empty()) {
    throw Error(ErrorCode::kEmptyClass, "policy class is empty");
  }
  CheckPositive(policy_class);
  for (const auto& member : policy_class.members) env.CheckConforms(member);

  const std::size_t size = policy_class.size();
  const Policy& pi_ref = env.pi_ref();
  const LossContext ctx{learner.beta, learner.epsilon, env.r_max(),
                        Flavor::kXpo};
  const LossKind kind = learner.loss == OnlineLoss::kPrivateLog
                            ? LossKind::kPrivateLog
                            : LossKind::kDebiasedSquare;
  const double c = CEps(learner.epsilon);
  const double loss_scale = kind == LossKind::kPrivateLog ? c * c : 1.0;

  // Exact J_beta per member, for the round records and best-iterate choice.
  const double best_value =
      KlValue(env, OptimalKlPolicy(env, learner.beta), learner.beta);
  std::vector<double> gap(size);
  for (std::size_t k = 0; k < size; ++k) {
    gap[k] = best_value - KlValue(env, policy_class.members[k], learner.beta);
  }

  OnlineTrace trace;
  trace.seed = seed;
  trace.iterates.reserve(T + 1);
  trace.rounds.reserve(T);
  trace.data.reserve(T);
  trace.iterates.push_back(StartIndex(policy_class, pi_ref));

  std::vector<double> log_tilde(size, 0.0);
  std::vector<double> loss(size, 0.0);
  std::vector<double> objective(size, 0.0);
  for (std::size_t t = 1; t <= T; ++t) {
    const Policy& current = policy_class.members[trace.iterates.back()];
    RandomSource round = RandomSource::Stream(seed, t);
    RandomSource draws = round.Child(0);
    RandomSource label_stream = round.Child(1);

    PreferenceSample sample;
    sample.prompt = SamplePrompt(env, draws);
    sample.pos_slot = {sample.prompt,
                       SampleResponse(current, sample.prompt, draws)};
    sample.neg_slot = {sample.prompt,
                       SampleResponse(pi_ref, sample.prompt, draws)};
    sample.clean_label =
        SampleBtLabel(env, sample.pos_slot, sample.neg_slot, draws);
    sample.label = oracle(t, sample.pos_slot, sample.neg_slot,
                          sample.clean_label, label_stream);

    AccumulateSampleTerms(policy_class.members, sample, ctx, pi_ref, kind,
                          loss, exec);
    for (std::size_t k = 0; k < size; ++k) {
      log_tilde[k] += std::log(policy_class.members[k](sample.neg_slot));
    }
    for (std::size_t k = 0; k < size; ++k) {
      // The log-likelihood enters with a minus sign; the square loss is
      // already a loss and enters with a plus sign.
      objective[k] = kind == LossKind::kPrivateLog
                         ? learner.gamma * log_tilde[k] - loss_scale * loss[k]
                         : learner.gamma * log_tilde[k] + loss[k];
    }
    const std::size_t next = ArgMinLowest(objective);
    trace.iterates.push_back(next);
    trace.data.push_back(sample);

    OnlineRound record;
    record.t = t;
    record.prompt = sample.prompt;
    record.tau = sample.pos_slot.response;
    record.tau_tilde = sample.neg_slot.response;
    record.clean_label = sample.clean_label;
    record.label = sample.label;
    record.chosen_index = next;
    record.objective_of_chosen = objective[next];
    record.exact_gap_of_chosen = gap[next];
    trace.rounds.push_back(record);
  }
  trace.final_objectives = objective;
  trace.final_position =
      BestIterate(env, policy_class, trace.iterates, learner.beta);
  trace.final_index = trace.iterates[trace.final_position];
  trace.final_gap = gap[trace.final_index];
  return trace;
}

OnlineTrace RunOnline(const Environment& env, const PolicyClass& policy_class,
                      const OnlineConfig& cfg, RandomSource& rng,
                      Execution exec) {
  cfg.Validate();
  const LearnerSpec learner{cfg.beta, cfg.gamma, cfg.noise.effective_epsilon(),
                            cfg.loss};
  const NoiseConfig channel = cfg.noise;
  const LabelOracle oracle = [channel](std::size_t, const Trajectory&,
                                       const Trajectory&, Label clean,
                                       RandomSource& stream) {
    return ApplyChannel(clean, channel, stream);
  };
  return RunLearner(env, policy_class, learner, cfg.T, rng.NextU64(), oracle,
                    exec);
}

std::size_t BestIterate(const Environment& env, const PolicyClass& policy_class,
                        const std::vector<std::size_t>& iterates, double beta) {
  if (iterates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no iterates");
  }
  std::vector<double> cache(policy_class.size(), std::nan(""));
  std::size_t best = 0;
  double best_value = -INFINITY;
  for (std::size_t pos = 0; pos < iterates.size(); ++pos) {
    const std::size_t k = iterates[pos];
    if (std::isnan(cache.at(k))) {
      cache[k] = KlValue(env, policy_class.members[k], beta);
    }
    if (pos == 0 || cache[k] > best_value) {
      best = pos;
      best_value = cache[k];
    }
  }
  return best;
}

double Kappa(double r_max, double v_max) {
  if (!(r_max > 0.0) || !(v_max > 0.0)) {
    throw Error(ErrorCode::kDomainError, "r_max and v_max must be positive");
  }
  const double root = 8.0 * (r_max + v_max) * std::exp(2.0 * r_max);
  return 1.0 / (root * root);
}

double TheoreticalGamma(double c_eps, double beta, double kappa,
                        double log_card_term, std::size_t T, double c_cov,
                        OnlineLoss loss, double bias_term) {
  if (!(c_eps > 0.0) || !(beta > 0.0) || !(kappa > 0.0) ||
      !(log_card_term > 0.0) || T == 0 || !(c_cov > 0.0) ||
      !(bias_term >= 0.0)) {
    throw Error(ErrorCode::kDomainError, "inputs must be positive");
  }
  const double scale = beta * kappa * beta / (static_cast<double>(T) * c_cov);
  if (loss == OnlineLoss::kPrivateLog) {
    return c_eps * std::sqrt(scale * log_card_term);
  }
  return std::sqrt(scale * (c_eps * c_eps * log_card_term + bias_term));
}

void WriteTraceCsv(std::ostream& out, const OnlineTrace& trace) {
  out << "t,prompt,tau,tau_tilde,z,chosen_index,objective_of_chosen,"
         "exact_gap_of_chosen\n";
  char buf[64];
  for (const auto& r : trace.rounds) {
    out << r.t << ',' << r.prompt << ',' << r.tau << ',' << r.tau_tilde << ','
        << Sign(r.label) << ',' << r.chosen_index << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.objective_of_chosen);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.exact_gap_of_chosen);
    out << buf << '\n';
  }
}

}  // namespace prefalign
