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

#include "prefalign/uclemmas.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "prefalign/error.h"
#include "prefalign/solve_offline.h"

namespace prefalign {
namespace {

// counts[x] = {#(z = -1), #(z = +1)}.
using Counts = std::vector<std::array<double, 2>>;

Counts CountObserved(const LabeledStream& stream, std::size_t contexts) {
  Counts counts(contexts, {0.0, 0.0});
  for (const auto& r : stream.records) {
    if (r.context >= contexts) {
      throw Error(ErrorCode::kInvalidArgument, "context outside the model");
    }
    counts[r.context][r.observed == Label::kPlus ? 1 : 0] += 1.0;
  }
  return counts;
}

std::size_t SharedContexts(std::size_t first, std::size_t other) {
  if (first != other) {
    throw Error(ErrorCode::kInvalidArgument, "models disagree on contexts");
  }
  return first;
}

double RatioOf(double lhs, double rhs) {
  if (lhs == 0.0) return 0.0;
  if (!(rhs > 0.0)) return INFINITY;
  return lhs / rhs;
}

void CheckWeights(std::span<const double> weights, std::size_t contexts) {
  if (weights.size() != contexts) {
    throw Error(ErrorCode::kInvalidArgument,
                "one context weight per context required");
  }
}

}  // namespace

void ConditionalModel::Validate() const {
  if (p_plus.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "model needs a context");
  }
  for (double p : p_plus) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "probability outside [0, 1]");
    }
  }
}

void RegressionModel::Validate() const {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "model needs a context");
  }
  for (double v : values) {
    if (!(v >= -1.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "value outside [-1, 1]");
    }
  }
}

ConditionalModel RegressionModel::AsConditional() const {
  Validate();
  ConditionalModel out;
  out.p_plus.reserve(values.size());
  for (double v : values) out.p_plus.push_back(0.5 * (1.0 + v));
  return out;
}

LabeledStream GenerateLabeledStream(const ConditionalModel& truth,
                                    std::span<const double> context_weights,
                                    std::size_t n, const NoiseConfig& channel,
                                    RandomSource& rng) {
  truth.Validate();
  channel.Validate();
  CheckWeights(context_weights, truth.num_contexts());
  LabeledStream stream;
  stream.channel = channel;
  stream.records.resize(n);
  for (auto& r : stream.records) {
    r.context = rng.Categorical(context_weights);
    r.clean = rng.Bernoulli(truth.p_plus[r.context]) ? Label::kPlus
                                                      : Label::kMinus;
    r.observed = ApplyChannel(r.clean, channel, rng);
  }
  return stream;
}

std::vector<double> PrivateNegLogLikelihoods(
    std::span<const ConditionalModel> models, const LabeledStream& stream,
    double epsilon) {
  if (models.empty()) throw Error(ErrorCode::kEmptyClass, "no models");
  const std::size_t contexts = models[0].num_contexts();
  const Counts counts = CountObserved(stream, contexts);
  const double sigma = SigmaEps(epsilon);
  std::vector<double> out(models.size(), 0.0);
  for (std::size_t k = 0; k < models.size(); ++k) {
    SharedContexts(contexts, models[k].num_contexts());
    double total = 0.0;
    for (std::size_t x = 0; x < contexts; ++x) {
      const double p = models[k].p_plus[x];
      const double plus = (2.0 * sigma - 1.0) * p + (1.0 - sigma);
      const double minus = (2.0 * sigma - 1.0) * (1.0 - p) + (1.0 - sigma);
      if (counts[x][1] > 0.0) total -= counts[x][1] * std::log(plus);
      if (counts[x][0] > 0.0) total -= counts[x][0] * std::log(minus);
    }
    out[k] = total;
  }
  return out;
}

std::size_t MleUnderLdp(std::span<const ConditionalModel> models,
                        const LabeledStream& stream, double epsilon) {
  return ArgMinLowest(PrivateNegLogLikelihoods(models, stream, epsilon));
}

double SumSquaredTv(const ConditionalModel& model,
                    const ConditionalModel& truth,
                    std::span<const ContextId> contexts_seen) {
  SharedContexts(model.num_contexts(), truth.num_contexts());
  double total = 0.0;
  for (ContextId x : contexts_seen) {
    const double gap = model.p_plus.at(x) - truth.p_plus.at(x);
    total += gap * gap;
  }
  return total;
}

std::vector<double> DebiasedSquareLosses(
    std::span<const RegressionModel> models, const LabeledStream& stream,
    double epsilon) {
  if (models.empty()) throw Error(ErrorCode::kEmptyClass, "no models");
  const std::size_t contexts = models[0].num_contexts();
  const Counts counts = CountObserved(stream, contexts);
  const double c = CEps(epsilon);
  std::vector<double> out(models.size(), 0.0);
  for (std::size_t k = 0; k < models.size(); ++k) {
    SharedContexts(contexts, models[k].num_contexts());
    double total = 0.0;
    for (std::size_t x = 0; x < contexts; ++x) {
      const double h = models[k].values[x];
      total += counts[x][1] * (h - c) * (h - c) +
               counts[x][0] * (h + c) * (h + c);
    }
    out[k] = total;
  }
  return out;
}

std::size_t LeastSquaresUnderCorruption(
    std::span<const RegressionModel> models, const LabeledStream& stream,
    double epsilon) {
  return ArgMinLowest(DebiasedSquareLosses(models, stream, epsilon));
}

double BoundReport::MaxRatio() const {
  double best = 0.0;
  for (const auto& row : rows) best = std::max(best, row.ratio);
  return best;
}

std::size_t BoundReport::CountViolations(double k) const {
  std::size_t bad = 0;
  for (const auto& row : rows) {
    if (!(row.lhs <= k * row.rhs) && row.lhs > 0.0) ++bad;
  }
  return bad;
}

double CalibrateConstant(const BoundReport& clean_report, double slack) {
  if (!(slack >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "slack must be >= 1");
  }
  const double k = slack * clean_report.MaxRatio();
  if (!std::isfinite(k) || !(k > 0.0)) {
    throw Error(ErrorCode::kDegenerateFit,
                "calibration run produced no finite positive ratio");
  }
  return k;
}

void WriteBoundReportCsv(std::ostream& out, const BoundReport& report,
                         double k) {
  out << "trial,model_index,lhs,rhs,ratio\n";
  char buf[128];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g\n", r.trial,
                  r.model_index, r.lhs, r.rhs, r.ratio);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "summary,%zu,%zu,%.17g,%.17g\n",
                report.pairs(), report.CountViolations(k), k,
                report.MaxRatio());
  out << buf;
}

BoundReport VerifyLemmaLog(std::span<const ConditionalModel> models,
                           std::size_t truth_index, double epsilon,
                           const LemmaRun& run, RandomSource& rng,
                           Execution exec) {
  if (models.empty()) throw Error(ErrorCode::kEmptyClass, "no models");
  if (truth_index >= models.size()) {
    throw Error(ErrorCode::kInvalidArgument, "truth must be a class member");
  }
  const ConditionalModel& truth = models[truth_index];
  CheckWeights(run.context_weights, truth.num_contexts());
  NoiseConfig channel;
  channel.epsilon = epsilon;
  channel.ordering =
      std::isinf(epsilon) ? Ordering::kClean : Ordering::kPrivacyOnly;

  const double n = static_cast<double>(run.n);
  std::vector<double> lhs(models.size(), 0.0);
  for (std::size_t k = 0; k < models.size(); ++k) {
    SharedContexts(truth.num_contexts(), models[k].num_contexts());
    double tv2 = 0.0;
    for (std::size_t x = 0; x < truth.num_contexts(); ++x) {
      const double gap = models[k].p_plus[x] - truth.p_plus[x];
      tv2 += run.context_weights[x] * gap * gap;
    }
    lhs[k] = n * tv2;
  }
  const double c = CEps(epsilon);
  const double log_term =
      run.log_confidence_weight *
      std::log(static_cast<double>(models.size()) / run.delta);

  const uint64_t seed = rng.NextU64();
  BoundReport report;
  report.delta = run.delta;
  report.rows.resize(run.trials * models.size());
  report.chosen.resize(run.trials);
  ForEachIndex(run.trials, exec, [&](std::size_t trial) {
    RandomSource stream_rng = RandomSource::Stream(seed, trial);
    const LabeledStream stream = GenerateLabeledStream(
        truth, run.context_weights, run.n, channel, stream_rng);
    const std::vector<double> loss =
        PrivateNegLogLikelihoods(models, stream, epsilon);
    report.chosen[trial] = ArgMinLowest(loss);
    for (std::size_t k = 0; k < models.size(); ++k) {
      BoundRow& row = report.rows[trial * models.size() + k];
      row.trial = trial;
      row.model_index = k;
      row.lhs = lhs[k];
      row.rhs = c * c * (loss[k] - loss[truth_index] + log_term);
      row.ratio = RatioOf(row.lhs, row.rhs);
    }
  });
  return report;
}

double ApproximationBias(const NoiseConfig& noise) {
  const double alpha = noise.effective_alpha();
  if (noise.ordering == Ordering::kLtc) {
    return 2.0 * CEps(noise.effective_epsilon()) * alpha;
  }
  return 2.0 * alpha;
}

double PopulationSquaredError(const RegressionModel& h,
                              const RegressionModel& truth,
                              std::span<const double> context_weights) {
  SharedContexts(h.num_contexts(), truth.num_contexts());
  CheckWeights(context_weights, truth.num_contexts());
  double total = 0.0;
  for (std::size_t x = 0; x < truth.num_contexts(); ++x) {
    const double gap = h.values[x] - truth.values[x];
    total += context_weights[x] * gap * gap;
  }
  return total;
}

BoundReport VerifyLemmaSquare(std::span<const RegressionModel> models,
                              std::size_t truth_index, const NoiseConfig& noise,
                              const LemmaRun& run, RandomSource& rng,
                              Execution exec) {
  if (models.empty()) throw Error(ErrorCode::kEmptyClass, "no models");
  if (truth_index >= models.size()) {
    throw Error(ErrorCode::kInvalidArgument, "truth must be a class member");
  }
  noise.Validate();
  const RegressionModel& truth = models[truth_index];
  const ConditionalModel truth_labels = truth.AsConditional();
  const double n = static_cast<double>(run.n);
  std::vector<double> lhs(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    lhs[k] = n * PopulationSquaredError(models[k], truth, run.context_weights);
  }
  const double epsilon = noise.effective_epsilon();
  const double c = CEps(epsilon);
  const double bias = ApproximationBias(noise);
  const double fixed =
      run.square_confidence_weight * c * c *
          std::log(static_cast<double>(models.size()) / run.delta) +
      run.square_bias_weight * n * bias * bias;

  const uint64_t seed = rng.NextU64();
  BoundReport report;
  report.delta = run.delta;
  report.rows.resize(run.trials * models.size());
  report.chosen.resize(run.trials);
  ForEachIndex(run.trials, exec, [&](std::size_t trial) {
    RandomSource stream_rng = RandomSource::Stream(seed, trial);
    const LabeledStream stream = GenerateLabeledStream(
        truth_labels, run.context_weights, run.n, noise, stream_rng);
    const std::vector<double> loss =
        DebiasedSquareLosses(models, stream, epsilon);
    report.chosen[trial] = ArgMinLowest(loss);
    for (std::size_t k = 0; k < models.size(); ++k) {
      BoundRow& row = report.rows[trial * models.size() + k];
      row.trial = trial;
      row.model_index = k;
      row.lhs = lhs[k];
      row.rhs = loss[k] - loss[truth_index] + fixed;
      row.ratio = RatioOf(row.lhs, row.rhs);
    }
  });
  return report;
}

std::vector<double> LeastSquaresExcess(std::span<const RegressionModel> models,
                                       std::size_t truth_index,
                                       const NoiseConfig& noise,
                                       std::span<const double> context_weights,
                                       std::size_t n, std::size_t trials,
                                       uint64_t seed, Execution exec) {
  if (models.empty()) throw Error(ErrorCode::kEmptyClass, "no models");
  if (truth_index >= models.size()) {
    throw Error(ErrorCode::kInvalidArgument, "truth must be a class member");
  }
  const RegressionModel& truth = models[truth_index];
  const ConditionalModel truth_labels = truth.AsConditional();
  std::vector<double> excess(trials);
  ForEachIndex(trials, exec, [&](std::size_t trial) {
    RandomSource stream_rng = RandomSource::Stream(seed, trial);
    const LabeledStream stream = GenerateLabeledStream(
        truth_labels, context_weights, n, noise, stream_rng);
    const std::size_t k = LeastSquaresUnderCorruption(
        models, stream, noise.effective_epsilon());
    excess[trial] = PopulationSquaredError(models[k], truth, context_weights);
  });
  return excess;
}

BiasPlateau FitBiasPlateau(std::span<const RegressionModel> models,
                           std::size_t truth_index, const NoiseConfig& noise,
                           std::span<const double> alphas,
                           std::span<const double> context_weights,
                           std::size_t n, std::size_t trials, uint64_t seed,
                           Execution exec) {
  BiasPlateau out;
  for (double alpha : alphas) {
    NoiseConfig cfg = noise;
    cfg.alpha = alpha;
    const std::vector<double> excess = LeastSquaresExcess(
        models, truth_index, cfg, context_weights, n, trials, seed, exec);
    out.alphas.push_back(alpha);
    out.median_excess.push_back(Median(excess));
  }
  out.fit = FitLogLog(out.alphas, out.median_excess);
  return out;
}

std::vector<RegressionModel> ScaledFamily(const RegressionModel& g,
                                          double max_scale,
                                          std::size_t steps_per_unit) {
  if (steps_per_unit == 0 || !(max_scale >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad scale grid");
  }
  const double m = static_cast<double>(steps_per_unit);
  const auto count = static_cast<std::size_t>(std::floor(max_scale * m));
  std::vector<RegressionModel> out;
  out.reserve(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    const double s = static_cast<double>(i) / m;
    RegressionModel model;
    for (double v : g.values) model.values.push_back(s * v);
    model.Validate();
    out.push_back(std::move(model));
  }
  return out;
}

std::vector<std::vector<double>> LogSpacedNeighbors(
    std::span<const double> truth, double min_step, double max_step,
    std::size_t count, double lo, double hi, RandomSource& rng) {
  if (truth.empty()) throw Error(ErrorCode::kInvalidArgument, "empty truth");
  if (!(min_step > 0.0 && max_step >= min_step && lo < hi)) {
    throw Error(ErrorCode::kInvalidArgument,
                "need 0 < min_step <= max_step and lo < hi");
  }
  const double dim = static_cast<double>(truth.size());
  std::vector<std::vector<double>> out;
  out.emplace_back(truth.begin(), truth.end());
  for (std::size_t j = 0; j < count; ++j) {
    const double frac =
        count > 1 ? static_cast<double>(j) / static_cast<double>(count - 1)
                  : 0.0;
    const double step = min_step * std::pow(max_step / min_step, frac);
    std::vector<double> direction(truth.size());
    double norm2 = 0.0;
    for (double& d : direction) {
      d = rng.Normal();
      norm2 += d * d;
    }
    const double scale = step / std::sqrt(norm2 / dim);
    std::vector<double> model(truth.size());
    for (std::size_t x = 0; x < truth.size(); ++x) {
      model[x] = std::clamp(truth[x] + scale * direction[x], lo, hi);
    }
    out.push_back(std::move(model));
  }
  return out;
}

}  // namespace prefalign
