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

// Uniform-convergence checks for finite classes of binary conditional models:
// the privatized MLE and the debiased least-squares fit, the exact error
// functionals on the left-hand sides, and harnesses that compare them against
// empirical right-hand sides over many seeded streams.

#ifndef PREFALIGN_UCLEMMAS_H_
#define PREFALIGN_UCLEMMAS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "prefalign/kernels.h"
#include "prefalign/noise.h"
#include "prefalign/stats.h"

namespace prefalign {

using ContextId = std::size_t;

// P(y = +1 | x) for x in [0, p_plus.size()).
struct ConditionalModel {
  std::vector<double> p_plus;

  // InvalidArgument when empty or an entry leaves [0, 1].
  void Validate() const;
  std::size_t num_contexts() const { return p_plus.size(); }
};

// h(x) = E[y | x] with entries in [-1, 1].
struct RegressionModel {
  std::vector<double> values;

  void Validate() const;
  std::size_t num_contexts() const { return values.size(); }
  ConditionalModel AsConditional() const;
};

struct LabeledRecord {
  ContextId context = 0;
  Label clean = Label::kPlus;
  Label observed = Label::kPlus;
};

struct LabeledStream {
  std::vector<LabeledRecord> records;
  NoiseConfig channel;

  std::size_t size() const { return records.size(); }
};

// n records: x ~ context_weights, y ~ truth, z = ApplyChannel(y).
LabeledStream GenerateLabeledStream(const ConditionalModel& truth,
                                    std::span<const double> context_weights,
                                    std::size_t n, const NoiseConfig& channel,
                                    RandomSource& rng);

// Negative privatized log-likelihood per model, from observed labels.
std::vector<double> PrivateNegLogLikelihoods(
    std::span<const ConditionalModel> models, const LabeledStream& stream,
    double epsilon);
// Argmin of the above; lowest index on ties. EmptyClass if no models.
std::size_t MleUnderLdp(std::span<const ConditionalModel> models,
                        const LabeledStream& stream, double epsilon);

// sum_t |p_model(x_t) - p_truth(x_t)|^2.
double SumSquaredTv(const ConditionalModel& model,
                    const ConditionalModel& truth,
                    std::span<const ContextId> contexts_seen);

// sum_t (h(x_t) - c(eps) z_t)^2 per model, from observed labels only.
std::vector<double> DebiasedSquareLosses(
    std::span<const RegressionModel> models, const LabeledStream& stream,
    double epsilon);
std::size_t LeastSquaresUnderCorruption(
    std::span<const RegressionModel> models, const LabeledStream& stream,
    double epsilon);

struct BoundRow {
  std::size_t trial = 0;
  std::size_t model_index = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  // lhs / rhs; 0 when lhs == 0 and +inf when lhs > 0 >= rhs.
  double ratio = 0.0;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  // Index chosen by the estimator in each trial.
  std::vector<std::size_t> chosen;
  double delta = 0.05;

  double MaxRatio() const;
  std::size_t CountViolations(double k) const;
  std::size_t pairs() const { return rows.size(); }
};

// slack * MaxRatio() of a clean-channel report.
double CalibrateConstant(const BoundReport& clean_report, double slack = 2.0);

// Rows as trial,model_index,lhs,rhs,ratio followed by one summary row
// "summary,<pairs>,<violations>,<k>,<max_ratio>".
void WriteBoundReportCsv(std::ostream& out, const BoundReport& report,
                         double k);

struct LemmaRun {
  std::vector<double> context_weights;
  std::size_t n = 1000;
  std::size_t trials = 100;
  double delta = 0.05;
  // Multipliers on the confidence and bias terms of the right-hand sides.
  // The defaults make both right-hand sides hold with probability 1 - delta
  // with no further constant.
  double log_confidence_weight = 2.0;
  double square_confidence_weight = 4.0;
  double square_bias_weight = 4.0;
};

// Per (trial, model): lhs = n E_x |p - p*|^2 and
// rhs = c(eps)^2 (L(model) - L(truth)
//                        + log_confidence_weight log(|models| / delta)).
BoundReport VerifyLemmaLog(std::span<const ConditionalModel> models,
                           std::size_t truth_index, double epsilon,
                           const LemmaRun& run, RandomSource& rng,
                           Execution exec = Execution::kParallel);

// Label-mean shift bound used in the square-loss right-hand side: 2 alpha
// when corruption precedes privatization, 2 c(eps) alpha when it follows.
double ApproximationBias(const NoiseConfig& noise);

// Per (trial, model): lhs = n E_x (h - h*)^2 and
// rhs = L(h) - L(h*) + square_confidence_weight c(eps)^2 log(|models| / delta)
//       + square_bias_weight n bias^2.
BoundReport VerifyLemmaSquare(std::span<const RegressionModel> models,
                              std::size_t truth_index, const NoiseConfig& noise,
                              const LemmaRun& run, RandomSource& rng,
                              Execution exec = Execution::kParallel);

// E_x (h(x) - h*(x))^2 under the context weights.
double PopulationSquaredError(const RegressionModel& h,
                              const RegressionModel& truth,
                              std::span<const double> context_weights);

// Per-trial excess E_x (h_hat - h*)^2 of the least-squares fit. Trial i
// draws from Stream(seed, i), so equal seeds pair trials across channels.
std::vector<double> LeastSquaresExcess(std::span<const RegressionModel> models,
                                       std::size_t truth_index,
                                       const NoiseConfig& noise,
                                       std::span<const double> context_weights,
                                       std::size_t n, std::size_t trials,
                                       uint64_t seed,
                                       Execution exec = Execution::kParallel);

struct BiasPlateau {
  std::vector<double> alphas;
  std::vector<double> median_excess;
  LineFit fit;  // log(median_excess) against log(alpha).
};

// Median least-squares excess at each alpha (other channel fields from
// `noise`), and its log-log fit.
BiasPlateau FitBiasPlateau(std::span<const RegressionModel> models,
                           std::size_t truth_index, const NoiseConfig& noise,
                           std::span<const double> alphas,
                           std::span<const double> context_weights,
                           std::size_t n, std::size_t trials, uint64_t seed,
                           Execution exec = Execution::kParallel);

// {(i / steps_per_unit) * g : i = 0, 1, ...} up to max_scale. Member
// steps_per_unit equals g exactly.
std::vector<RegressionModel> ScaledFamily(const RegressionModel& g,
                                          double max_scale,
                                          std::size_t steps_per_unit);

// `truth` followed by `count` perturbations of it. Perturbation j moves by
// an RMS distance log-spaced from min_step to max_step along a random
// direction from `rng`; entries are clamped to [lo, hi].
std::vector<std::vector<double>> LogSpacedNeighbors(
    std::span<const double> truth, double min_step, double max_step,
    std::size_t count, double lo, double hi, RandomSource& rng);

}  // namespace prefalign

#endif  // PREFALIGN_UCLEMMAS_H_
