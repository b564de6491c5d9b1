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
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "prefalign/stats.h"
#include "test_util.h"

namespace prefalign {
namespace {

using testing_util::ThrowsCode;

const std::vector<double> kQuarterWeights(4, 0.25);
const std::vector<double> kTruthP = {0.7, 0.4, 0.55, 0.3};
const std::vector<double> kTruthH = {0.6, -0.2, 0.3, -0.5};

std::vector<ConditionalModel> ConditionalFamily(uint64_t seed) {
  RandomSource rng(seed);
  std::vector<ConditionalModel> out;
  for (auto& p : LogSpacedNeighbors(kTruthP, 0.005, 0.3, 24, 0.02, 0.98, rng)) {
    out.push_back({std::move(p)});
  }
  return out;
}

std::vector<RegressionModel> RegressionFamily(uint64_t seed) {
  RandomSource rng(seed);
  std::vector<RegressionModel> out;
  for (auto& h : LogSpacedNeighbors(kTruthH, 0.01, 0.6, 24, -1.0, 1.0, rng)) {
    out.push_back({std::move(h)});
  }
  return out;
}

LabeledStream SingleContextStream(const std::vector<Label>& observed) {
  LabeledStream s;
  for (Label z : observed) s.records.push_back({0, z, z});
  return s;
}

TEST(ModelTest, Validation) {
  EXPECT_TRUE(ThrowsCode([] { ConditionalModel{{}}.Validate(); },
                         ErrorCode::kInvalidArgument));
  EXPECT_TRUE(ThrowsCode([] { ConditionalModel{{1.2}}.Validate(); },
                         ErrorCode::kInvalidArgument));
  EXPECT_TRUE(ThrowsCode([] { RegressionModel{{-1.5}}.Validate(); },
                         ErrorCode::kInvalidArgument));
  const RegressionModel h{{0.2, -1.0}};
  EXPECT_EQ(h.AsConditional().p_plus,
            (std::vector<double>{0.6, 0.0}));
}

TEST(MleUnderLdpTest, PicksTruthAtModeratePrivacy) {
  const std::vector<ConditionalModel> models = {{{0.2}}, {{0.8}}};
  const std::vector<double> w = {1.0};
  const NoiseConfig channel{1.0, 0.0, Ordering::kPrivacyOnly};
  int hits = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    RandomSource rng(seed);
    const LabeledStream s = GenerateLabeledStream(models[1], w, 2000, channel,
                                                  rng);
    hits += MleUnderLdp(models, s, 1.0) == 1;
  }
  EXPECT_GE(hits, 99);
}

TEST(MleUnderLdpTest, EmptyStreamAndEmptyClass) {
  const std::vector<ConditionalModel> models = {{{0.2}}, {{0.8}}};
  EXPECT_EQ(MleUnderLdp(models, LabeledStream{}, 1.0), 0u);
  const std::vector<ConditionalModel> none;
  EXPECT_TRUE(ThrowsCode([&] { MleUnderLdp(none, LabeledStream{}, 1.0); },
                         ErrorCode::kEmptyClass));
}

TEST(MleUnderLdpTest, PrivateLikelihoodFormula) {
  const std::vector<ConditionalModel> models = {{{0.9}}};
  const LabeledStream s =
      SingleContextStream({Label::kPlus, Label::kPlus, Label::kMinus});
  const double eps = std::log(3.0);
  // Private plus-probability 0.5 * 0.9 + 0.25 = 0.7.
  EXPECT_NEAR(PrivateNegLogLikelihoods(models, s, eps)[0],
              -2.0 * std::log(0.7) - std::log(0.3), 1e-12);
}

// Plain MLE over explicit records, without counting.
std::size_t NaiveMle(const std::vector<ConditionalModel>& models,
                     const LabeledStream& s) {
  std::size_t best = 0;
  double best_ll = -INFINITY;
  for (std::size_t k = 0; k < models.size(); ++k) {
    double ll = 0.0;
    for (const LabeledRecord& r : s.records) {
      const double p = models[k].p_plus[r.context];
      ll += std::log(r.observed == Label::kPlus ? p : 1.0 - p);
    }
    if (ll > best_ll) {
      best_ll = ll;
      best = k;
    }
  }
  return best;
}

TEST(MleUnderLdpTest, ReducesToPlainMleOnCorpus) {
  RandomSource rng(1);
  int agree = 0;
  const int instances = 1000;
  for (int i = 0; i < instances; ++i) {
    const std::size_t contexts = 1 + rng.UniformIndex(4);
    const std::size_t size = 2 + rng.UniformIndex(8);
    std::vector<ConditionalModel> models(size);
    for (auto& m : models) {
      for (std::size_t x = 0; x < contexts; ++x) {
        m.p_plus.push_back(0.05 + 0.9 * rng.Uniform());
      }
    }
    const std::vector<double> w(contexts, 1.0 / contexts);
    const std::size_t truth = rng.UniformIndex(size);
    const LabeledStream s = GenerateLabeledStream(
        models[truth], w, 1 + rng.UniformIndex(300), NoiseConfig{}, rng);
    agree += MleUnderLdp(models, s, kNoPrivacy) == NaiveMle(models, s);
  }
  EXPECT_EQ(agree, instances);
}

TEST(SumSquaredTvTest, Examples) {
  const ConditionalModel truth{{0.5, 0.2}};
  const ConditionalModel model{{0.8, 0.2}};
  EXPECT_EQ(SumSquaredTv(truth, truth, std::vector<ContextId>{0, 1, 1}), 0.0);
  EXPECT_NEAR(SumSquaredTv(model, truth, std::vector<ContextId>(10, 0)), 0.9,
              1e-12);
  // Half the L1 distance over both outcomes.
  const std::vector<ContextId> seen = {0, 1, 0};
  double brute = 0.0;
  for (ContextId x : seen) {
    const double tv = 0.5 * (std::abs(model.p_plus[x] - truth.p_plus[x]) +
                             std::abs((1 - model.p_plus[x]) -
                                      (1 - truth.p_plus[x])));
    brute += tv * tv;
  }
  EXPECT_NEAR(SumSquaredTv(model, truth, seen), brute, 1e-15);
}

TEST(LeastSquaresTest, Examples) {
  const std::vector<RegressionModel> models = {{{0.6}}, {{-0.6}}};
  const std::vector<double> w = {1.0};
  const ConditionalModel truth = models[0].AsConditional();
  EXPECT_EQ(LeastSquaresUnderCorruption(models, LabeledStream{}, 1.0), 0u);
  int clean_hits = 0;
  int ctl_hits = 0;
  const NoiseConfig ctl{1.0, 0.3, Ordering::kCtl};
  for (uint64_t seed = 0; seed < 100; ++seed) {
    RandomSource rng(seed);
    const LabeledStream s =
        GenerateLabeledStream(truth, w, 2000, NoiseConfig{}, rng);
    clean_hits += LeastSquaresUnderCorruption(models, s, kNoPrivacy) == 0;
    const LabeledStream t = GenerateLabeledStream(truth, w, 5000, ctl, rng);
    ctl_hits += LeastSquaresUnderCorruption(models, t, 1.0) == 0;
  }
  EXPECT_GE(clean_hits, 99);
  EXPECT_GE(ctl_hits, 95);
}

TEST(LeastSquaresTest, DebiasedLossFormula) {
  const std::vector<RegressionModel> models = {{{0.5}}};
  const LabeledStream s = SingleContextStream({Label::kPlus, Label::kMinus});
  const double eps = std::log(3.0);
  EXPECT_NEAR(DebiasedSquareLosses(models, s, eps)[0],
              (0.5 - 2.0) * (0.5 - 2.0) + (0.5 + 2.0) * (0.5 + 2.0), 1e-12);
}

TEST(LeastSquaresTest, BlindToChannelMetadata) {
  const std::vector<RegressionModel> models = RegressionFamily(2);
  RandomSource rng(3);
  LabeledStream s =
      GenerateLabeledStream(models[0].AsConditional(), kQuarterWeights, 3000,
                            NoiseConfig{1.0, 0.2, Ordering::kLtc}, rng);
  const auto with_metadata = DebiasedSquareLosses(models, s, 1.0);
  s.channel = NoiseConfig{};
  EXPECT_EQ(DebiasedSquareLosses(models, s, 1.0), with_metadata);
}

TEST(LeastSquaresTest, PrivacyOnlyTargetIsUnbiasedPerContext) {
  const RegressionModel truth{kTruthH};
  RandomSource rng(4);
  const double eps = 1.0;
  const LabeledStream s =
      GenerateLabeledStream(truth.AsConditional(), kQuarterWeights, 1000000,
                            NoiseConfig{eps, 0.0, Ordering::kPrivacyOnly}, rng);
  const double c = CEps(eps);
  std::vector<double> sum(4, 0.0);
  std::vector<double> count(4, 0.0);
  for (const LabeledRecord& r : s.records) {
    sum[r.context] += c * Sign(r.observed);
    count[r.context] += 1.0;
  }
  for (std::size_t x = 0; x < 4; ++x) {
    const double mean = sum[x] / count[x];
    const double var = c * c - mean * mean;
    EXPECT_LE(std::abs(mean - truth.values[x]),
              3.0 * std::sqrt(var / count[x]));
  }
}

TEST(BoundReportTest, RatiosAndViolations) {
  BoundReport report;
  report.rows = {{0, 0, 0.0, 1.0, 0.0},
                 {0, 1, 2.0, 1.0, 2.0},
                 {1, 1, 1.0, -1.0, INFINITY}};
  EXPECT_EQ(report.MaxRatio(), INFINITY);
  EXPECT_EQ(report.CountViolations(3.0), 1u);
  EXPECT_EQ(report.CountViolations(1.5), 2u);
  EXPECT_TRUE(ThrowsCode([&] { CalibrateConstant(report); },
                         ErrorCode::kDegenerateFit));
  report.rows.pop_back();
  EXPECT_EQ(CalibrateConstant(report, 2.0), 4.0);
  std::ostringstream out;
  WriteBoundReportCsv(out, report, 4.0);
  EXPECT_EQ(out.str(),
            "trial,model_index,lhs,rhs,ratio\n0,0,0,1,0\n0,1,2,1,2\n"
            "summary,2,0,4,2\n");
}

TEST(VerifyLemmaLogTest, TruthHasZeroLhsAndRowsAreComplete) {
  const std::vector<ConditionalModel> models = ConditionalFamily(5);
  LemmaRun run{kQuarterWeights, 500, 20};
  RandomSource rng(6);
  const BoundReport report = VerifyLemmaLog(models, 0, 1.0, run, rng);
  ASSERT_EQ(report.pairs(), 20 * models.size());
  ASSERT_EQ(report.chosen.size(), 20u);
  for (const BoundRow& row : report.rows) {
    if (row.model_index == 0) {
      EXPECT_EQ(row.lhs, 0.0);
      EXPECT_GT(row.rhs, 0.0);
    }
  }
  EXPECT_TRUE(ThrowsCode(
      [&] { VerifyLemmaLog(models, models.size(), 1.0, run, rng); },
      ErrorCode::kInvalidArgument));
}

TEST(VerifyLemmaLogTest, ParallelMatchesSerial) {
  const std::vector<ConditionalModel> models = ConditionalFamily(7);
  LemmaRun run{kQuarterWeights, 800, 30};
  RandomSource a(8);
  RandomSource b(8);
  SetWorkerCount(3);
  const BoundReport x =
      VerifyLemmaLog(models, 0, 0.5, run, a, Execution::kParallel);
  SetWorkerCount(0);
  const BoundReport y =
      VerifyLemmaLog(models, 0, 0.5, run, b, Execution::kSerial);
  std::ostringstream sx;
  std::ostringstream sy;
  WriteBoundReportCsv(sx, x, 1.0);
  WriteBoundReportCsv(sy, y, 1.0);
  EXPECT_EQ(sx.str(), sy.str());
}

TEST(VerifyLemmaLogTest, CleanCalibrationHoldsUnderPrivacy) {
  const std::vector<ConditionalModel> models = ConditionalFamily(9);
  LemmaRun run{kQuarterWeights, 2000, 100};
  RandomSource cal(10);
  const BoundReport clean = VerifyLemmaLog(models, 0, kNoPrivacy, run, cal);
  const double k = CalibrateConstant(clean);
  std::vector<double> max_ratios;
  for (double eps : {0.5, 1.0, 2.0}) {
    RandomSource rng(11);
    const BoundReport r = VerifyLemmaLog(models, 0, eps, run, rng);
    EXPECT_EQ(r.CountViolations(k), 0u) << eps;
    max_ratios.push_back(r.MaxRatio());
  }
  // Normalized by c(eps)^2, the worst ratio is stable across epsilon.
  const auto [lo, hi] =
      std::minmax_element(max_ratios.begin(), max_ratios.end());
  EXPECT_LE(*hi, 2.0 * *lo);
}

TEST(VerifyLemmaSquareTest, DegenerateOrderingsCoincideWithPrivacyOnly) {
  const std::vector<RegressionModel> models = RegressionFamily(12);
  LemmaRun run{kQuarterWeights, 1000, 20};
  auto csv = [&](const NoiseConfig& noise) {
    RandomSource rng(13);
    std::ostringstream out;
    WriteBoundReportCsv(out, VerifyLemmaSquare(models, 0, noise, run, rng),
                        1.0);
    return out.str();
  };
  const std::string priv = csv({1.0, 0.0, Ordering::kPrivacyOnly});
  EXPECT_EQ(csv({1.0, 0.0, Ordering::kCtl}), priv);
  EXPECT_EQ(csv({1.0, 0.0, Ordering::kLtc}), priv);
}

TEST(VerifyLemmaSquareTest, TruthHasZeroLhsAndBiasEntersRhs) {
  const std::vector<RegressionModel> models = RegressionFamily(14);
  LemmaRun run{kQuarterWeights, 1000, 5};
  RandomSource a(15);
  RandomSource b(15);
  const BoundReport ctl = VerifyLemmaSquare(
      models, 0, {1.0, 0.1, Ordering::kCtl}, run, a);
  const BoundReport ltc = VerifyLemmaSquare(
      models, 0, {1.0, 0.1, Ordering::kLtc}, run, b);
  for (std::size_t i = 0; i < ctl.rows.size(); ++i) {
    if (ctl.rows[i].model_index == 0) {
      EXPECT_EQ(ctl.rows[i].lhs, 0.0);
    }
  }
  EXPECT_NEAR(ApproximationBias({1.0, 0.1, Ordering::kCtl}), 0.2, 1e-15);
  EXPECT_NEAR(ApproximationBias({1.0, 0.1, Ordering::kLtc}),
              0.2 * CEps(1.0), 1e-15);
  EXPECT_NEAR(ApproximationBias({1.0, 0.1, Ordering::kPrivacyOnly}), 0.0,
              1e-15);
  // Truth row: rhs = 4 c^2 log(|H| / delta) + 4 n bias^2.
  const double c = CEps(1.0);
  const double fixed =
      4.0 * c * c * std::log(models.size() / 0.05) + 4.0 * 1000 * 0.04;
  EXPECT_NEAR(ctl.rows[0].rhs, fixed, 1e-9);
}

TEST(VerifyLemmaSquareTest, CleanCalibrationHoldsAcrossChannels) {
  const std::vector<RegressionModel> models = RegressionFamily(16);
  LemmaRun run{kQuarterWeights, 2000, 50};
  RandomSource cal(17);
  const double k =
      CalibrateConstant(VerifyLemmaSquare(models, 0, NoiseConfig{}, run, cal));
  for (double eps : {0.5, 1.0, 2.0}) {
    for (double alpha : {0.0, 0.1, 0.3}) {
      for (Ordering o : {Ordering::kCtl, Ordering::kLtc}) {
        RandomSource rng(18);
        const BoundReport r =
            VerifyLemmaSquare(models, 0, {eps, alpha, o}, run, rng);
        EXPECT_EQ(r.CountViolations(k), 0u)
            << eps << " " << alpha << " " << OrderingName(o);
      }
    }
  }
}

TEST(PopulationSquaredErrorTest, WeightedGap) {
  const RegressionModel h{{0.5, 0.0}};
  const RegressionModel t{{0.1, 0.2}};
  const std::vector<double> w = {0.25, 0.75};
  EXPECT_NEAR(PopulationSquaredError(h, t, w),
              0.25 * 0.16 + 0.75 * 0.04, 1e-15);
}

TEST(ScaledFamilyTest, ContainsExactTruth) {
  const RegressionModel g{kTruthH};
  const auto family = ScaledFamily(g, 1.2, 400);
  ASSERT_EQ(family.size(), 481u);
  EXPECT_EQ(family[400].values, g.values);
  for (double v : family[0].values) EXPECT_EQ(v, 0.0);
}

TEST(LeastSquaresExcessTest, PairedAcrossCalls) {
  const auto family = ScaledFamily(RegressionModel{kTruthH}, 1.2, 100);
  const NoiseConfig ctl{1.0, 0.1, Ordering::kCtl};
  const auto a = LeastSquaresExcess(family, 100, ctl, kQuarterWeights, 5000,
                                    10, 21);
  const auto b = LeastSquaresExcess(family, 100, ctl, kQuarterWeights, 5000,
                                    10, 21, Execution::kSerial);
  EXPECT_EQ(a, b);
  for (double e : a) EXPECT_GE(e, 0.0);
}

TEST(BiasPlateauTest, QuadraticInAlpha) {
  const RegressionModel g{kTruthH};
  const auto family = ScaledFamily(g, 1.2, 400);
  const std::vector<double> alphas = {0.05, 0.1, 0.2, 0.4};
  const BiasPlateau plateau = FitBiasPlateau(
      family, 400, NoiseConfig{1.0, 0.0, Ordering::kCtl}, alphas,
      kQuarterWeights, 100000, 30, 22);
  ASSERT_EQ(plateau.median_excess.size(), 4u);
  EXPECT_NEAR(plateau.fit.slope, 2.0, 0.4);
  // Asymptotic excess (2 alpha)^2 E[g^2].
  double eg2 = 0.0;
  for (double v : kTruthH) eg2 += 0.25 * v * v;
  EXPECT_NEAR(plateau.median_excess[2], 0.16 * eg2, 0.2 * 0.16 * eg2);
}

TEST(LogSpacedNeighborsTest, DistancesAndClamp) {
  RandomSource rng(23);
  const auto models = LogSpacedNeighbors(kTruthP, 0.01, 0.1, 3, 0.0, 1.0, rng);
  ASSERT_EQ(models.size(), 4u);
  EXPECT_EQ(models[0], kTruthP);
  double rms = 0.0;
  for (std::size_t x = 0; x < 4; ++x) {
    rms += (models[1][x] - kTruthP[x]) * (models[1][x] - kTruthP[x]);
  }
  EXPECT_NEAR(std::sqrt(rms / 4.0), 0.01, 1e-12);
  RandomSource clamp_rng(24);
  for (const auto& m :
       LogSpacedNeighbors(kTruthP, 0.5, 5.0, 10, 0.1, 0.9, clamp_rng)) {
    for (double v : m) {
      EXPECT_GE(v, 0.1);
      EXPECT_LE(v, 0.9);
    }
  }
  RandomSource bad(25);
  EXPECT_TRUE(ThrowsCode(
      [&] { LogSpacedNeighbors(kTruthP, 0.0, 1.0, 3, 0.0, 1.0, bad); },
      ErrorCode::kInvalidArgument));
}

}  // namespace
}  // namespace prefalign
