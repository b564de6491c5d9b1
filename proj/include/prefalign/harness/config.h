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

// Experiment configuration and its JSON encoding. The schema is documented in
// docs/format.md. Parse errors are ConfigError with the offending field path.

#ifndef PREFALIGN_HARNESS_CONFIG_H_
#define PREFALIGN_HARNESS_CONFIG_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefalign/env.h"
#include "prefalign/noise.h"

namespace prefalign {

enum class Experiment { kOffline, kOnline };
enum class Solver { kPrivChipo, kSquareChipo, kPrivXpo, kSquareXpo };

std::string ExperimentName(Experiment experiment);
std::string SolverName(Solver solver);
Solver ParseSolver(const std::string& name);
bool IsOnlineSolver(Solver solver);

struct NoiseGrid {
  std::vector<double> epsilons = {kNoPrivacy};
  std::vector<double> alphas = {0.0};
  std::vector<Ordering> orderings = {Ordering::kClean};
  std::vector<AdversarySpec> adversaries = {AdversarySpec{}};
};

struct SeedSpec {
  uint64_t base = 0;
  std::size_t replicates = 1;
  // Replicate indices run are [first_replicate, first_replicate + replicates).
  std::size_t first_replicate = 0;
};

struct GammaSpec {
  // When set, gamma follows the theoretical formula with this delta.
  bool theory = false;
  double value = 0.0;
  double delta = 0.05;
};

struct AssertSpec {
  // Slope band for the log-log fit of median gap against `fit_x`.
  std::optional<std::string> fit_x;
  double slope_min = -INFINITY;
  double slope_max = INFINITY;
  std::optional<double> max_median_gap;
};

struct LemmaSpec {
  // p_plus tables (log lemma) or regression values (square lemma).
  std::vector<std::vector<double>> models;
  std::size_t truth_index = 0;
  std::vector<double> context_weights;
  std::size_t n = 2000;
  std::size_t trials = 100;
  double delta = 0.05;
  double slack = 2.0;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::kOffline;
  EnvSpec env;
  ClassSpec policy_class;
  double beta = 1.0;
  NoiseGrid noise;
  Solver solver = Solver::kPrivChipo;
  // Dataset sizes (offline) or round counts (online).
  std::vector<std::size_t> sizes = {1000};
  GammaSpec gamma;
  SeedSpec seeds;
  std::string output_dir;
  std::optional<AssertSpec> assertions;
  std::optional<LemmaSpec> lemma;
};

// Defaults follow the experiment: offline runs Priv-chi-PO on a chi-mix
// class, online runs Square-XPO on a KL class, unless overridden.
ExperimentConfig ParseConfig(const nlohmann::json& j);
ExperimentConfig LoadConfig(const std::string& path);
nlohmann::json ConfigToJson(const ExperimentConfig& config);

// ConfigError (with field path) unless every grid is nonempty and every
// cell is a valid channel for the chosen solver.
void ValidateConfig(const ExperimentConfig& config);

// Doubles print with 17 significant digits; +inf prints as "inf".
std::string FormatDouble(double value);

}  // namespace prefalign

#endif  // PREFALIGN_HARNESS_CONFIG_H_
