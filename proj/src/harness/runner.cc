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

#include "prefalign/harness/runner.h"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>

#include <omp.h>

#include "prefalign/error.h"
#include "prefalign/kernels.h"
#include "prefalign/solve_offline.h"
#include "prefalign/solve_online.h"

namespace prefalign {
namespace {

double FlipRate(const std::vector<PreferenceSample>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t flips = 0;
  for (const auto& s : samples) flips += s.label != s.clean_label;
  return static_cast<double>(flips) / static_cast<double>(samples.size());
}

double ResolveGamma(const ExperimentConfig& config, const Environment& env,
                    const PolicyClass& policy_class, const RunCell& cell,
                    OnlineLoss loss) {
  if (!config.gamma.theory) return config.gamma.value;
  const double c = CEps(cell.noise.effective_epsilon());
  const double kappa = Kappa(
      env.r_max(), ComputeVmax(env, policy_class, config.beta, Flavor::kXpo));
  const double log_term =
      std::log(static_cast<double>(policy_class.size()) *
               static_cast<double>(cell.size) / config.gamma.delta);
  const double alpha = cell.noise.effective_alpha();
  const double t = static_cast<double>(cell.size);
  double bias = t * alpha * alpha;
  if (cell.noise.ordering == Ordering::kLtc) bias *= c * c;
  return TheoreticalGamma(c, config.beta, kappa, log_term, cell.size,
                          Coverability(env, policy_class), loss, bias);
}

}  // namespace

std::vector<RunCell> EnumerateCells(const ExperimentConfig& config) {
  std::vector<RunCell> cells;
  for (std::size_t size : config.sizes) {
    for (double eps : config.noise.epsilons) {
      for (double alpha : config.noise.alphas) {
        for (Ordering ordering : config.noise.orderings) {
          for (const auto& adversary : config.noise.adversaries) {
            for (std::size_t r = 0; r < config.seeds.replicates; ++r) {
              RunCell cell;
              cell.size = size;
              cell.noise.epsilon = eps;
              cell.noise.alpha = alpha;
              cell.noise.ordering = ordering;
              cell.noise.adversary = adversary;
              cell.replicate = config.seeds.first_replicate + r;
              cells.push_back(cell);
            }
          }
        }
      }
    }
  }
  return cells;
}

Environment SweepEnvironment(const ExperimentConfig& config) {
  RandomSource rng = RandomSource::Stream(config.seeds.base, kEnvironmentStream);
  return MakeEnvironment(config.env, rng);
}

RunRecord RunSingle(const ExperimentConfig& config, const Environment& env,
                    const RunCell& cell) {
  const auto start = std::chrono::steady_clock::now();
  RandomSource replicate = RandomSource::Stream(config.seeds.base, cell.replicate);
  RandomSource class_rng = replicate.Child(1);
  RandomSource data_rng = replicate.Child(2);
  const PolicyClass policy_class =
      BuildPolicyClass(env, config.beta, config.policy_class, class_rng);

  RunRecord record;
  record.experiment = config.experiment;
  record.solver = config.solver;
  record.ordering = cell.noise.ordering;
  record.adversary = cell.noise.adversary;
  record.epsilon = cell.noise.epsilon;
  record.alpha = cell.noise.alpha;
  record.size = cell.size;
  record.replicate = cell.replicate;
  record.seed = replicate.seed();
  record.beta = config.beta;

  if (config.experiment == Experiment::kOffline) {
    const PreferenceDataset dataset =
        GenerateOfflineDataset(env, cell.size, cell.noise, data_rng);
    const LossContext ctx{config.beta, cell.noise.effective_epsilon(),
                          env.r_max(), Flavor::kChiPo};
    const OfflineSolveReport report =
        config.solver == Solver::kPrivChipo
            ? PrivChipo(dataset, policy_class, ctx, env.pi_ref())
            : SquareChipo(dataset, policy_class, ctx, env.pi_ref());
    const Policy& best =
        policy_class.members[policy_class.optimal_index.value_or(0)];
    record.chosen_index = report.chosen_index;
    record.gap = Value(env, best) - Value(env, report.chosen_policy);
    record.flip_rate = FlipRate(dataset.samples);
  } else {
    OnlineConfig online;
    online.T = cell.size;
    online.beta = config.beta;
    online.noise = cell.noise;
    online.loss = config.solver == Solver::kPrivXpo ? OnlineLoss::kPrivateLog
                                                    : OnlineLoss::kDebiasedSquare;
    online.gamma = ResolveGamma(config, env, policy_class, cell, online.loss);
    const OnlineTrace trace = RunOnline(env, policy_class, online, data_rng);
    record.gamma = online.gamma;
    record.chosen_index = trace.final_index;
    record.gap = trace.final_gap;
    record.flip_rate = FlipRate(trace.data);
  }
  record.wall_time = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return record;
}

std::vector<RunRecord> RunSweep(const ExperimentConfig& config,
                                const SweepOptions& options) {
  ValidateConfig(config);
  const std::vector<RunCell> cells = EnumerateCells(config);
  for (const auto& cell : cells) {
    try {
      cell.noise.Validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigError, std::string("noise: ") + e.what());
    }
  }
  const Environment env = SweepEnvironment(config);

  std::ofstream out;
  if (options.records_path) {
    out.open(*options.records_path, std::ios::out | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoError, "cannot write " + *options.records_path);
    }
    WriteRecordsHeader(out);
    out.flush();
  }

  const std::size_t count = cells.size();
  std::vector<RunRecord> records(count);
  std::vector<char> done(count, 0);
  std::vector<std::exception_ptr> errors(count);
  std::size_t next_to_write = 0;
  std::mutex writer;

  // Runs are the unit of parallelism; kernels inside a run stay serial.
  omp_set_max_active_levels(1);
  const int workers = options.workers > 0 ? options.workers : WorkerCount();
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      RunRecord record = RunSingle(config, env, cells[k]);
      record.run_index = k;
      records[k] = record;
    } catch (...) {
      errors[k] = std::current_exception();
    }
    std::lock_guard<std::mutex> lock(writer);
    done[k] = 1;
    while (next_to_write < count && done[next_to_write] &&
           !errors[next_to_write]) {
      if (out.is_open()) {
        WriteRecordRow(out, records[next_to_write]);
        out.flush();
      }
      ++next_to_write;
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

ExperimentConfig ResolveSingleRun(const ExperimentConfig& config,
                                  const RunRecord& record) {
  ExperimentConfig single = config;
  single.sizes = {record.size};
  single.noise.epsilons = {record.epsilon};
  single.noise.alphas = {record.alpha};
  single.noise.orderings = {record.ordering};
  single.noise.adversaries = {record.adversary};
  single.seeds.replicates = 1;
  single.seeds.first_replicate = record.replicate;
  single.assertions.reset();
  return single;
}

}  // namespace prefalign
