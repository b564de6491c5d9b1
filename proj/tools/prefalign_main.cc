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

// prefalign: command-line front end for sweeps, lemma checks and plots.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error,
// 3 failed assertion (with --assert).

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prefalign/error.h"
#include "prefalign/harness/config.h"
#include "prefalign/harness/plot.h"
#include "prefalign/harness/records.h"
#include "prefalign/harness/runner.h"
#include "prefalign/kernels.h"
#include "prefalign/uclemmas.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace prefalign {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAssert = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  int workers = 0;
  bool assert_mode = false;
};

class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, path + ": " + e.what());
  }
}

// --out, then the config's output_dir, then $PREFALIGN_OUT, then
// ./prefalign_out.
std::string ResolveOutDir(const CommonFlags& flags,
                          const std::string& config_dir) {
  std::string dir = flags.out_dir;
  if (dir.empty()) dir = config_dir;
  if (dir.empty()) {
    const char* env = std::getenv("PREFALIGN_OUT");
    if (env != nullptr && *env != '\0') dir = env;
  }
  if (dir.empty()) dir = "prefalign_out";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir);
  return dir;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
}

ExperimentConfig LoadExperiment(const CommonFlags& flags,
                                std::optional<Experiment> forced) {
  json j = ReadJson(flags.config_path);
  if (forced) {
    const std::string want = ExperimentName(*forced);
    if (!j.is_object()) {
      throw Error(ErrorCode::kConfigError, "<root>: expected object");
    }
    if (!j.contains("experiment")) {
      j["experiment"] = want;
    } else if (j["experiment"] != want) {
      throw Error(ErrorCode::kConfigError,
                  "experiment: this subcommand runs '" + want + "' only");
    }
  }
  ExperimentConfig config = ParseConfig(j);
  if (flags.seed) config.seeds.base = *flags.seed;
  return config;
}

int RunExperiment(const CommonFlags& flags, std::optional<Experiment> forced) {
  ExperimentConfig config = LoadExperiment(flags, forced);
  const fs::path out = ResolveOutDir(flags, config.output_dir);
  WriteText(out / "config.resolved.json", ConfigToJson(config).dump(2) + "\n");
  SweepOptions options;
  options.records_path = (out / "records.csv").string();
  options.workers = flags.workers;
  const std::vector<RunRecord> records = RunSweep(config, options);
  {
    std::ofstream summary(out / "summary.csv", std::ios::trunc);
    WriteSummaryCsv(summary, records);
  }
  std::cout << "wrote " << records.size() << " records to "
            << options.records_path.value() << "\n";
  if (!flags.assert_mode) return kExitOk;

  for (const auto& r : records) {
    if (r.gap < -1e-9) {
      throw AssertionFailure("run " + std::to_string(r.run_index) +
                             " has negative gap " + FormatDouble(r.gap));
    }
  }
  if (config.assertions) {
    const AssertSpec& a = *config.assertions;
    if (a.fit_x) {
      const LineFit fit = FitScaling(records, *a.fit_x, "gap");
      std::cout << "fit slope " << FormatDouble(fit.slope) << " r2 "
                << FormatDouble(fit.r2) << "\n";
      if (!(fit.slope >= a.slope_min && fit.slope <= a.slope_max)) {
        throw AssertionFailure("slope " + FormatDouble(fit.slope) +
                               " outside [" + FormatDouble(a.slope_min) +
                               ", " + FormatDouble(a.slope_max) + "]");
      }
    }
    if (a.max_median_gap) {
      std::map<std::string, std::vector<double>> cells;
      for (const auto& r : records) {
        cells[RecordText(r, "size") + "/" + RecordText(r, "epsilon") + "/" +
              RecordText(r, "alpha") + "/" + RecordText(r, "ordering") + "/" +
              RecordText(r, "adversary")]
            .push_back(r.gap);
      }
      for (const auto& [key, gaps] : cells) {
        if (Median(gaps) > *a.max_median_gap) {
          throw AssertionFailure("cell " + key + " median gap " +
                                 FormatDouble(Median(gaps)) + " above bound");
        }
      }
    }
  }
  std::cout << "assertions passed\n";
  return kExitOk;
}

const LemmaSpec& RequireLemma(const ExperimentConfig& config) {
  if (!config.lemma) throw Error(ErrorCode::kConfigError, "lemma: required");
  return *config.lemma;
}

LemmaRun MakeRun(const LemmaSpec& lemma) {
  LemmaRun run;
  run.context_weights = lemma.context_weights;
  run.n = lemma.n;
  run.trials = lemma.trials;
  run.delta = lemma.delta;
  return run;
}

void WriteReport(const fs::path& path, const BoundReport& report, double k) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  WriteBoundReportCsv(out, report, k);
}

int VerifyLog(const CommonFlags& flags) {
  const ExperimentConfig config = LoadExperiment(flags, std::nullopt);
  const LemmaSpec& lemma = RequireLemma(config);
  std::vector<ConditionalModel> models;
  for (std::size_t i = 0; i < lemma.models.size(); ++i) {
    ConditionalModel m{lemma.models[i]};
    try {
      m.Validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigError,
                  "lemma.models[" + std::to_string(i) + "]: " + e.what());
    }
    models.push_back(std::move(m));
  }
  const fs::path out = ResolveOutDir(flags, config.output_dir);
  WriteText(out / "config.resolved.json", ConfigToJson(config).dump(2) + "\n");
  const LemmaRun run = MakeRun(lemma);
  const uint64_t base = config.seeds.base;

  RandomSource calibration_rng = RandomSource::Stream(base, 0);
  const BoundReport clean = VerifyLemmaLog(models, lemma.truth_index,
                                           kNoPrivacy, run, calibration_rng);
  const double k = CalibrateConstant(clean, lemma.slack);
  WriteReport(out / "calibration.csv", clean, k);

  std::ofstream summary(out / "summary.csv", std::ios::trunc);
  summary << "epsilon,pairs,violations,k,max_ratio\n";
  std::size_t violations = 0;
  for (std::size_t i = 0; i < config.noise.epsilons.size(); ++i) {
    const double eps = config.noise.epsilons[i];
    RandomSource rng = RandomSource::Stream(base, i + 1);
    const BoundReport report =
        VerifyLemmaLog(models, lemma.truth_index, eps, run, rng);
    WriteReport(out / ("lemma_log_" + std::to_string(i) + ".csv"), report, k);
    const std::size_t bad = report.CountViolations(k);
    violations += bad;
    summary << FormatDouble(eps) << ',' << report.pairs() << ',' << bad << ','
            << FormatDouble(k) << ',' << FormatDouble(report.MaxRatio())
            << '\n';
  }
  std::cout << "calibrated K " << FormatDouble(k) << ", " << violations
            << " violations\n";
  if (flags.assert_mode && violations > 0) {
    throw AssertionFailure(std::to_string(violations) + " bound violations");
  }
  return kExitOk;
}

int VerifySquare(const CommonFlags& flags) {
  const ExperimentConfig config = LoadExperiment(flags, std::nullopt);
  const LemmaSpec& lemma = RequireLemma(config);
  std::vector<RegressionModel> models;
  for (std::size_t i = 0; i < lemma.models.size(); ++i) {
    RegressionModel m{lemma.models[i]};
    try {
      m.Validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigError,
                  "lemma.models[" + std::to_string(i) + "]: " + e.what());
    }
    models.push_back(std::move(m));
  }
  const fs::path out = ResolveOutDir(flags, config.output_dir);
  WriteText(out / "config.resolved.json", ConfigToJson(config).dump(2) + "\n");
  const LemmaRun run = MakeRun(lemma);
  const uint64_t base = config.seeds.base;

  RandomSource calibration_rng = RandomSource::Stream(base, 0);
  const BoundReport clean = VerifyLemmaSquare(models, lemma.truth_index,
                                              NoiseConfig{}, run,
                                              calibration_rng);
  const double k = CalibrateConstant(clean, lemma.slack);
  WriteReport(out / "calibration.csv", clean, k);

  std::ofstream summary(out / "summary.csv", std::ios::trunc);
  summary << "epsilon,alpha,ordering,adversary,pairs,violations,k,max_ratio\n";
  std::size_t violations = 0;
  std::size_t cell = 0;
  for (double eps : config.noise.epsilons) {
    for (double alpha : config.noise.alphas) {
      for (Ordering ordering : config.noise.orderings) {
        for (const auto& adversary : config.noise.adversaries) {
          NoiseConfig noise{eps, alpha, ordering, adversary};
          noise.Validate();
          // Shared seeds across cells: paired streams.
          RandomSource rng = RandomSource::Stream(base, 1);
          const BoundReport report =
              VerifyLemmaSquare(models, lemma.truth_index, noise, run, rng);
          WriteReport(out / ("lemma_square_" + std::to_string(cell) + ".csv"),
                      report, k);
          const std::size_t bad = report.CountViolations(k);
          violations += bad;
          summary << FormatDouble(eps) << ',' << FormatDouble(alpha) << ','
                  << OrderingName(ordering) << ',' << AdversaryName(adversary)
                  << ',' << report.pairs() << ',' << bad << ','
                  << FormatDouble(k) << ',' << FormatDouble(report.MaxRatio())
                  << '\n';
          ++cell;
        }
      }
    }
  }

  // Bias plateau over the positive alphas of the grid.
  std::vector<double> alphas;
  for (double a : config.noise.alphas) {
    if (a > 0.0) alphas.push_back(a);
  }
  if (alphas.size() >= 2) {
    std::ofstream plateau(out / "bias_plateau.csv", std::ios::trunc);
    plateau << "epsilon,ordering,adversary,slope,intercept,r2\n";
    for (double eps : config.noise.epsilons) {
      for (Ordering ordering : config.noise.orderings) {
        if (ordering == Ordering::kClean || ordering == Ordering::kPrivacyOnly) {
          continue;
        }
        for (const auto& adversary : config.noise.adversaries) {
          NoiseConfig noise{eps, 0.0, ordering, adversary};
          std::string fit_text = "nan,nan,nan";
          try {
            const BiasPlateau p = FitBiasPlateau(
                models, lemma.truth_index, noise, alphas, lemma.context_weights,
                lemma.n, lemma.trials, RandomSource::Stream(base, 2).seed());
            fit_text = FormatDouble(p.fit.slope) + "," +
                       FormatDouble(p.fit.intercept) + "," +
                       FormatDouble(p.fit.r2);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kDegenerateFit) throw;
          }
          plateau << FormatDouble(eps) << ',' << OrderingName(ordering) << ','
                  << AdversaryName(adversary) << ',' << fit_text << '\n';
        }
      }
    }
  }
  std::cout << "calibrated K " << FormatDouble(k) << ", " << violations
            << " violations\n";
  if (flags.assert_mode && violations > 0) {
    throw AssertionFailure(std::to_string(violations) + " bound violations");
  }
  return kExitOk;
}

int Plot(const CommonFlags& flags) {
  const json j = ReadJson(flags.config_path);
  const PlotSpec spec = ParsePlotSpec(j);
  if (!j.contains("records") || !j["records"].is_string()) {
    throw Error(ErrorCode::kConfigError, "records: path required");
  }
  fs::path records_path = j["records"].get<std::string>();
  if (records_path.is_relative()) {
    records_path = fs::path(flags.config_path).parent_path() / records_path;
  }
  const std::string name =
      j.contains("output") && j["output"].is_string()
          ? j["output"].get<std::string>()
          : std::string("plot.svg");
  const fs::path out = ResolveOutDir(flags, "");
  const auto records = ReadRecordsFile(records_path.string());
  WritePlot(records, spec, (out / name).string());
  std::cout << "wrote " << (out / name).string() << "\n";
  return kExitOk;
}

}  // namespace
}  // namespace prefalign

int main(int argc, char** argv) {
  using namespace prefalign;
  CLI::App app{"Preference alignment under private and corrupted labels"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string seed_text;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON config file")
        ->required();
    sub->add_option("--seed", seed_text, "Base seed (overrides the config)");
    sub->add_option("--out", flags.out_dir, "Output directory");
    sub->add_option("--workers", flags.workers, "Worker threads (0: default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--assert", flags.assert_mode,
                  "Exit 3 when an acceptance assertion fails");
  };
  auto* offline = app.add_subcommand("run-offline", "Offline sweep");
  auto* online = app.add_subcommand("run-online", "Online sweep");
  auto* lemma_log =
      app.add_subcommand("verify-lemma-log", "Check the private MLE bound");
  auto* lemma_square = app.add_subcommand(
      "verify-lemma-square", "Check the corrupted least-squares bound");
  auto* sweep = app.add_subcommand("sweep", "Sweep per the config's experiment");
  auto* plot = app.add_subcommand("plot", "Render records as SVG");
  for (auto* sub : {offline, online, lemma_log, lemma_square, sweep, plot}) {
    add_common(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (!seed_text.empty()) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(seed_text.c_str(), &end, 10);
      if (seed_text[0] == '-' || *end != '\0') {
        throw Error(ErrorCode::kConfigError, "--seed: expected a u64");
      }
      flags.seed = v;
    }
    SetWorkerCount(flags.workers);
    if (offline->parsed()) return RunExperiment(flags, Experiment::kOffline);
    if (online->parsed()) return RunExperiment(flags, Experiment::kOnline);
    if (sweep->parsed()) return RunExperiment(flags, std::nullopt);
    if (lemma_log->parsed()) return VerifyLog(flags);
    if (lemma_square->parsed()) return VerifySquare(flags);
    if (plot->parsed()) return Plot(flags);
  } catch (const AssertionFailure& e) {
    std::cerr << "ASSERTION FAILED: " << e.what() << "\n";
    return kExitAssert;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::kConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
