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

#include "prefalign/harness/config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "prefalign/error.h"
#include "prefalign/uclemmas.h"

namespace prefalign {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kConfigError, path + ": " + what);
}

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string At(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void CheckKeys(const json& j, const std::string& path,
               const std::set<std::string>& allowed) {
  if (!j.is_object()) Fail(path.empty() ? "<root>" : path, "expected object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      Fail(Join(path, item.key()), "unknown field");
    }
  }
}

double ReadDouble(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return INFINITY;
  }
  Fail(path, "expected a number");
}

std::size_t ReadSize(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer() && j.get<int64_t>() >= 0) {
    return static_cast<std::size_t>(j.get<int64_t>());
  }
  Fail(path, "expected a nonnegative integer");
}

uint64_t ReadU64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<uint64_t>();
  if (j.is_number_integer() && j.get<int64_t>() >= 0) {
    return static_cast<uint64_t>(j.get<int64_t>());
  }
  Fail(path, "expected a nonnegative integer");
}

std::string ReadString(const json& j, const std::string& path) {
  if (!j.is_string()) Fail(path, "expected a string");
  return j.get<std::string>();
}

bool ReadBool(const json& j, const std::string& path) {
  if (!j.is_boolean()) Fail(path, "expected a boolean");
  return j.get<bool>();
}

template <typename T, typename F>
std::vector<T> ReadList(const json& j, const std::string& path, F read) {
  // A scalar is accepted as a one-element list.
  if (!j.is_array()) return {read(j, path)};
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read(j[i], At(path, i)));
  if (out.empty()) Fail(path, "must not be empty");
  return out;
}

template <typename F>
auto Wrap(const std::string& path, F fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) Fail(path, e.what());
    throw;
  }
}

void ParseEnv(const json& j, const std::string& path, EnvSpec& env) {
  CheckKeys(j, path,
            {"prompts", "responses", "reward_rule", "r_max", "reference",
             "reference_min_mass"});
  if (j.contains("prompts")) env.prompts = ReadSize(j["prompts"], Join(path, "prompts"));
  if (j.contains("responses")) {
    env.responses = ReadSize(j["responses"], Join(path, "responses"));
  }
  if (j.contains("reward_rule")) {
    const std::string p = Join(path, "reward_rule");
    const std::string s = ReadString(j["reward_rule"], p);
    if (s == "uniform") {
      env.reward_rule = RewardRule::kUniform;
    } else if (s == "linear") {
      env.reward_rule = RewardRule::kLinear;
    } else {
      Fail(p, "expected \"uniform\" or \"linear\"");
    }
  }
  if (j.contains("r_max")) env.r_max = ReadDouble(j["r_max"], Join(path, "r_max"));
  if (j.contains("reference")) {
    const std::string p = Join(path, "reference");
    const std::string s = ReadString(j["reference"], p);
    if (s == "uniform") {
      env.reference_rule = ReferenceRule::kUniform;
    } else if (s == "random") {
      env.reference_rule = ReferenceRule::kRandom;
    } else {
      Fail(p, "expected \"uniform\" or \"random\"");
    }
  }
  if (j.contains("reference_min_mass")) {
    env.reference_min_mass =
        ReadDouble(j["reference_min_mass"], Join(path, "reference_min_mass"));
  }
  if (env.prompts == 0) Fail(Join(path, "prompts"), "must be >= 1");
  if (env.responses < 2) Fail(Join(path, "responses"), "must be >= 2");
  if (!(env.r_max > 0.0) || std::isinf(env.r_max)) {
    Fail(Join(path, "r_max"), "must be positive and finite");
  }
  if (!(env.reference_min_mass > 0.0) ||
      env.reference_min_mass * static_cast<double>(env.responses) >= 1.0) {
    Fail(Join(path, "reference_min_mass"),
         "must be positive and below 1 / responses");
  }
}

void ParseClass(const json& j, const std::string& path, ExperimentConfig& c,
                bool& regularizer_set) {
  CheckKeys(j, path,
            {"size", "regularizer", "kind", "beta", "min_scale", "max_scale",
             "jitter_fraction", "jitter_strength"});
  ClassSpec& spec = c.policy_class;
  if (j.contains("size")) spec.size = ReadSize(j["size"], Join(path, "size"));
  if (j.contains("regularizer")) {
    const std::string p = Join(path, "regularizer");
    const std::string s = ReadString(j["regularizer"], p);
    if (s == "chi_mix") {
      spec.regularizer = Regularizer::kChiMix;
    } else if (s == "kl") {
      spec.regularizer = Regularizer::kKl;
    } else {
      Fail(p, "expected \"chi_mix\" or \"kl\"");
    }
    regularizer_set = true;
  }
  if (j.contains("kind")) {
    const std::string p = Join(path, "kind");
    const std::string s = ReadString(j["kind"], p);
    if (s == "graded") {
      spec.kind = ClassKind::kGraded;
    } else if (s == "jitter") {
      spec.kind = ClassKind::kJitter;
    } else {
      Fail(p, "expected \"graded\" or \"jitter\"");
    }
  }
  if (j.contains("beta")) c.beta = ReadDouble(j["beta"], Join(path, "beta"));
  if (j.contains("min_scale")) {
    spec.min_scale = ReadDouble(j["min_scale"], Join(path, "min_scale"));
  }
  if (j.contains("max_scale")) {
    spec.max_scale = ReadDouble(j["max_scale"], Join(path, "max_scale"));
  }
  if (j.contains("jitter_fraction")) {
    spec.jitter_fraction =
        ReadDouble(j["jitter_fraction"], Join(path, "jitter_fraction"));
  }
  if (j.contains("jitter_strength")) {
    spec.jitter_strength =
        ReadDouble(j["jitter_strength"], Join(path, "jitter_strength"));
  }
  if (spec.size == 0) Fail(Join(path, "size"), "must be >= 1");
  if (!(c.beta > 0.0) || std::isinf(c.beta)) {
    Fail(Join(path, "beta"), "must be positive and finite");
  }
  if (!(spec.min_scale > 0.0) || !(spec.max_scale >= spec.min_scale)) {
    Fail(Join(path, "min_scale"), "need 0 < min_scale <= max_scale");
  }
  if (!(spec.jitter_fraction >= 0.0 && spec.jitter_fraction <= 1.0)) {
    Fail(Join(path, "jitter_fraction"), "must lie in [0, 1]");
  }
  if (!(spec.jitter_strength > 0.0)) {
    Fail(Join(path, "jitter_strength"), "must be positive");
  }
}

void ParseNoise(const json& j, const std::string& path, NoiseGrid& grid) {
  CheckKeys(j, path, {"epsilons", "alphas", "orderings", "adversaries"});
  if (j.contains("epsilons")) {
    grid.epsilons = ReadList<double>(j["epsilons"], Join(path, "epsilons"),
                                     ReadDouble);
  }
  if (j.contains("alphas")) {
    grid.alphas =
        ReadList<double>(j["alphas"], Join(path, "alphas"), ReadDouble);
  }
  if (j.contains("orderings")) {
    grid.orderings = ReadList<Ordering>(
        j["orderings"], Join(path, "orderings"),
        [](const json& v, const std::string& p) {
          return Wrap(p, [&] { return ParseOrdering(ReadString(v, p)); });
        });
  }
  if (j.contains("adversaries")) {
    grid.adversaries = ReadList<AdversarySpec>(
        j["adversaries"], Join(path, "adversaries"),
        [](const json& v, const std::string& p) {
          return Wrap(p, [&] { return ParseAdversary(ReadString(v, p)); });
        });
  }
  for (std::size_t i = 0; i < grid.epsilons.size(); ++i) {
    if (!(grid.epsilons[i] > 0.0)) {
      Fail(At(Join(path, "epsilons"), i), "must be positive");
    }
  }
  for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
    if (!(grid.alphas[i] >= 0.0 && grid.alphas[i] < 0.5)) {
      Fail(At(Join(path, "alphas"), i), "must lie in [0, 0.5)");
    }
  }
  for (std::size_t i = 0; i < grid.adversaries.size(); ++i) {
    const auto& a = grid.adversaries[i];
    if (a.kind == AdversarySpec::Kind::kBernoulliPlus &&
        !(a.p >= 0.0 && a.p <= 1.0)) {
      Fail(At(Join(path, "adversaries"), i), "probability outside [0, 1]");
    }
  }
}

void ParseNeighbors(const json& j, const std::string& path,
                    LemmaSpec& lemma) {
  CheckKeys(j, path,
            {"truth", "count", "min_step", "max_step", "lo", "hi", "seed"});
  for (const char* key : {"truth", "count", "min_step", "max_step", "lo", "hi"}) {
    if (!j.contains(key)) Fail(Join(path, key), "missing");
  }
  const std::vector<double> truth =
      ReadList<double>(j["truth"], Join(path, "truth"), ReadDouble);
  const uint64_t seed =
      j.contains("seed") ? ReadU64(j["seed"], Join(path, "seed")) : 0;
  RandomSource rng(seed);
  try {
    lemma.models = LogSpacedNeighbors(
        truth, ReadDouble(j["min_step"], Join(path, "min_step")),
        ReadDouble(j["max_step"], Join(path, "max_step")),
        ReadSize(j["count"], Join(path, "count")),
        ReadDouble(j["lo"], Join(path, "lo")),
        ReadDouble(j["hi"], Join(path, "hi")), rng);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    Fail(path, e.what());
  }
}

void ParseLemma(const json& j, const std::string& path, LemmaSpec& lemma) {
  CheckKeys(j, path,
            {"models", "neighbors", "truth_index", "context_weights", "n",
             "trials", "delta", "slack"});
  const std::string mp = Join(path, "models");
  if (j.contains("models") == j.contains("neighbors")) {
    Fail(mp, "give exactly one of models and neighbors");
  }
  if (j.contains("neighbors")) {
    ParseNeighbors(j["neighbors"], Join(path, "neighbors"), lemma);
  } else {
    if (!j["models"].is_array() || j["models"].empty()) {
      Fail(mp, "expected a nonempty list of tables");
    }
    for (std::size_t i = 0; i < j["models"].size(); ++i) {
      const json& row = j["models"][i];
      if (!row.is_array() || row.empty()) {
        Fail(At(mp, i), "expected a nonempty list of numbers");
      }
      std::vector<double> values;
      for (std::size_t x = 0; x < row.size(); ++x) {
        values.push_back(ReadDouble(row[x], At(At(mp, i), x)));
      }
      if (!lemma.models.empty() && values.size() != lemma.models[0].size()) {
        Fail(At(mp, i), "all models need the same number of contexts");
      }
      lemma.models.push_back(std::move(values));
    }
  }
  const std::size_t contexts = lemma.models[0].size();
  if (j.contains("truth_index")) {
    lemma.truth_index = ReadSize(j["truth_index"], Join(path, "truth_index"));
  }
  if (lemma.truth_index >= lemma.models.size()) {
    Fail(Join(path, "truth_index"), "must index a model");
  }
  if (j.contains("context_weights")) {
    lemma.context_weights = ReadList<double>(
        j["context_weights"], Join(path, "context_weights"), ReadDouble);
  } else {
    lemma.context_weights.assign(contexts, 1.0 / static_cast<double>(contexts));
  }
  if (lemma.context_weights.size() != contexts) {
    Fail(Join(path, "context_weights"), "one weight per context required");
  }
  double total = 0.0;
  for (std::size_t x = 0; x < contexts; ++x) {
    if (!(lemma.context_weights[x] >= 0.0)) {
      Fail(At(Join(path, "context_weights"), x), "must be nonnegative");
    }
    total += lemma.context_weights[x];
  }
  if (!(std::abs(total - 1.0) <= 1e-9)) {
    Fail(Join(path, "context_weights"), "must sum to 1");
  }
  if (j.contains("n")) lemma.n = ReadSize(j["n"], Join(path, "n"));
  if (j.contains("trials")) {
    lemma.trials = ReadSize(j["trials"], Join(path, "trials"));
  }
  if (j.contains("delta")) lemma.delta = ReadDouble(j["delta"], Join(path, "delta"));
  if (j.contains("slack")) lemma.slack = ReadDouble(j["slack"], Join(path, "slack"));
  if (lemma.trials == 0) Fail(Join(path, "trials"), "must be >= 1");
  if (!(lemma.delta > 0.0 && lemma.delta < 1.0)) {
    Fail(Join(path, "delta"), "must lie in (0, 1)");
  }
  if (!(lemma.slack >= 1.0) || std::isinf(lemma.slack)) {
    Fail(Join(path, "slack"), "must be finite and >= 1");
  }
}

json DoubleJson(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

}  // namespace

std::string ExperimentName(Experiment experiment) {
  return experiment == Experiment::kOffline ? "offline" : "online";
}

std::string SolverName(Solver solver) {
  switch (solver) {
    case Solver::kPrivChipo:
      return "priv_chipo";
    case Solver::kSquareChipo:
      return "square_chipo";
    case Solver::kPrivXpo:
      return "priv_xpo";
    case Solver::kSquareXpo:
      return "square_xpo";
  }
  return "priv_chipo";
}

Solver ParseSolver(const std::string& name) {
  if (name == "priv_chipo") return Solver::kPrivChipo;
  if (name == "square_chipo") return Solver::kSquareChipo;
  if (name == "priv_xpo") return Solver::kPrivXpo;
  if (name == "square_xpo") return Solver::kSquareXpo;
  throw Error(ErrorCode::kConfigError, "unknown solver '" + name + "'");
}

bool IsOnlineSolver(Solver solver) {
  return solver == Solver::kPrivXpo || solver == Solver::kSquareXpo;
}

std::string FormatDouble(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

ExperimentConfig ParseConfig(const json& j) {
  CheckKeys(j, "",
            {"experiment", "env", "class", "noise", "solver", "sizes", "gamma",
             "seeds", "output_dir", "assert", "lemma"});
  ExperimentConfig c;
  if (j.contains("experiment")) {
    const std::string s = ReadString(j["experiment"], "experiment");
    if (s == "offline") {
      c.experiment = Experiment::kOffline;
    } else if (s == "online") {
      c.experiment = Experiment::kOnline;
    } else {
      Fail("experiment", "expected \"offline\" or \"online\"");
    }
  }
  const bool online = c.experiment == Experiment::kOnline;
  c.solver = online ? Solver::kSquareXpo : Solver::kPrivChipo;
  if (j.contains("env")) ParseEnv(j["env"], "env", c.env);
  bool regularizer_set = false;
  if (j.contains("class")) ParseClass(j["class"], "class", c, regularizer_set);
  if (!regularizer_set) {
    c.policy_class.regularizer = online ? Regularizer::kKl : Regularizer::kChiMix;
  }
  if (j.contains("noise")) ParseNoise(j["noise"], "noise", c.noise);
  if (j.contains("solver")) {
    c.solver = Wrap("solver", [&] {
      return ParseSolver(ReadString(j["solver"], "solver"));
    });
  }
  if (j.contains("sizes")) {
    c.sizes = ReadList<std::size_t>(j["sizes"], "sizes", ReadSize);
  }
  if (j.contains("gamma")) {
    const json& g = j["gamma"];
    if (g.is_string() && g.get<std::string>() == "theory") {
      c.gamma.theory = true;
    } else if (g.is_object()) {
      CheckKeys(g, "gamma", {"theory", "value", "delta"});
      if (g.contains("theory")) c.gamma.theory = ReadBool(g["theory"], "gamma.theory");
      if (g.contains("value")) c.gamma.value = ReadDouble(g["value"], "gamma.value");
      if (g.contains("delta")) c.gamma.delta = ReadDouble(g["delta"], "gamma.delta");
    } else {
      c.gamma.value = ReadDouble(g, "gamma");
    }
    if (!(c.gamma.value >= 0.0) || std::isinf(c.gamma.value)) {
      Fail("gamma", "must be finite and >= 0");
    }
    if (!(c.gamma.delta > 0.0 && c.gamma.delta < 1.0)) {
      Fail("gamma.delta", "must lie in (0, 1)");
    }
  }
  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    CheckKeys(s, "seeds", {"base", "replicates", "first_replicate"});
    if (s.contains("base")) c.seeds.base = ReadU64(s["base"], "seeds.base");
    if (s.contains("replicates")) {
      c.seeds.replicates = ReadSize(s["replicates"], "seeds.replicates");
    }
    if (s.contains("first_replicate")) {
      c.seeds.first_replicate =
          ReadSize(s["first_replicate"], "seeds.first_replicate");
    }
  }
  if (j.contains("output_dir")) {
    c.output_dir = ReadString(j["output_dir"], "output_dir");
  }
  if (j.contains("assert")) {
    const json& a = j["assert"];
    CheckKeys(a, "assert", {"fit_x", "slope_min", "slope_max", "max_median_gap"});
    AssertSpec spec;
    if (a.contains("fit_x")) spec.fit_x = ReadString(a["fit_x"], "assert.fit_x");
    if (a.contains("slope_min")) {
      spec.slope_min = ReadDouble(a["slope_min"], "assert.slope_min");
    }
    if (a.contains("slope_max")) {
      spec.slope_max = ReadDouble(a["slope_max"], "assert.slope_max");
    }
    if (a.contains("max_median_gap")) {
      spec.max_median_gap =
          ReadDouble(a["max_median_gap"], "assert.max_median_gap");
    }
    c.assertions = spec;
  }
  if (j.contains("lemma")) {
    LemmaSpec lemma;
    ParseLemma(j["lemma"], "lemma", lemma);
    c.lemma = std::move(lemma);
  }
  ValidateConfig(c);
  return c;
}

void ValidateConfig(const ExperimentConfig& c) {
  if (c.sizes.empty()) Fail("sizes", "must not be empty");
  for (std::size_t i = 0; i < c.sizes.size(); ++i) {
    if (c.sizes[i] == 0) Fail(At("sizes", i), "must be >= 1");
  }
  if (c.noise.epsilons.empty()) Fail("noise.epsilons", "must not be empty");
  if (c.noise.alphas.empty()) Fail("noise.alphas", "must not be empty");
  if (c.noise.orderings.empty()) Fail("noise.orderings", "must not be empty");
  if (c.noise.adversaries.empty()) {
    Fail("noise.adversaries", "must not be empty");
  }
  if (c.seeds.replicates == 0) Fail("seeds.replicates", "must be >= 1");
  const bool online = c.experiment == Experiment::kOnline;
  if (online != IsOnlineSolver(c.solver)) {
    Fail("solver", "'" + SolverName(c.solver) + "' does not fit a " +
                       ExperimentName(c.experiment) + " experiment");
  }
  if (c.solver == Solver::kPrivXpo) {
    for (std::size_t i = 0; i < c.noise.orderings.size(); ++i) {
      const Ordering o = c.noise.orderings[i];
      if (o != Ordering::kClean && o != Ordering::kPrivacyOnly) {
        Fail(At("noise.orderings", i),
             "priv_xpo handles Clean and PrivacyOnly channels only");
      }
    }
  }
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, path + ": " + e.what());
  }
  return ParseConfig(j);
}

json ConfigToJson(const ExperimentConfig& c) {
  json j;
  j["experiment"] = ExperimentName(c.experiment);
  j["env"] = {
      {"prompts", c.env.prompts},
      {"responses", c.env.responses},
      {"reward_rule",
       c.env.reward_rule == RewardRule::kUniform ? "uniform" : "linear"},
      {"r_max", DoubleJson(c.env.r_max)},
      {"reference",
       c.env.reference_rule == ReferenceRule::kUniform ? "uniform" : "random"},
      {"reference_min_mass", DoubleJson(c.env.reference_min_mass)}};
  const ClassSpec& s = c.policy_class;
  j["class"] = {
      {"size", s.size},
      {"regularizer", s.regularizer == Regularizer::kKl ? "kl" : "chi_mix"},
      {"kind", s.kind == ClassKind::kGraded ? "graded" : "jitter"},
      {"beta", DoubleJson(c.beta)},
      {"min_scale", DoubleJson(s.min_scale)},
      {"max_scale", DoubleJson(s.max_scale)},
      {"jitter_fraction", DoubleJson(s.jitter_fraction)},
      {"jitter_strength", DoubleJson(s.jitter_strength)}};
  json eps = json::array(), alphas = json::array(), orderings = json::array(),
       adversaries = json::array();
  for (double e : c.noise.epsilons) eps.push_back(DoubleJson(e));
  for (double a : c.noise.alphas) alphas.push_back(DoubleJson(a));
  for (Ordering o : c.noise.orderings) orderings.push_back(OrderingName(o));
  for (const auto& a : c.noise.adversaries) {
    adversaries.push_back(AdversaryName(a));
  }
  j["noise"] = {{"epsilons", eps},
                {"alphas", alphas},
                {"orderings", orderings},
                {"adversaries", adversaries}};
  j["solver"] = SolverName(c.solver);
  j["sizes"] = c.sizes;
  j["gamma"] = {{"theory", c.gamma.theory},
                {"value", DoubleJson(c.gamma.value)},
                {"delta", DoubleJson(c.gamma.delta)}};
  j["seeds"] = {{"base", c.seeds.base},
                {"replicates", c.seeds.replicates},
                {"first_replicate", c.seeds.first_replicate}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  if (c.assertions) {
    json a = json::object();
    if (c.assertions->fit_x) a["fit_x"] = *c.assertions->fit_x;
    if (std::isfinite(c.assertions->slope_min)) {
      a["slope_min"] = c.assertions->slope_min;
    }
    if (std::isfinite(c.assertions->slope_max)) {
      a["slope_max"] = c.assertions->slope_max;
    }
    if (c.assertions->max_median_gap) {
      a["max_median_gap"] = *c.assertions->max_median_gap;
    }
    j["assert"] = a;
  }
  if (c.lemma) {
    json models = json::array();
    for (const auto& m : c.lemma->models) {
      json row = json::array();
      for (double v : m) row.push_back(DoubleJson(v));
      models.push_back(row);
    }
    j["lemma"] = {{"models", models},
                  {"truth_index", c.lemma->truth_index},
                  {"context_weights", c.lemma->context_weights},
                  {"n", c.lemma->n},
                  {"trials", c.lemma->trials},
                  {"delta", DoubleJson(c.lemma->delta)},
                  {"slack", DoubleJson(c.lemma->slack)}};
  }
  return j;
}

}  // namespace prefalign
