// Copyright 2026 The sgdlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SGDLAB_EXPERIMENT_H_
#define SGDLAB_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sgdlab/format.h"
#include "sgdlab/lsq.h"

namespace sgdlab {

enum class ExperimentId {
  kFig3,
  kFig4,
  kAppendixAlphaSweep,
  kOuStationary,
  kThm1Bound,
  kCustom,
};

const char* ExperimentName(ExperimentId id);
// Accepts the names above ("fig3", "fig4", "appendix_alpha_sweep",
// "ou_stationary", "thm1_bound", "custom") and the short forms "appendix",
// "ou" and "thm1".
ExperimentId ParseExperimentId(const std::string& name);

struct ExperimentConfig {
  ExperimentId id = ExperimentId::kCustom;

  // Dataset: generated from (n, d, s, data_seed) unless dataset_path is set.
  int n = 40;
  int d = 100;
  int s = 5;
  std::uint64_t data_seed = 3;
  double label_noise = 0.5;  // underparameterized instances only
  std::string dataset_path;

  std::vector<OptimizerKind> optimizers = {OptimizerKind::kNoisySGD};
  std::vector<double> sigmas = {0.5};
  std::vector<double> alphas = {0.1};  // scalar initialization, broadcast
  int batch = 1;
  double gamma = 0.0;  // 0 selects the experiment's default step size
  double eps_floor = 0.5;
  std::string scheme = "log";  // SDE scheme: "log" or "em"

  int seeds = 5;
  std::uint64_t seed = 1000;  // base seed of the trajectory streams
  std::int64_t steps = 200000;
  std::int64_t stride = 100;
  std::int64_t burn_in = -1;
  int n_traj = 200;
  int workers = 0;
  std::string output;
};

// Bundled configuration of each experiment.
ExperimentConfig DefaultConfig(ExperimentId id);

// Sets one key of the flat key = value format. Throws ParseError on unknown
// keys or malformed values.
void SetConfigValue(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

// Parses "key = value" lines; '#' starts a comment. The "experiment" key, if
// present, must come first: it selects the defaults the other keys override.
ExperimentConfig ParseConfig(std::istream& in);
ExperimentConfig LoadConfig(const std::string& path);
// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> ConfigEntries(
    const ExperimentConfig& cfg);
void WriteConfig(const ExperimentConfig& cfg, std::ostream& out);

// Aggregate curve. For curves over the noise level (names ending in
// "_vs_sigma") the t column holds sigma.
struct Curve {
  std::string name;
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> std;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunRecord {
  ExperimentConfig config;
  std::vector<Curve> curves;
  // Per-seed trajectories, keyed by file stem.
  std::vector<std::pair<std::string, Table>> trajectories;
  std::map<std::string, double> scalars;
  std::vector<Check> checks;
  // Runs that failed, with seed and step context.
  std::vector<std::string> failures;

  bool AllChecksPassed() const;
  const Check* FindCheck(const std::string& name) const;
};

// Pointwise mean and population standard deviation of equal-length curves.
// The result does not depend on the order of `curves`.
std::pair<std::vector<double>, std::vector<double>> Aggregate(
    const std::vector<std::vector<double>>& curves);

// True when `means` is monotone in the given direction up to at most one
// inversion, and that inversion is smaller than the pooled standard deviation
// of its two points.
bool TrendHolds(const std::vector<double>& means,
                const std::vector<double>& stds, bool increasing,
                std::string* detail = nullptr);

RunRecord RunExperiment(const ExperimentConfig& cfg);
RunRecord ReproduceFig4(const ExperimentConfig& cfg);

// Writes one CSV per curve (t, mean, std), per-seed trajectories under
// traj/, config.txt and summary.json into `dir` (created if needed).
void WriteRunRecord(const RunRecord& record, const std::string& dir);

// Output directory: `flag` if non-empty, else $SGDLAB_OUT/<name>, else
// cfg.output, else ./sgdlab_out/<name>.
std::string ResolveOutputDir(const ExperimentConfig& cfg,
                             const std::string& flag);

}  // namespace sgdlab

#endif  // SGDLAB_EXPERIMENT_H_
