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

// Command line front end: dataset generation, experiment runs and reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "sgdlab/errors.h"
#include "sgdlab/experiment.h"
#include "sgdlab/problems.h"
#include "sgdlab/rng.h"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma;
  std::optional<double> alpha;
  std::optional<std::int64_t> steps;
  std::optional<int> seeds;
  std::optional<int> workers;
  std::string out;
};

void AddOverrideFlags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Base seed of the trajectory streams");
  cmd->add_option("--sigma", o.sigma, "Run a single noise level");
  cmd->add_option("--alpha", o.alpha, "Run a single initialization scale");
  cmd->add_option("--steps", o.steps, "Step budget");
  cmd->add_option("--seeds", o.seeds, "Number of seeds");
  cmd->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  cmd->add_option("--out", o.out,
                  "Output directory (default $SGDLAB_OUT/<experiment>)");
}

void Apply(const Overrides& o, sgdlab::ExperimentConfig& cfg) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.sigma) cfg.sigmas = {*o.sigma};
  if (o.alpha) cfg.alphas = {*o.alpha};
  if (o.steps) cfg.steps = *o.steps;
  if (o.seeds) cfg.seeds = *o.seeds;
  if (o.workers) cfg.workers = *o.workers;
}

int Execute(sgdlab::ExperimentConfig cfg, const Overrides& o) {
  Apply(o, cfg);
  const std::string dir = sgdlab::ResolveOutputDir(cfg, o.out);
  const sgdlab::RunRecord record = sgdlab::RunExperiment(cfg);
  sgdlab::WriteRunRecord(record, dir);
  for (const auto& failure : record.failures) {
    std::cerr << "run failed: " << failure << '\n';
  }
  for (const auto& check : record.checks) {
    std::printf("%s  %s  %s\n", check.passed ? "PASS" : "FAIL",
                check.name.c_str(), check.detail.c_str());
  }
  std::printf("wrote %s\n", dir.c_str());
  return record.AllChecksPassed() ? 0 : 1;
}

int Analyze(const std::string& path) {
  std::filesystem::path file(path);
  if (std::filesystem::is_directory(file)) file /= "summary.json";
  std::ifstream in(file);
  if (!in) throw sgdlab::Error("cannot open '" + file.string() + "'");
  const nlohmann::json summary = nlohmann::json::parse(in);
  std::printf("experiment: %s\n",
              summary.at("experiment").get<std::string>().c_str());
  for (const auto& [key, value] : summary.at("scalars").items()) {
    if (value.is_null()) {
      std::printf("  %-40s n/a\n", key.c_str());
    } else {
      std::printf("  %-40s %.6g\n", key.c_str(), value.get<double>());
    }
  }
  bool all = true;
  for (const auto& check : summary.at("checks")) {
    const bool passed = check.at("passed").get<bool>();
    all = all && passed;
    std::printf("%s  %s  %s\n", passed ? "PASS" : "FAIL",
                check.at("name").get<std::string>().c_str(),
                check.at("detail").get<std::string>().c_str());
  }
  for (const auto& failure : summary.at("failures")) {
    std::printf("failed run: %s\n", failure.get<std::string>().c_str());
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-SGD implicit bias experiments on linear models"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a regression dataset");
  int n = 40, d = 100, s = 5;
  std::uint64_t data_seed = 3;
  std::string regime = "over";
  double label_noise = 0.5;
  std::string gen_out;
  gen->add_option("--n", n, "Samples")->capture_default_str();
  gen->add_option("--d", d, "Dimension")->capture_default_str();
  gen->add_option("--s", s, "Sparsity (overparameterized)")
      ->capture_default_str();
  gen->add_option("--seed", data_seed, "Data seed")->capture_default_str();
  gen->add_option("--regime", regime, "over or under")
      ->check(CLI::IsMember({"over", "under"}))
      ->capture_default_str();
  gen->add_option("--label-noise", label_noise,
                  "Label noise (underparameterized)")
      ->capture_default_str();
  gen->add_option("-o,--out", gen_out, "Output file (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment from a config");
  std::string config_path;
  Overrides run_overrides;
  run->add_option("config", config_path, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  AddOverrideFlags(run, run_overrides);

  // reproduce
  auto* repro = app.add_subcommand("reproduce", "Run a bundled experiment");
  std::string which;
  Overrides repro_overrides;
  repro->add_option("experiment", which, "fig3, fig4, appendix, ou or thm1")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig4", "appendix", "ou", "thm1"}));
  AddOverrideFlags(repro, repro_overrides);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Print a run summary");
  std::string record_path;
  analyze->add_option("record", record_path,
                      "Output directory or summary.json of a run")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help prints and succeeds; usage errors share the error exit code.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      sgdlab::RngStream rng =
          sgdlab::RngStream::For(data_seed, 0, sgdlab::StreamRole::kData);
      const sgdlab::Dataset ds =
          regime == "over"
              ? sgdlab::GenSparseRegression(n, d, s, rng)
              : sgdlab::GenUnderparamRegression(n, d, label_noise, rng);
      if (gen_out.empty()) {
        sgdlab::WriteDataset(ds, std::cout);
      } else {
        sgdlab::SaveDataset(ds, gen_out);
      }
      return 0;
    }
    if (run->parsed()) {
      return Execute(sgdlab::LoadConfig(config_path), run_overrides);
    }
    if (repro->parsed()) {
      return Execute(
          sgdlab::DefaultConfig(sgdlab::ParseExperimentId(which)),
          repro_overrides);
    }
    if (analyze->parsed()) return Analyze(record_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
