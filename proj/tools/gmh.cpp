/*
 * Copyright 2026 The gmh Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "gmh/experiment.hpp"

namespace ex = gmh::experiment;

int main(int argc, char** argv) {
  CLI::App app{"gmh: MCMC experiments from declarative configs"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output;

  auto* run = app.add_subcommand("run", "run an experiment and write traces plus a summary");
  run->add_option("--config", config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  auto* run_seed = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--threads", threads, "worker threads for the chains")->check(CLI::PositiveNumber);
  auto* run_output = run->add_option("--output", output, "override the output directory");

  std::vector<std::string> traces;
  std::string summary_output;
  gmh::Index burn_in = 0;
  auto* summarize = app.add_subcommand("summarize", "per-coordinate diagnostics of trace files");
  summarize->add_option("traces", traces, "trace CSV files")->required();
  summarize->add_option("--output", summary_output, "write <stem>.csv and <stem>.jsonl instead of stdout");
  summarize->add_option("--burn-in", burn_in, "rows dropped from the start of each trace");

  std::size_t replicates = 100;
  auto* tune = app.add_subcommand("tune-particles", "choose a particle count for a state-space target");
  tune->add_option("--config", config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  auto* tune_seed = tune->add_option("--seed", seed, "override the config seed");
  tune->add_option("--replicates", replicates, "estimates per particle count (>= 20)");

  auto* list = app.add_subcommand("list-samplers", "list sampler kinds and their keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::kExitConfig;
  }

  ex::Overrides overrides;
  if (*run) {
    if (*run_seed) overrides.seed = seed;
    if (*run_output) overrides.output_dir = output;
    return ex::run_experiment(config, overrides, threads, std::cout, std::cerr);
  }
  if (*summarize) {
    std::vector<std::filesystem::path> paths(traces.begin(), traces.end());
    return ex::summarize(paths, summary_output, burn_in, std::cout, std::cerr);
  }
  if (*tune) {
    if (*tune_seed) overrides.seed = seed;
    return ex::tune_particles(config, overrides, replicates, std::cout, std::cerr);
  }
  if (*list) {
    for (const auto& s : ex::sampler_catalog()) std::cout << s.name << "\t" << s.description << '\n';
  }
  return ex::kExitOk;
}
