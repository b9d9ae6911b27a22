// Copyright 2026 The mpmab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpmab/adversaries.hpp"
#include "mpmab/errors.hpp"
#include "mpmab/harness.hpp"

namespace {

using mpmab::ExperimentConfig;

constexpr int kExitInvariant = 3;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string config;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::optional<std::string> seed, out, reps, model, adversary, arms, horizon, players, threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value config file (see --print-schema)");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--out", f.out, "output CSV path");
  cmd->add_option("--reps", f.reps, "repetitions per horizon");
  cmd->add_option("--model", f.model, "collision_info | collision_info_oracle | no_info");
  cmd->add_option("--adversary", f.adversary, "stochastic | scripted | remark | adaptive");
  cmd->add_option("--K", f.arms, "number of arms");
  cmd->add_option("--T", f.horizon, "horizon or comma list of horizons (2^k accepted)");
  cmd->add_option("--m", f.players, "number of players");
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--set", f.overrides, "extra key value override, repeatable")->expected(2)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
}

ExperimentConfig resolve(const CommonFlags& f, ExperimentConfig base = {}) {
  ExperimentConfig cfg = f.config.empty() ? std::move(base) : mpmab::load_config(f.config, std::move(base));
  const std::pair<const char*, const std::optional<std::string>*> flags[] = {
      {"seed", &f.seed}, {"out", &f.out},     {"reps", &f.reps}, {"model", &f.model},     {"adversary", &f.adversary},
      {"K", &f.arms},    {"T", &f.horizon},   {"m", &f.players}, {"threads", &f.threads},
  };
  for (const auto& [key, value] : flags) {
    if (*value) mpmab::apply_setting(cfg, key, **value);
  }
  for (const auto& [key, value] : f.overrides) mpmab::apply_setting(cfg, key, value);
  cfg.validate();
  return cfg;
}

void print_aggregates(const ExperimentConfig& cfg, const mpmab::ExperimentResult& result) {
  mpmab::write_summary_csv(std::cout, cfg, result.aggregates);
}

int organic_check(const ExperimentConfig& cfg, const mpmab::ExperimentResult& result) {
  if (cfg.model == mpmab::ModelKind::kNoInfo) return 0;
  for (const auto& r : result.runs) {
    if (r.report.organic_collision_rounds > 0) {
      std::cerr << fmt::format("invariant violation: T = {} seed {} had {} organic collisions\n", r.horizon, r.seed,
                               r.report.organic_collision_rounds);
      return kExitInvariant;
    }
  }
  return 0;
}

int cmd_run(const CommonFlags& f) {
  const ExperimentConfig cfg = resolve(f);
  const auto result = mpmab::run_experiment(cfg);
  if (!cfg.out.empty()) {
    mpmab::save_experiment(cfg.out, cfg, result);
    std::cerr << fmt::format("wrote {} and {}\n", cfg.out, mpmab::summary_path(cfg.out));
  }
  print_aggregates(cfg, result);
  return organic_check(cfg, result);
}

int cmd_scaling(const CommonFlags& f) {
  ExperimentConfig base;
  base.horizons = {1024, 2048, 4096, 8192, 16384};
  const ExperimentConfig cfg = resolve(f, base);
  const auto result = mpmab::run_experiment(cfg);
  if (!cfg.out.empty()) mpmab::save_experiment(cfg.out, cfg, result);
  print_aggregates(cfg, result);
  std::vector<std::pair<double, double>> points;
  for (const auto& a : result.aggregates) points.emplace_back(static_cast<double>(a.horizon), a.regret.mean);
  const auto fit = mpmab::fit_slope(points);
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << fmt::format("# slope = {:.4f}, intercept = {:.4f}, r2 = {:.4f}, points = {}\n", fit.slope,
                           fit.intercept, fit.r2, fit.points.size());
  return organic_check(cfg, result);
}

int cmd_verify(const CommonFlags& f) {
  ExperimentConfig base;
  base.reps = 3;
  const ExperimentConfig cfg = resolve(f, base);
  bool ok = true;
  for (const auto& c : mpmab::verify_suite(cfg)) {
    std::cout << fmt::format("{} {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
    ok = ok && c.pass;
  }
  return ok ? 0 : kExitInvariant;
}

int cmd_gen(const CommonFlags& f) {
  const ExperimentConfig cfg = resolve(f);
  if (cfg.adversary.kind == mpmab::AdversaryKind::kAdaptive) {
    throw mpmab::ConfigError("the adaptive adversary reacts to the players and has no fixed loss table");
  }
  const long long horizon = cfg.horizons.front();
  auto adversary = mpmab::make_adversary(cfg.adversary, cfg.arms, horizon, cfg.seed);
  mpmab::LossSequence seq(horizon, cfg.arms);
  std::vector<double> row(cfg.arms);
  for (long long t = 1; t <= horizon; ++t) {
    adversary->losses(t, nullptr, row);
    seq.set_row(t, row);
  }
  if (cfg.out.empty()) {
    mpmab::write_loss_csv(std::cout, seq);
  } else {
    mpmab::save_loss_csv(cfg.out, seq);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplayer bandit simulations with and without collision information"};
  app.require_subcommand(0, 1);
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "print the config keys and exit");

  CommonFlags run_flags, scaling_flags, verify_flags, gen_flags;
  auto* run = app.add_subcommand("run", "run repeated games and write per-run and summary CSVs");
  add_common(run, run_flags);
  auto* scaling = app.add_subcommand("scaling", "sweep T and fit the log-log regret slope");
  add_common(scaling, scaling_flags);
  auto* verify = app.add_subcommand("verify", "run the invariant suites");
  add_common(verify, verify_flags);
  auto* adversary = app.add_subcommand("adversary", "adversary tools");
  adversary->require_subcommand(1);
  auto* gen = adversary->add_subcommand("gen", "write an oblivious loss table as CSV");
  add_common(gen, gen_flags);

  CLI11_PARSE(app, argc, argv);

  if (print_schema) {
    std::cout << mpmab::schema_text();
    return 0;
  }
  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (scaling->parsed()) return cmd_scaling(scaling_flags);
    if (verify->parsed()) return cmd_verify(verify_flags);
    if (gen->parsed()) return cmd_gen(gen_flags);
  } catch (const mpmab::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  std::cout << app.help();
  return 0;
}
