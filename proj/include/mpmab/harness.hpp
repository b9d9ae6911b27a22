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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpmab/adversaries.hpp"
#include "mpmab/collision_pair.hpp"
#include "mpmab/env.hpp"

namespace mpmab {

enum class ModelKind : std::uint8_t { kCollisionInfo, kCollisionInfoOracle, kNoInfo };
std::string_view to_string(ModelKind kind);
ModelKind parse_model(std::string_view text);

struct ExperimentConfig {
  ModelKind model = ModelKind::kCollisionInfoOracle;
  int players = 2;
  int arms = 3;
  std::vector<long long> horizons = {10000};
  AdversarySpec adversary;
  int reps = 10;
  std::uint64_t seed = 1;
  std::string out;
  long long blocks = 0;    // no-collision block count; 0 = floor(sqrt T)
  double explore = -1.0;  // exploration rate; negative = strategy default
  double eta = 0.0;       // collision-info learning rate; 0 = default
  double eta_scale = 1.0;
  SharedMode shared = SharedMode::kPrg;
  bool binary_losses = false;
  int threads = 1;

  void validate() const;
  // Single-line key=value rendering, parseable by apply_setting.
  std::string describe() const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view type;
  std::string_view fallback;
  std::string_view help;
};
std::span<const ConfigKey> config_schema();
std::string schema_text();

// Integers accept the forms 1024 and 2^10.
long long parse_count(std::string_view text);
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);
// Flat "key = value" lines; '#' starts a comment.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

std::unique_ptr<Team> make_team(const ExperimentConfig& cfg, long long horizon, std::uint64_t seed);

struct RunRecord {
  long long horizon = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  RegretReport report;
  long long fixed_syncs = 0;
  long long random_syncs = 0;
};

RunRecord run_single(const ExperimentConfig& cfg, long long horizon, int rep);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};
// Sample standard deviation over sqrt(n); zero for n < 2.
MeanStderr mean_stderr(std::span<const double> xs);

struct Aggregate {
  long long horizon = 0;
  int reps = 0;
  MeanStderr regret;
  double mean_collisions = 0.0;
  double mean_organic = 0.0;
  double mean_protocol = 0.0;
  double mean_comm = 0.0;
  double mean_fixed = 0.0;
  double mean_random = 0.0;
  double mean_bits = 0.0;
  long long max_organic = 0;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;  // ordered by (horizon index, rep)
  std::vector<Aggregate> aggregates;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);
std::vector<Aggregate> aggregate_runs(std::span<const RunRecord> runs, std::span<const long long> horizons);

void write_runs_csv(std::ostream& out, const ExperimentConfig& cfg, std::span<const RunRecord> runs);
void write_summary_csv(std::ostream& out, const ExperimentConfig& cfg, std::span<const Aggregate> rows);
// Writes runs to `path` and aggregates to the same name with ".summary.csv".
void save_experiment(const std::string& path, const ExperimentConfig& cfg, const ExperimentResult& result);
std::string summary_path(const std::string& path);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<std::pair<double, double>> points;  // (log T, log regret)
  std::vector<std::string> warnings;
};

// Least squares on (log T, log regret) over (T, regret) pairs. Points with
// regret <= 0 are dropped with a warning; fewer than 3 usable points throws.
SlopeFit fit_slope(std::span<const std::pair<double, double>> points);

// Half the L1 distance between empirical frequencies and `target`.
double tv_distance(std::span<const long long> counts, std::span<const double> target);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Invariant suites behind the `verify` subcommand.
std::vector<CheckResult> verify_suite(const ExperimentConfig& cfg);

}  // namespace mpmab
