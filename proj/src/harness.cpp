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

#include "mpmab/harness.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "mpmab/collision_channel.hpp"
#include "mpmab/errors.hpp"
#include "mpmab/multiplayer.hpp"
#include "mpmab/no_collision.hpp"

namespace mpmab {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = s.find(sep, begin);
    out.push_back(trim(s.substr(begin, pos == std::string_view::npos ? std::string_view::npos : pos - begin)));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

double parse_real(std::string_view key, std::string_view text) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("key '{}': '{}' is not a number", key, text));
  }
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("key '{}': '{}' is not a boolean", key, text));
}

constexpr ConfigKey kSchema[] = {
    {"model", "enum", "collision_info_oracle", "collision_info | collision_info_oracle | no_info"},
    {"m", "int", "2", "number of players; m > 2 selects the nested-block strategy (no_info only)"},
    {"K", "int", "3", "number of arms"},
    {"T", "int list", "10000", "horizon, or comma list of horizons for scaling runs (2^k accepted)"},
    {"adversary", "enum", "stochastic", "stochastic | scripted | remark | adaptive"},
    {"means", "real list", "evenly spaced 0.1..0.9", "stochastic arm means, one per arm"},
    {"script", "path", "", "loss CSV for the scripted adversary"},
    {"reps", "int", "10", "repetitions per horizon, seeds seed+0..seed+reps-1"},
    {"seed", "uint64", "1", "base seed"},
    {"out", "path", "", "per-run CSV path; aggregates go to <stem>.summary.csv"},
    {"R", "int", "0", "no-collision block count (0 = floor(sqrt T))"},
    {"explore", "real", "-1", "exploration rate override (negative = strategy default)"},
    {"eta", "real", "0", "collision-info learning rate (0 = 2^-7 K^-1.5 T^-0.5)"},
    {"eta_scale", "real", "1", "multiplier applied to the collision-info learning rate"},
    {"shared_stream", "enum", "prg", "prg | ideal shared randomness for collision-info runs"},
    {"binary_losses", "bool", "false", "round observed losses to {0,1} privately before estimation"},
    {"threads", "int", "1", "worker threads across repetitions (results do not depend on it)"},
};

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kCollisionInfo:
      return "collision_info";
    case ModelKind::kCollisionInfoOracle:
      return "collision_info_oracle";
    case ModelKind::kNoInfo:
      return "no_info";
  }
  return "?";
}

ModelKind parse_model(std::string_view text) {
  for (auto k : {ModelKind::kCollisionInfo, ModelKind::kCollisionInfoOracle, ModelKind::kNoInfo}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError(fmt::format("unknown model '{}' (expected collision_info, collision_info_oracle or no_info)", text));
}

std::span<const ConfigKey> config_schema() { return kSchema; }

std::string schema_text() {
  std::string out;
  for (const auto& k : kSchema) out += fmt::format("{:<14} {:<10} default {:<24} {}\n", k.name, k.type, k.fallback, k.help);
  return out;
}

long long parse_count(std::string_view text) {
  const auto caret = text.find('^');
  auto whole = [&](std::string_view s) {
    long long v = 0;
    if (s.empty()) throw ConfigError(fmt::format("'{}' is not an integer", text));
    for (char c : s) {
      if (c < '0' || c > '9') throw ConfigError(fmt::format("'{}' is not an integer", text));
      v = v * 10 + (c - '0');
      if (v > (1LL << 50)) throw ConfigError(fmt::format("'{}' is too large", text));
    }
    return v;
  };
  if (caret == std::string_view::npos) return whole(trim(text));
  const long long base = whole(trim(text.substr(0, caret)));
  const long long exp = whole(trim(text.substr(caret + 1)));
  const long long v = int_pow(base, static_cast<int>(exp));
  if (v < 0 || v > (1LL << 50)) throw ConfigError(fmt::format("'{}' is too large", text));
  return v;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "model") {
    cfg.model = parse_model(value);
  } else if (key == "m") {
    cfg.players = static_cast<int>(parse_count(value));
  } else if (key == "K") {
    cfg.arms = static_cast<int>(parse_count(value));
  } else if (key == "T") {
    cfg.horizons.clear();
    for (auto item : split(value, ',')) cfg.horizons.push_back(parse_count(item));
  } else if (key == "adversary") {
    cfg.adversary.kind = parse_adversary_kind(value);
  } else if (key == "means") {
    cfg.adversary.means.clear();
    if (!value.empty()) {
      for (auto item : split(value, ',')) cfg.adversary.means.push_back(parse_real(key, item));
    }
  } else if (key == "script") {
    cfg.adversary.script = std::string(value);
  } else if (key == "reps") {
    cfg.reps = static_cast<int>(parse_count(value));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_count(value));
  } else if (key == "out") {
    cfg.out = std::string(value);
  } else if (key == "R") {
    cfg.blocks = parse_count(value);
  } else if (key == "explore") {
    cfg.explore = parse_real(key, value);
  } else if (key == "eta") {
    cfg.eta = parse_real(key, value);
  } else if (key == "eta_scale") {
    cfg.eta_scale = parse_real(key, value);
  } else if (key == "shared_stream") {
    if (value == "prg") {
      cfg.shared = SharedMode::kPrg;
    } else if (value == "ideal") {
      cfg.shared = SharedMode::kIdeal;
    } else {
      throw ConfigError(fmt::format("shared_stream must be prg or ideal, got '{}'", value));
    }
  } else if (key == "binary_losses") {
    cfg.binary_losses = parse_bool(key, value);
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_count(value));
  } else {
    throw ConfigError(fmt::format("unknown config key '{}' (see --print-schema)", key));
  }
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("config line {}: expected key = value", number));
    try {
      apply_setting(base, trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {}: {}", number, e.what()));
    }
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path));
  return parse_config(in, std::move(base));
}

void ExperimentConfig::validate() const {
  if (arms < 1) throw ConfigError("K must be positive");
  if (players < 1 || players > arms) throw ConfigError(fmt::format("need 1 <= m <= K, got m = {}, K = {}", players, arms));
  if (horizons.empty()) throw ConfigError("at least one horizon T is required");
  if (reps < 1) throw ConfigError("reps must be positive");
  if (threads < 1) throw ConfigError("threads must be positive");
  if (eta < 0.0 || !(eta_scale > 0.0)) throw ConfigError("eta must be >= 0 and eta_scale > 0");
  const bool pair_info = model != ModelKind::kNoInfo;
  if (pair_info && players != 2) {
    throw ConfigError(fmt::format("model {} is a two-player strategy; set m = 2", to_string(model)));
  }
  if (adversary.kind == AdversaryKind::kAdaptive) {
    if (arms != 3) throw ConfigError("the adaptive adversary needs K = 3");
    if (model == ModelKind::kCollisionInfo) {
      throw ConfigError("the adaptive adversary needs declared distributions; use collision_info_oracle or no_info");
    }
    if (players != 2) throw ConfigError("the adaptive adversary plays against two players");
  }
  if (adversary.kind == AdversaryKind::kRemark && arms != 3) throw ConfigError("the remark sequence needs K = 3");
  for (long long t : horizons) {
    if (t < 1) throw ConfigError("horizons must be positive");
    if (adversary.kind == AdversaryKind::kRemark && t % 3 != 0) {
      throw ConfigError(fmt::format("the remark sequence needs 3 | T, got T = {}", t));
    }
    if (model == ModelKind::kNoInfo && players == 2) {
      NoCollisionConfig c = NoCollisionConfig::standard(arms, t);
      if (t < static_cast<long long>(arms) * arms) {
        throw ConfigError(fmt::format("no_info with m = 2 needs T >= K^2 = {}, got T = {}", arms * arms, t));
      }
      if (blocks > 0) c.blocks = blocks;
      if (explore >= 0.0) c.explore = explore;
      c.validate();
    } else if (model == ModelKind::kNoInfo) {
      MultiplayerConfig c = MultiplayerConfig::standard(players, arms, t);
      if (explore >= 0.0) c.explore = explore;
      c.validate();
    } else if (arms < 2) {
      throw ConfigError("collision-info strategies need K >= 2");
    }
  }
  if (model == ModelKind::kNoInfo && players == 1) throw ConfigError("no_info needs at least two players");
}

std::string ExperimentConfig::describe() const {
  std::string means = adversary.means.empty() ? std::string() : fmt::format("{}", fmt::join(adversary.means, ","));
  return fmt::format(
      "model={} m={} K={} T={} adversary={} means={} script={} reps={} seed={} R={} explore={} eta={} eta_scale={} "
      "shared_stream={} binary_losses={}",
      to_string(model), players, arms, fmt::join(horizons, ","), to_string(adversary.kind), means, adversary.script,
      reps, seed, blocks, explore, eta, eta_scale, shared == SharedMode::kPrg ? "prg" : "ideal",
      binary_losses ? "true" : "false");
}

std::unique_ptr<Team> make_team(const ExperimentConfig& cfg, long long horizon, std::uint64_t seed) {
  switch (cfg.model) {
    case ModelKind::kCollisionInfo:
    case ModelKind::kCollisionInfoOracle: {
      PairConfig pc = PairConfig::standard(cfg.arms, horizon);
      if (cfg.eta > 0.0) pc.eta = cfg.eta;
      pc.eta *= cfg.eta_scale;
      pc.binary_losses = cfg.binary_losses;
      if (cfg.model == ModelKind::kCollisionInfo) return std::make_unique<WrappedCollisionTeam>(pc, seed, cfg.shared);
      return std::make_unique<CollisionInfoTeam>(pc, seed, cfg.shared);
    }
    case ModelKind::kNoInfo:
      if (cfg.players == 2) {
        NoCollisionConfig nc = NoCollisionConfig::standard(cfg.arms, horizon);
        if (cfg.blocks > 0) {
          nc.blocks = cfg.blocks;
          nc.explore = std::sqrt(static_cast<double>(cfg.arms) * nc.blocks / static_cast<double>(horizon));
        }
        if (cfg.explore >= 0.0) nc.explore = cfg.explore;
        return std::make_unique<NoCollisionTeam>(nc, seed);
      } else {
        MultiplayerConfig mc = MultiplayerConfig::standard(cfg.players, cfg.arms, horizon);
        if (cfg.explore >= 0.0) mc.explore = cfg.explore;
        return std::make_unique<MultiplayerTeam>(mc, seed);
      }
  }
  throw ConfigError("unknown model");
}

RunRecord run_single(const ExperimentConfig& cfg, long long horizon, int rep) {
  RunRecord rec;
  rec.horizon = horizon;
  rec.rep = rep;
  rec.seed = cfg.seed + static_cast<std::uint64_t>(rep);
  auto team = make_team(cfg, horizon, rec.seed);
  auto adversary = make_adversary(cfg.adversary, cfg.arms, horizon, rec.seed);
  const GameResult result = run_game(*team, *adversary);
  rec.report = result.report;
  for (const auto& e : result.transcript.events()) {
    if (e.kind == CommKind::kFixed) ++rec.fixed_syncs;
    if (e.kind == CommKind::kRandom) ++rec.random_syncs;
  }
  return rec;
}

MeanStderr mean_stderr(std::span<const double> xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double n = static_cast<double>(xs.size());
  out.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

std::vector<Aggregate> aggregate_runs(std::span<const RunRecord> runs, std::span<const long long> horizons) {
  std::vector<Aggregate> out;
  for (long long h : horizons) {
    Aggregate a;
    a.horizon = h;
    std::vector<double> regrets;
    for (const auto& r : runs) {
      if (r.horizon != h) continue;
      regrets.push_back(r.report.regret);
      a.mean_collisions += static_cast<double>(r.report.collision_rounds);
      a.mean_organic += static_cast<double>(r.report.organic_collision_rounds);
      a.mean_protocol += static_cast<double>(r.report.protocol_rounds);
      a.mean_comm += static_cast<double>(r.report.comm_rounds);
      a.mean_fixed += static_cast<double>(r.fixed_syncs);
      a.mean_random += static_cast<double>(r.random_syncs);
      a.mean_bits += static_cast<double>(r.report.bits);
      a.max_organic = std::max(a.max_organic, r.report.organic_collision_rounds);
    }
    a.reps = static_cast<int>(regrets.size());
    if (a.reps > 0) {
      const double n = a.reps;
      a.regret = mean_stderr(regrets);
      a.mean_collisions /= n;
      a.mean_organic /= n;
      a.mean_protocol /= n;
      a.mean_comm /= n;
      a.mean_fixed /= n;
      a.mean_random /= n;
      a.mean_bits /= n;
    }
    out.push_back(a);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  const std::size_t jobs = cfg.horizons.size() * static_cast<std::size_t>(cfg.reps);
  result.runs.resize(jobs);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        result.runs[j] = run_single(cfg, cfg.horizons[j / cfg.reps], static_cast<int>(j % cfg.reps));
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(cfg.threads, static_cast<int>(jobs));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  result.aggregates = aggregate_runs(result.runs, cfg.horizons);
  return result;
}

void write_runs_csv(std::ostream& out, const ExperimentConfig& cfg, std::span<const RunRecord> runs) {
  out << "# " << cfg.describe() << '\n';
  out << "T,rep,seed,regret,player_loss,best_subset_loss,collisions,organic_collisions,protocol_rounds,comm_rounds,"
         "fixed_syncs,random_syncs,bits\n";
  for (const auto& r : runs) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.horizon, r.rep, r.seed, r.report.regret,
                       r.report.player_loss, r.report.best_subset_loss, r.report.collision_rounds,
                       r.report.organic_collision_rounds, r.report.protocol_rounds, r.report.comm_rounds,
                       r.fixed_syncs, r.random_syncs, r.report.bits);
  }
}

void write_summary_csv(std::ostream& out, const ExperimentConfig& cfg, std::span<const Aggregate> rows) {
  out << "# " << cfg.describe() << '\n';
  out << "T,reps,mean_regret,stderr_regret,mean_collisions,mean_organic_collisions,max_organic_collisions,"
         "mean_protocol_rounds,mean_comm_rounds,mean_fixed_syncs,mean_random_syncs,mean_bits\n";
  for (const auto& a : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", a.horizon, a.reps, a.regret.mean, a.regret.stderr_,
                       a.mean_collisions, a.mean_organic, a.max_organic, a.mean_protocol, a.mean_comm, a.mean_fixed,
                       a.mean_random, a.mean_bits);
  }
}

std::string summary_path(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? path.substr(0, dot) : path) + ".summary.csv";
}

void save_experiment(const std::string& path, const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::ofstream runs(path);
  if (!runs) throw ConfigError(fmt::format("cannot write {}", path));
  write_runs_csv(runs, cfg, result.runs);
  std::ofstream summary(summary_path(path));
  if (!summary) throw ConfigError(fmt::format("cannot write {}", summary_path(path)));
  write_summary_csv(summary, cfg, result.aggregates);
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> points) {
  SlopeFit fit;
  for (const auto& [t, r] : points) {
    if (!(t > 0.0)) throw ConfigError("horizons must be positive");
    if (!(r > 0.0)) {
      fit.warnings.push_back(fmt::format("dropped T = {} with nonpositive regret {}", t, r));
      continue;
    }
    fit.points.emplace_back(std::log(t), std::log(r));
  }
  const auto n = static_cast<double>(fit.points.size());
  if (fit.points.size() < 3) throw ConfigError("slope fit needs at least 3 points with positive regret");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : fit.points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("slope fit needs at least two distinct horizons");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

double tv_distance(std::span<const long long> counts, std::span<const double> target) {
  if (counts.size() != target.size()) throw ValidationError("counts and target have different supports");
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw ValidationError("counts must be nonnegative");
    total += c;
  }
  if (total < 1) throw ValidationError("need at least one sample");
  double tv = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    tv += std::abs(static_cast<double>(counts[i]) / static_cast<double>(total) - target[i]);
  }
  return 0.5 * tv;
}

std::vector<CheckResult> verify_suite(const ExperimentConfig& cfg) {
  std::vector<CheckResult> out;
  const long long horizon = cfg.horizons.front();
  const int k = std::max(cfg.arms, 2);
  const int reps = std::min(cfg.reps, 5);

  {
    CheckResult c{"pair invariants (per round, oracle model)", true, ""};
    long long rounds = 0;
    double worst_v = 0.0, worst_l = 0.0;
    for (int rep = 0; rep < reps && c.pass; ++rep) {
      PairConfig pc = PairConfig::standard(k, horizon);
      CollisionInfoTeam team(pc, cfg.seed + rep, cfg.shared);
      InvariantChecker checker(true);
      team.add_monitor(&checker);
      auto adversary = make_adversary(AdversarySpec{}, k, horizon, cfg.seed + rep);
      const auto result = run_game(team, *adversary);
      rounds += checker.rounds_checked();
      worst_v = std::max(worst_v, checker.max_variance());
      worst_l = std::max(worst_l, checker.max_realized_l());
      if (checker.violations() > 0 || result.report.collision_rounds > 0) {
        c.pass = false;
        c.detail = checker.messages().empty() ? "collision" : checker.messages().front();
      }
    }
    if (c.pass) c.detail = fmt::format("{} rounds, max V = {:.3f} (<= {}), max L = {:.3f} (<= {})", rounds, worst_v, 64 * k, worst_l, 8 * k);
    out.push_back(c);
  }
  {
    CheckResult c{"collision channel: no organic collisions", true, ""};
    long long protocol = 0;
    for (int rep = 0; rep < reps; ++rep) {
      WrappedCollisionTeam team(PairConfig::standard(k, horizon), cfg.seed + rep, cfg.shared);
      auto adversary = make_adversary(AdversarySpec{}, k, horizon, cfg.seed + rep);
      const auto result = run_game(team, *adversary);
      protocol += result.report.protocol_rounds;
      if (result.report.organic_collision_rounds != 0) {
        c.pass = false;
        c.detail = fmt::format("seed {}: {} organic collisions", cfg.seed + rep, result.report.organic_collision_rounds);
      }
    }
    if (c.pass) c.detail = fmt::format("{} runs, {} protocol rounds in total", reps, protocol);
    out.push_back(c);
  }
  {
    const PhiAudit audit = audit_phi(5, 3);
    out.push_back({"assignment construction, K <= 5, m <= 3", audit.failures == 0,
                   fmt::format("{} cases, {} failures{}", audit.cases, audit.failures,
                               audit.first_failure.empty() ? "" : ", first: " + audit.first_failure)});
  }
  if (horizon >= static_cast<long long>(k) * k) {
    CheckResult c{"no-collision structure", true, ""};
    NoCollisionTeam team(NoCollisionConfig::standard(k, horizon), cfg.seed);
    auto adversary = make_adversary(AdversarySpec{}, k, horizon, cfg.seed);
    const auto result = run_game(team, *adversary);
    for (long long t = 1; t <= horizon && c.pass; ++t) {
      if (result.transcript.at(t, 0).action == Arm{1}) {
        c.pass = false;
        c.detail = fmt::format("Alice played arm 1 at round {}", t);
      }
    }
    if (c.pass) {
      c.detail = fmt::format("Alice avoided arm 1 for {} rounds; {} collisions", horizon, result.report.collision_rounds);
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace mpmab
