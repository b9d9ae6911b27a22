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

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mpmab/adversaries.hpp"
#include "mpmab/collision_channel.hpp"
#include "mpmab/collision_pair.hpp"
#include "mpmab/harness.hpp"
#include "mpmab/multiplayer.hpp"
#include "mpmab/no_collision.hpp"

using namespace mpmab;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::vector<long long> powers_of_two(int lo, int hi) {
  std::vector<long long> out;
  for (int j = lo; j <= hi; ++j) out.push_back(1LL << j);
  return out;
}

SlopeFit slope_of(const ExperimentResult& result) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& a : result.aggregates) pts.emplace_back(static_cast<double>(a.horizon), a.regret.mean);
  return fit_slope(pts);
}

// Shared by criteria 2 and 3.
const ExperimentResult& optimal_rate_runs() {
  static std::optional<ExperimentResult> cache;
  if (!cache) {
    ExperimentConfig cfg;
    cfg.model = ModelKind::kCollisionInfoOracle;
    cfg.arms = 3;
    cfg.adversary.means = {0.1, 0.5, 0.9};
    cfg.horizons = powers_of_two(10, 17);
    cfg.reps = 30;
    cfg.seed = 2000;
    cache = run_experiment(cfg);
  }
  return *cache;
}

Verdict zero_collisions() {
  long long organic = 0, runs = 0, protocol = 0;
  for (int k : {2, 3, 5}) {
    for (int s = 0; s < 20; ++s) {
      const auto cfg = PairConfig::standard(k, 10000);
      CollisionInfoTeam oracle(cfg, 1000 + s);
      auto a1 = make_adversary(AdversarySpec{}, k, 10000, 1000 + s);
      organic += run_game(oracle, *a1).report.collision_rounds;
      WrappedCollisionTeam wrapped(cfg, 1000 + s);
      auto a2 = make_adversary(AdversarySpec{}, k, 10000, 1000 + s);
      const auto r = run_game(wrapped, *a2).report;
      organic += r.organic_collision_rounds;
      protocol += r.protocol_rounds;
      runs += 2;
    }
  }
  return {organic == 0, fmt::format("{} runs (oracle + wrapped, K in {{2,3,5}}), organic collisions = {}, protocol rounds = {}",
                                    runs, organic, protocol)};
}

Verdict optimal_rate() {
  const auto& result = optimal_rate_runs();
  const auto fit = slope_of(result);
  const auto& last = result.aggregates.back();
  const double k = 3.0;
  const double bound = std::ldexp(1.0, 9) * std::pow(k, 1.5) * std::log(k) * std::sqrt(static_cast<double>(last.horizon));
  const bool slope_ok = fit.slope <= 0.60;
  const bool bound_ok = last.regret.mean <= bound;
  return {slope_ok && bound_ok,
          fmt::format("slope = {:.4f} (<= 0.60: {}), mean regret at T=2^17 = {:.1f} (<= {:.1f}: {})", fit.slope,
                      slope_ok ? "yes" : "no", last.regret.mean, bound, bound_ok ? "yes" : "no")};
}

Verdict communication_budget() {
  const auto& result = optimal_rate_runs();
  const double k = 3.0;
  bool ok = true;
  std::string worst;
  double worst_ratio = 0.0;
  for (const auto& r : result.runs) {
    const double fixed_cap = std::sqrt(static_cast<double>(r.horizon) * k);
    if (static_cast<double>(r.fixed_syncs) > fixed_cap) ok = false;
    worst_ratio = std::max(worst_ratio, r.fixed_syncs / fixed_cap);
  }
  for (const auto& a : result.aggregates) {
    const double eta = pair_learning_rate(3, a.horizon);
    const double cap = 5.0 * k * k * k * eta * static_cast<double>(a.horizon);
    if (a.mean_random > cap) {
      ok = false;
      worst += fmt::format(" T={} random {:.2f} > {:.2f};", a.horizon, a.mean_random, cap);
    }
  }
  const auto& last = result.aggregates.back();
  return {ok, fmt::format("max fixed/sqrt(TK) over {} runs = {:.4f}; at T=2^17 mean random = {:.2f} vs 5K^3 eta T = {:.2f}{}",
                          result.runs.size(), worst_ratio, last.mean_random,
                          5.0 * 27.0 * pair_learning_rate(3, last.horizon) * static_cast<double>(last.horizon), worst)};
}

Verdict filtering_law() {
  const std::vector<double> p{0.5, 0.5}, q{0.6, 0.4}, eps{0.2, 0.2};
  RngStream rng(4, "acceptance.filter");
  const long long n = 1000000;
  std::vector<long long> counts(2, 0);
  for (long long i = 0; i < n; ++i) {
    const Arm current = rng.uniform() < p[0] ? Arm{1} : Arm{2};
    const double us = rng.uniform(), up = rng.uniform();
    ++counts[filter_resample(p, q, eps, current, us, up).action.slot()];
  }
  const double tv = tv_distance(counts, q);
  return {tv <= 0.005, fmt::format("TV = {:.6f} over {} samples (<= 0.005)", tv, n)};
}

Verdict estimator_unbiased() {
  const std::vector<double> w{1.0, 0.6, 0.3};
  const std::vector<double> loss{0.2, 0.5, 0.8};
  const auto pp = phase_params(w, w);
  const auto pa = alice_marginal(w, pp.eps);
  const long long n = 1000000;
  bool ok = true;
  std::vector<std::string> parts;
  for (BitLayout layout : {BitLayout::kAdjacent, BitLayout::kComplementary}) {
    RngStream rng(5, "acceptance.estimator");
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    std::string detail = layout == BitLayout::kAdjacent ? "adjacent bits:" : "complementary bits:";
    for (long long i = 0; i < n; ++i) {
      const Arm a = Arm::from_slot(rng.categorical(pa));
      const auto pb = bob_conditional(w, pp.eps, a);
      const Arm b = Arm::from_slot(rng.categorical(pb));
      const auto bits = sample_coupled_bits(pp.xi[a.slot()], pp.xi[b.slot()], pb[b.slot()], rng.uniform(), layout);
      const auto est = build_estimator(3, a, b, loss[a.slot()], loss[b.slot()], bits, pp.xi[a.slot()], pp.xi[b.slot()]);
      for (int k = 0; k < 3; ++k) {
        sum[k] += est.values[k];
        sq[k] += est.values[k] * est.values[k];
      }
    }
    for (int k = 0; k < 3; ++k) {
      const double mean = sum[k] / n;
      const double se = std::sqrt((sq[k] / n - mean * mean) / n);
      const double z = (mean - loss[k]) / se;
      ok = ok && std::abs(z) <= 3.0;
      detail += fmt::format(" arm {} {:.4f} vs {} (z = {:+.2f})", k + 1, mean, loss[k], z);
    }
    parts.push_back(detail);
  }
  return {ok, fmt::format("{}; {}", parts[0], parts[1])};
}

Verdict invariant_suite() {
  long long rounds = 0, violations = 0;
  double worst_v = 0.0, worst_l = 0.0;
  std::string first;
  for (int k : {2, 3, 5}) {
    CollisionInfoTeam team(PairConfig::standard(k, 10000), 6000 + k);
    InvariantChecker checker(true);
    team.add_monitor(&checker);
    auto adv = make_adversary(AdversarySpec{}, k, 10000, 6000 + k);
    run_game(team, *adv);
    rounds += checker.rounds_checked();
    violations += checker.violations();
    if (first.empty() && !checker.messages().empty()) first = checker.messages().front();
    worst_v = std::max(worst_v, checker.max_variance() / (64.0 * k));
    worst_l = std::max(worst_l, checker.max_realized_l() / (8.0 * k));
  }
  return {violations == 0 && rounds == 30000,
          fmt::format("{} rounds checked (K in {{2,3,5}}, T=10^4), {} violations{}; max V/64K = {:.4f}, max L/8K = {:.4f}",
                      rounds, violations, first.empty() ? "" : " first: " + first, worst_v, worst_l)};
}

Verdict no_collision_sublinear() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::kNoInfo;
  cfg.arms = 3;
  cfg.horizons = powers_of_two(12, 18);
  cfg.reps = 30;
  cfg.seed = 7000;
  const auto fit = slope_of(run_experiment(cfg));
  return {fit.slope <= 0.85, fmt::format("slope = {:.4f} (<= 0.85), r2 = {:.4f}", fit.slope, fit.r2)};
}

Verdict remark_reproduction() {
  const long long horizon = 300;
  const int k = 3;
  const auto seq = remark_sequence(horizon);
  std::vector<Arm> alice;
  for (long long t = 1; t <= horizon; ++t) alice.push_back(Arm{t <= horizon / 3 ? 1 : t <= 2 * horizon / 3 ? 2 : 3});
  const double alice_regret = external_regret(alice, seq, std::vector<Arm>{Arm{1}, Arm{2}, Arm{3}});
  const auto br = best_response(seq, alice);
  const double regret = br.pair_loss - best_fixed_subset_loss(seq, 2);
  const double target = horizon / 3.0 - k;
  return {regret >= target && alice_regret == 0.0,
          fmt::format("Alice external regret = {}, best-response pair regret = {} (>= T/3 - K = {})", alice_regret, regret,
                      target)};
}

Verdict phi_oracle() {
  const auto audit = audit_phi(5, 3);
  return {audit.failures == 0 && audit.cases > 0,
          fmt::format("{} cases, {} failures{}", audit.cases, audit.failures,
                      audit.first_failure.empty() ? "" : " first: " + audit.first_failure)};
}

Verdict multiplayer_scaling() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::kNoInfo;
  cfg.players = 3;
  cfg.arms = 4;
  cfg.horizons = {512, 1728, 4096, 8000};
  cfg.reps = 20;
  cfg.seed = 10000;
  const auto fit = slope_of(run_experiment(cfg));
  return {fit.slope <= 0.95, fmt::format("slope = {:.4f} (<= 0.95), r2 = {:.4f}", fit.slope, fit.r2)};
}

Verdict adaptive_lower_bound() {
  ExperimentConfig cfg;
  cfg.arms = 3;
  cfg.horizons = {10000};
  cfg.reps = 20;
  cfg.seed = 11000;
  cfg.adversary.kind = AdversaryKind::kAdaptive;
  cfg.model = ModelKind::kCollisionInfoOracle;
  const double with_info = run_experiment(cfg).aggregates.front().regret.mean;
  cfg.model = ModelKind::kNoInfo;
  const double without = run_experiment(cfg).aggregates.front().regret.mean;
  const double target = 10000 / 40.0;
  return {with_info >= target && without >= target,
          fmt::format("mean regret: collision-info {:.1f}, no-collision {:.1f} (>= T/40 = {})", with_info, without, target)};
}

Verdict derandomization() {
  ExperimentConfig cfg;
  cfg.arms = 3;
  cfg.horizons = {100000};
  cfg.reps = 50;
  cfg.seed = 12000;
  cfg.shared = SharedMode::kPrg;
  const auto prg = run_experiment(cfg).aggregates.front().regret;
  cfg.shared = SharedMode::kIdeal;
  const auto ideal = run_experiment(cfg).aggregates.front().regret;
  const double combined = std::sqrt(prg.stderr_ * prg.stderr_ + ideal.stderr_ * ideal.stderr_);
  const double gap = std::abs(prg.mean - ideal.mean);
  return {gap <= 2.0 * combined,
          fmt::format("PRG {:.1f} +- {:.1f}, ideal {:.1f} +- {:.1f}; |gap| = {:.1f} (<= {:.1f})", prg.mean, prg.stderr_,
                      ideal.mean, ideal.stderr_, gap, 2.0 * combined)};
}

struct Criterion {
  const char* name;
  std::function<Verdict()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"zero organic collisions", zero_collisions},
      {"optimal-rate scaling", optimal_rate},
      {"communication budget", communication_budget},
      {"filtering output law", filtering_law},
      {"estimator unbiasedness", estimator_unbiased},
      {"per-round invariant suite", invariant_suite},
      {"no-collision-info sublinearity", no_collision_sublinear},
      {"three-phase counterexample", remark_reproduction},
      {"assignment construction oracle", phi_oracle},
      {"m-player scaling", multiplayer_scaling},
      {"adaptive adversary lower bound", adaptive_lower_bound},
      {"derandomization equivalence", derandomization},
  };
  return all;
}

bool report(int index) {
  const auto& c = criteria()[index - 1];
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = c.run();
  } catch (const std::exception& e) {
    v = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fmt::print("{} criterion {:>2}: {}: {} [{:.1f} s]\n", v.pass ? "PASS" : "FAIL", index, c.name, v.detail, secs);
  std::fflush(stdout);
  return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = static_cast<int>(criteria().size());
  if (argc > 1) {
    const int index = std::atoi(argv[1]);
    if (index < 1 || index > n) {
      fmt::print(stderr, "usage: acceptance [1..{}]\n", n);
      return 2;
    }
    return report(index) ? 0 : 1;
  }
  int failed = 0;
  for (int i = 1; i <= n; ++i) failed += report(i) ? 0 : 1;
  return failed == 0 ? 0 : 1;
}
