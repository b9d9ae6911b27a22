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

#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "mpmab/adversaries.hpp"
#include "mpmab/collision_pair.hpp"
#include "mpmab/errors.hpp"
#include "mpmab/harness.hpp"

using namespace mpmab;

namespace {

std::vector<double> random_weights(RngStream& rng, int k) {
  std::vector<double> w(k);
  for (double& x : w) x = 0.05 + rng.uniform();
  return w;
}

// Records Alice's arm at one round together with the full estimate sums
// that determine its law.
class ActionProbe final : public PairMonitor {
 public:
  explicit ActionProbe(long long round) : round_(round) {}
  void on_round(const CollisionInfoTeam& team, long long v, std::optional<CommKind>) override {
    if (v != round_) return;
    arm = team.alice().action();
    const auto& sums = team.full_sums();
    key.clear();
    for (Fixed s : sums) {
      key.push_back(static_cast<std::uint64_t>(s >> 64));
      key.push_back(static_cast<std::uint64_t>(s));
    }
    const Phase& phase = team.alice().phase();
    const auto labels = alice_marginal(team.alice().label_weights(sums), phase.eps);
    law.assign(labels.size(), 0.0);
    for (std::size_t l = 0; l < labels.size(); ++l) law[phase.label_to_slot[l]] = labels[l];
  }
  Arm arm;
  std::vector<std::uint64_t> key;
  std::vector<double> law;

 private:
  long long round_;
};

}  // namespace

TEST_CASE("pair law Q: symmetric and hand-computed cases") {
  const auto q = compute_q(std::vector<double>{1, 1, 1});
  CHECK(q(Arm{1}, Arm{2}) == doctest::Approx(1.0 / 3.0));
  CHECK(q(Arm{2}, Arm{3}) == doctest::Approx(1.0 / 3.0));
  CHECK(q(Arm{2}, Arm{2}) == 0.0);
  const auto q2 = compute_q(std::vector<double>{2, 1, 1});
  CHECK(q2.normalizer() == doctest::Approx(10.0));
  CHECK(q2(Arm{1}, Arm{2}) == doctest::Approx(0.4));
  CHECK(q2(Arm{1}, Arm{3}) == doctest::Approx(0.4));
  CHECK(q2(Arm{2}, Arm{3}) == doctest::Approx(0.2));
  CHECK(q2(Arm{3}, Arm{2}) == q2(Arm{2}, Arm{3}));
  CHECK_THROWS_AS(compute_q(std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("pair law Q sums to one") {
  RngStream rng(1, "test.q");
  for (int trial = 0; trial < 500; ++trial) {
    const auto q = compute_q(random_weights(rng, 2 + trial % 7));
    CHECK(q.total() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ordered assignment P for w = (2,1,1), eps = 1/4") {
  const auto p = assign_p(compute_q(std::vector<double>{2, 1, 1}), 0.25);
  CHECK(p(Arm{1}, Arm{2}) == doctest::Approx(0.3));
  CHECK(p(Arm{2}, Arm{1}) == doctest::Approx(0.1));
  CHECK(p(Arm{2}, Arm{3}) == doctest::Approx(0.1));
  CHECK(p(Arm{3}, Arm{2}) == doctest::Approx(0.1));
  CHECK(p(Arm{1}, Arm{1}) == 0.0);
  CHECK(p.alice_marginal()[0] == doctest::Approx(0.6));
  CHECK_THROWS_AS(assign_p(compute_q(std::vector<double>{2, 1, 1}), 0.0), ConfigError);
  CHECK_THROWS_AS(assign_p(compute_q(std::vector<double>{2, 1, 1}), 0.6), ConfigError);
}

TEST_CASE("eps = 1/2 splits pairs through arm 1 evenly") {
  RngStream rng(2, "test.half");
  const auto p = assign_p(compute_q(random_weights(rng, 5)), 0.5);
  for (int i = 2; i <= 5; ++i) CHECK(p(Arm{1}, Arm{i}) == doctest::Approx(p(Arm{i}, Arm{1})));
}

TEST_CASE("ordered assignment reproduces Q on every unordered pair and never collides") {
  RngStream rng(3, "test.pq");
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + trial % 6;
    const auto q = compute_q(random_weights(rng, k));
    const auto p = assign_p(q, 0.01 + 0.49 * rng.uniform());
    double total = 0.0;
    for (int a = 1; a <= k; ++a) {
      CHECK(p(Arm{a}, Arm{a}) == 0.0);
      for (int b = 1; b <= k; ++b) {
        total += p(Arm{a}, Arm{b});
        if (a < b) CHECK(p(Arm{a}, Arm{b}) + p(Arm{b}, Arm{a}) == doctest::Approx(q(Arm{a}, Arm{b})).epsilon(1e-12));
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("p^A(1) >= 1 - 5K eps whenever arm 1 dominates and eps is in its bracket") {
  RngStream rng(4, "test.pa1");
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + trial % 6;
    auto w = random_weights(rng, k);
    const double top = *std::max_element(w.begin(), w.end());
    w[0] = std::max(w[0], 0.5 * top + 1e-9);
    const double ratio = *std::max_element(w.begin() + 1, w.end()) / w[0];
    const double lo = 0.25 * ratio, hi = std::min(ratio, 0.5);
    const double eps = lo + (hi - lo) * rng.uniform();
    const auto pa = assign_p(compute_q(w), eps).alice_marginal();
    CHECK(pa[0] >= 1.0 - 5.0 * k * eps - 1e-12);
  }
}

TEST_CASE("phase parameters from the reference weights") {
  const auto a = phase_params(std::vector<double>{4, 2, 1}, std::vector<double>{4, 2, 1});
  CHECK(a.eps == doctest::Approx(0.25));
  const auto b = phase_params(std::vector<double>{2, 1, 1}, std::vector<double>{2, 1, 1});
  CHECK(b.xi[0] == doctest::Approx(1.0 / 24.0));
  CHECK(b.xi[1] == doctest::Approx(1.0 / 6.0));
  CHECK(b.xi[2] == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("conditional law of Bob's arm: examples and closed forms") {
  const std::vector<double> w{2, 1, 1};
  const auto p = assign_p(compute_q(w), 0.25);
  const auto given1 = conditional_pb(p, Arm{1});
  CHECK(given1[1] == doctest::Approx(0.5));
  CHECK(given1[2] == doctest::Approx(0.5));
  const auto given2 = conditional_pb(p, Arm{2});
  CHECK(given2[0] == doctest::Approx(0.5));
  CHECK(given2[2] == doctest::Approx(0.5));
  CHECK(given2[1] == 0.0);

  const auto flat = assign_p(compute_q(std::vector<double>{1, 1, 1, 1}), 0.5);
  for (int a = 1; a <= 4; ++a) {
    const auto c = conditional_pb(flat, Arm{a});
    for (int b = 1; b <= 4; ++b) CHECK(c[b - 1] == doctest::Approx(a == b ? 0.0 : 1.0 / 3.0));
  }
}

TEST_CASE("closed-form marginal and conditional agree with the table construction") {
  RngStream rng(5, "test.closed");
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + trial % 6;
    const auto w = random_weights(rng, k);
    const double eps = 0.01 + 0.49 * rng.uniform();
    const auto p = assign_p(compute_q(w), eps);
    const auto pa = p.alice_marginal(), fast = alice_marginal(w, eps);
    for (int a = 0; a < k; ++a) CHECK(fast[a] == doctest::Approx(pa[a]).epsilon(1e-12));
    for (int a = 1; a <= k; ++a) {
      const auto c = conditional_pb(p, Arm{a});
      const auto f = bob_conditional(w, eps, Arm{a});
      for (int b = 0; b < k; ++b) CHECK(f[b] == doctest::Approx(c[b]).epsilon(1e-12));
      if (a == 1) {
        double rest = 0.0;
        for (int b = 1; b < k; ++b) rest += w[b];
        for (int b = 1; b < k; ++b) CHECK(c[b] == doctest::Approx(w[b] / rest).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("conditioning on an arm Alice never plays is an error") {
  const OrderedPairDist p(2, {0.0, 1.0, 0.0, 0.0}, 0.5);
  CHECK_THROWS_AS(p.conditional(Arm{2}), ValidationError);
}

TEST_CASE("coupled bits: thresholds and disjointness") {
  CHECK(sample_coupled_bits(1.0 / 24, 1.0 / 6, 0.5, 0.0) == CoupledBits{true, false});
  CHECK(sample_coupled_bits(1.0 / 24, 1.0 / 6, 0.5, 0.2) == CoupledBits{false, true});
  CHECK(sample_coupled_bits(1.0 / 24, 1.0 / 6, 0.5, 0.375) == CoupledBits{false, false});
  CHECK(sample_coupled_bits(1.0 / 24, 1.0 / 6, 0.5, 0.99, BitLayout::kComplementary) == CoupledBits{false, true});
  CHECK_THROWS_AS(sample_coupled_bits(0.6, 0.3, 0.5, 0.1), InvariantViolation);
}

TEST_CASE("coupled bits have the prescribed marginals") {
  const double xa = 1.0 / 24, xb = 1.0 / 6, pb = 0.5;
  const long long n = 1000000;
  for (BitLayout layout : {BitLayout::kAdjacent, BitLayout::kComplementary}) {
    RngStream rng(6, "test.bits");
    long long ca = 0, cb = 0;
    for (long long i = 0; i < n; ++i) {
      const auto bits = sample_coupled_bits(xa, xb, pb, rng.uniform(), layout);
      REQUIRE_FALSE((bits.a && bits.b));
      ca += bits.a;
      cb += bits.b;
    }
    const double ya = xb / pb;
    CHECK(std::abs(ca / double(n) - xa) <= 3.0 * std::sqrt(xa * (1 - xa) / n));
    CHECK(std::abs(cb / double(n) - ya) <= 3.0 * std::sqrt(ya * (1 - ya) / n));
  }
}

TEST_CASE("estimator record") {
  const auto none = build_estimator(3, Arm{1}, Arm{2}, 0.4, 0.5, {false, false}, 1.0 / 24, 1.0 / 6);
  CHECK(none.values == std::vector<double>{0, 0, 0});
  const auto bob = build_estimator(3, Arm{1}, Arm{2}, 0.4, 0.5, {false, true}, 1.0 / 24, 1.0 / 6);
  CHECK(bob.values[1] == doctest::Approx(3.0));
  CHECK(bob.values[0] == 0.0);
  const auto alice = build_estimator(3, Arm{1}, Arm{2}, 0.4, 0.5, {true, false}, 1.0 / 24, 1.0 / 6);
  CHECK(alice.values[0] == doctest::Approx(9.6));
}

TEST_CASE("filtering: trivial and forced cases") {
  const std::vector<double> p{0.3, 0.7}, zero{0.0, 0.0};
  for (double u : {0.0, 0.5, 0.99}) {
    CHECK_FALSE(filter_resample(p, p, std::vector<double>{1e-12, 1e-12}, Arm{1}, 0.5, u).switched);
  }
  const auto forced = filter_resample(std::vector<double>{1, 0}, std::vector<double>{0, 1}, std::vector<double>{1, 1},
                                      Arm{1}, 0.3, 0.01);
  CHECK(forced.switched);
  CHECK(forced.action == Arm{2});
  const auto r = filter_target(std::vector<double>{0.5, 0.5}, std::vector<double>{0.6, 0.4},
                               std::vector<double>{0.2, 0.2});
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("filtering precondition failures surface as invariant violations") {
  CHECK_THROWS_AS(filter_target(std::vector<double>{0.5, 0.5}, std::vector<double>{0.9, 0.1},
                                std::vector<double>{0.2, 0.2}),
                  InvariantViolation);
  const auto r = filter_target(std::vector<double>{0.5, 0.5}, std::vector<double>{0.6 + 5e-11, 0.4 - 5e-11},
                               std::vector<double>{0.2, 0.2});
  CHECK(r[1] == 0.0);
  CHECK(r[0] == doctest::Approx(1.0));
}

TEST_CASE("filtering output law equals q when the input is drawn from p") {
  const std::vector<double> p{0.5, 0.5}, q{0.6, 0.4}, eps{0.2, 0.2};
  RngStream rng(7, "test.filter");
  const long long n = 1000000;
  long long first = 0;
  for (long long i = 0; i < n; ++i) {
    const Arm current = rng.uniform() < p[0] ? Arm{1} : Arm{2};
    const double us = rng.uniform(), up = rng.uniform();
    first += filter_resample(p, q, eps, current, us, up).action == Arm{1};
  }
  CHECK(std::abs(first / double(n) - 0.6) <= 3.0 * std::sqrt(0.24 / n));
}

TEST_CASE("variance functional on a flat law") {
  const auto q = compute_q(std::vector<double>{1, 1, 1});
  const auto p = assign_p(q, 0.5);
  const double v = variance_functional(q, p);
  CHECK(v > 0.0);
  CHECK(v <= 64.0 * 3);
}

TEST_CASE("standard pair configuration") {
  const auto cfg = PairConfig::standard(3, 10000);
  CHECK(cfg.eta == doctest::Approx(std::ldexp(1.0, -7) / (std::pow(3.0, 1.5) * 100.0)));
  CHECK(cfg.variance_constant == 24.0);
  CHECK(cfg.fixed_period == 58);
  CHECK(cfg.loss_floor == doctest::Approx(1e-8));
  CHECK(fixed_period(3, 10000) * fixed_period(3, 10000) * 3 >= 10000);
  CHECK((fixed_period(3, 10000) - 1) * (fixed_period(3, 10000) - 1) * 3 < 10000);
  CHECK_THROWS_AS(PairConfig::standard(1, 100), ConfigError);
}

TEST_CASE("phase reordering sorts by summed estimates and breaks ties by index") {
  const Quantizer quant(1000);
  const std::vector<Fixed> sums{quant.encode(2.0), quant.encode(1.0), quant.encode(1.0), quant.encode(0.5)};
  const auto phase = Phase::reorder(sums, 7, 0.1, quant);
  CHECK(phase.label_to_slot == std::vector<int>{3, 1, 2, 0});
  CHECK(phase.tau == 7);
  CHECK(phase.first_weight == doctest::Approx(std::exp(0.05)).epsilon(1e-9));
  CHECK(phase.eps == doctest::Approx(0.5 / std::exp(0.05)).epsilon(1e-9));
}

TEST_CASE("oracle team: no collisions and per-round invariants, K in {2,3,5}") {
  for (int k : {2, 3, 5}) {
    CollisionInfoTeam team(PairConfig::standard(k, 10000), 17);
    InvariantChecker checker;
    team.add_monitor(&checker);
    auto adv = make_adversary(AdversarySpec{}, k, 10000, 17);
    const auto result = run_game(team, *adv);
    CHECK(result.report.collision_rounds == 0);
    CHECK(checker.rounds_checked() == 10000);
    CHECK(checker.max_variance() <= 64.0 * k);
    CHECK(checker.max_realized_l() <= 8.0 * k);
  }
}

TEST_CASE("oracle team: Alice only moves on synchronization rounds") {
  CollisionInfoTeam team(PairConfig::standard(3, 5000), 23);
  auto adv = make_adversary(AdversarySpec{}, 3, 5000, 23);
  const auto result = run_game(team, *adv);
  std::vector<bool> sync(5001, false);
  for (const auto& e : result.transcript.events()) sync[e.t] = true;
  for (long long t = 2; t <= 5000; ++t) {
    if (!sync[t]) CHECK(result.transcript.at(t, 0).action == result.transcript.at(t - 1, 0).action);
  }
  CHECK(team.stats().fixed_syncs + team.stats().random_syncs + 1 == static_cast<long long>(result.transcript.events().size()));
}

TEST_CASE("oracle team: mean random synchronizations within 5 K^3 eta T") {
  const int k = 3;
  const long long horizon = 10000;
  const auto cfg = PairConfig::standard(k, horizon);
  double total = 0.0;
  for (int s = 0; s < 50; ++s) {
    CollisionInfoTeam team(cfg, 300 + s);
    auto adv = make_adversary(AdversarySpec{}, k, horizon, 300 + s);
    run_game(team, *adv);
    total += static_cast<double>(team.stats().random_syncs);
    CHECK(team.stats().fixed_syncs <= static_cast<long long>(std::sqrt(double(horizon) * k)));
  }
  CHECK(total / 50 <= 5.0 * k * k * k * cfg.eta * horizon);
}

TEST_CASE("oracle team runs are reproducible and the shared stream modes differ") {
  auto once = [](SharedMode mode) {
    CollisionInfoTeam team(PairConfig::standard(3, 2000), 5, mode);
    auto adv = make_adversary(AdversarySpec{}, 3, 2000, 5);
    const auto r = run_game(team, *adv);
    std::vector<int> acts;
    for (long long t = 1; t <= 2000; ++t) acts.push_back(r.transcript.at(t, 1).action.value);
    return acts;
  };
  CHECK(once(SharedMode::kPrg) == once(SharedMode::kPrg));
  CHECK(once(SharedMode::kIdeal) == once(SharedMode::kIdeal));
  CHECK(once(SharedMode::kPrg) != once(SharedMode::kIdeal));
}

TEST_CASE("binary-loss mode keeps the invariants") {
  auto cfg = PairConfig::standard(3, 5000);
  cfg.binary_losses = true;
  CollisionInfoTeam team(cfg, 9);
  InvariantChecker checker;
  team.add_monitor(&checker);
  const LossSequence seq(5000, 3, std::vector<double>(15000, 0.37));
  ObliviousAdversary adv(seq);
  CHECK(run_game(team, adv).report.collision_rounds == 0);
}

TEST_CASE("Alice's law given the estimate history matches p^A") {
  PairConfig cfg = PairConfig::standard(3, 100);
  cfg.eta = 0.01;
  const long long probe_round = 3;
  REQUIRE(probe_round % cfg.fixed_period != 0);
  const LossSequence seq(100, 3, [] {
    std::vector<double> t;
    for (int i = 0; i < 100; ++i) t.insert(t.end(), {0.2, 0.5, 0.8});
    return t;
  }());
  struct Group {
    std::vector<long long> counts = std::vector<long long>(3, 0);
    std::vector<double> law;
  };
  std::map<std::vector<std::uint64_t>, Group> groups;
  const int replays = 200000;
  for (int s = 0; s < replays; ++s) {
    CollisionInfoTeam team(cfg, 1000000 + s);
    ActionProbe probe(probe_round);
    team.add_monitor(&probe);
    ObliviousAdversary adv(seq);
    Game game(team, adv);
    for (long long t = 1; t <= probe_round; ++t) game.play_round(t);
    auto& g = groups[probe.key];
    if (g.law.empty()) g.law = probe.law;
    ++g.counts[probe.arm.slot()];
  }
  int tested = 0;
  for (const auto& [key, g] : groups) {
    if (std::accumulate(g.counts.begin(), g.counts.end(), 0LL) < 10000) continue;
    ++tested;
    CHECK(tv_distance(g.counts, g.law) <= 0.02);
  }
  CHECK(tested >= 3);
}

TEST_CASE("diagnostics writer emits one row per round") {
  std::stringstream out;
  CollisionInfoTeam team(PairConfig::standard(3, 50), 3);
  DiagnosticsWriter writer(out);
  team.add_monitor(&writer);
  auto adv = make_adversary(AdversarySpec{}, 3, 50, 3);
  run_game(team, *adv);
  std::string line;
  std::getline(out, line);
  CHECK(line == "t,alice,bob,eps,xi_min,xi_max,variance,comm");
  int rows = 0;
  while (std::getline(out, line)) ++rows;
  CHECK(rows == 50);
}
