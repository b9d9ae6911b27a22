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

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mpmab/adversaries.hpp"
#include "mpmab/errors.hpp"
#include "mpmab/multiplayer.hpp"

using namespace mpmab;

TEST_CASE("nested schedule block lengths") {
  const NestedSchedule two(2, 10000);
  CHECK(two.base() == 100);
  CHECK(two.block_length(1) == 100);
  CHECK(two.block_length(2) == 1);
  const NestedSchedule three(3, 512);
  CHECK(three.block_length(1) == 64);
  CHECK(three.block_length(2) == 8);
  CHECK(three.block_length(3) == 1);
  CHECK(three.reset_period(1) == 512);
}

TEST_CASE("reset times of player i are the block starts of player i-1") {
  const NestedSchedule s(3, 1728);
  for (int i = 2; i <= 3; ++i) {
    CHECK(s.reset_period(i) == s.block_length(i - 1));
    for (long long t = 1; t <= 1728; ++t) CHECK(s.reset(i, t) == s.block_start(i - 1, t));
  }
}

TEST_CASE("horizons must be perfect powers; the error names the neighbours") {
  CHECK(exact_root(4096, 3) == 16);
  CHECK(exact_root(1, 4) == 1);
  CHECK(int_pow(7, 3) == 343);
  try {
    exact_root(1000 + 1, 3);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1000") != std::string::npos);
    CHECK(msg.find("1331") != std::string::npos);
  }
  CHECK_THROWS_AS(MultiplayerTeam(MultiplayerConfig::standard(3, 4, 27), 1), ConfigError);
  CHECK_THROWS_AS(MultiplayerTeam(MultiplayerConfig::standard(5, 4, 1024), 1), ConfigError);
}

TEST_CASE("assignment construction examples") {
  CHECK(phi_assign(std::vector<Arm>{Arm{4}}, std::vector<Arm>{Arm{2}}) == std::vector<Arm>{Arm{4}});
  const std::vector<Arm> opt{Arm{3}, Arm{2}};
  CHECK(phi_assign(opt, std::vector<Arm>{Arm{2}, Arm{2}}) == std::vector<Arm>{Arm{2}, Arm{3}});
  CHECK(assign_in_order(opt, std::vector<Arm>{Arm{2}, Arm{2}}) == std::vector<Arm>{Arm{2}, Arm{3}});
  // (a1, a2) = (3, 2), A = (5, 3): walking a in the given order yields (3, 2);
  // canonicalizing the set to ascending order first yields (2, 3).
  CHECK(assign_in_order(opt, std::vector<Arm>{Arm{5}, Arm{3}}) == std::vector<Arm>{Arm{3}, Arm{2}});
  CHECK(phi_assign(opt, std::vector<Arm>{Arm{5}, Arm{3}}) == std::vector<Arm>{Arm{2}, Arm{3}});
}

namespace {

// Visits every (K, m, distinct a, admissible A) with K <= max_k, m <= max_m.
void for_each_case(int max_k, int max_m,
                   const std::function<void(int, const std::vector<Arm>&, const std::vector<Arm>&)>& visit) {
  for (int k = 1; k <= max_k; ++k) {
    for (int m = 1; m <= std::min(k, max_m); ++m) {
      std::vector<Arm> a(m), big(m);
      std::function<void(int)> pick_played = [&](int i) {
        if (i == m) {
          visit(k, a, big);
          return;
        }
        for (int v = m - i; v <= k; ++v) {
          big[i] = Arm{v};
          pick_played(i + 1);
        }
      };
      std::function<void(int)> pick_opt = [&](int i) {
        if (i == m) {
          pick_played(0);
          return;
        }
        for (int v = 1; v <= k; ++v) {
          if (std::find(a.begin(), a.begin() + i, Arm{v}) != a.begin() + i) continue;
          a[i] = Arm{v};
          pick_opt(i + 1);
        }
      };
      pick_opt(0);
    }
  }
}

}  // namespace

TEST_CASE("assignment construction satisfies its lemma on every small input") {
  long long cases = 0;
  for_each_case(5, 3, [&](int, const std::vector<Arm>& a, const std::vector<Arm>& big) {
    ++cases;
    const int m = static_cast<int>(a.size());
    const auto tilde = phi_assign(a, big);
    REQUIRE(tilde.size() == a.size());
    CHECK(std::set<Arm>(tilde.begin(), tilde.end()) == std::set<Arm>(a.begin(), a.end()));
    for (int k = 0; k < m; ++k) {
      CHECK(tilde[k].value >= m - k);
      for (int j = 0; j < k; ++j) {
        CHECK(tilde[k] != tilde[j]);
        CHECK(tilde[k] != big[j]);
      }
      // Prefix dependence: truncating A after position k leaves tilde[0..k] unchanged.
      std::vector<Arm> prefix(big.begin(), big.begin() + k + 1);
      for (int rest = k + 1; rest < m; ++rest) prefix.push_back(Arm{m - rest});
      const auto again = phi_assign(a, prefix);
      CHECK(std::equal(tilde.begin(), tilde.begin() + k + 1, again.begin()));
    }
    std::vector<Arm> permuted(a.rbegin(), a.rend());
    CHECK(phi_assign(permuted, big) == tilde);
  });
  CHECK(cases > 1000);
  const auto audit = audit_phi(5, 3);
  CHECK(audit.cases == cases);
  CHECK(audit.failures == 0);
}

TEST_CASE("players respect their floors and hold actions for whole blocks") {
  const auto cfg = MultiplayerConfig::standard(3, 4, 4096);
  MultiplayerTeam team(cfg, 2);
  auto adv = make_adversary(AdversarySpec{}, 4, 4096, 2);
  const auto r = run_game(team, *adv);
  const NestedSchedule s(3, 4096);
  for (int i = 1; i <= 3; ++i) {
    for (long long t = 1; t <= 4096; ++t) {
      const Arm a = r.transcript.at(t, i - 1).action;
      CHECK(a.value >= 3 - i + 1);
      if (!s.block_start(i, t)) CHECK(a == r.transcript.at(t - 1, i - 1).action);
    }
  }
  CHECK(team.player(3).block_starts() == 4096);
}

TEST_CASE("memory resets are indistinguishable from fresh construction") {
  const auto cfg = MultiplayerConfig::standard(3, 4, 1728);
  const NestedSchedule s(3, 1728);
  const LossSequence seq = stochastic_losses(default_means(4), 1728, 8);
  for (int i = 1; i <= 3; ++i) {
    MultiPlayer p(cfg, i, RngStream(8, "player", i));
    int resets = 0;
    for (long long t = 1; t <= 1728; ++t) {
      const Arm a = p.act(t);
      if (s.reset(i, t)) {
        ++resets;
        CHECK(p.memory() == AgentMemory::fresh(p.floor()));
      }
      p.observe(t, seq.loss(t, a));
    }
    CHECK(resets == 1728 / s.reset_period(i));
  }
}

TEST_CASE("exploration frequency matches alpha") {
  const auto cfg = MultiplayerConfig::standard(3, 4, 20 * 20 * 20);
  MultiplayerTeam team(cfg, 9);
  auto adv = make_adversary(AdversarySpec{}, 4, cfg.horizon, 9);
  run_game(team, *adv);
  const auto& p = team.player(3);
  const double n = static_cast<double>(p.block_starts());
  const double a = cfg.explore;
  // Exploration is skipped when every admissible arm is active, so the
  // realized count can only fall short of alpha, never exceed it.
  CHECK(p.explorations() <= a * n + 3.0 * std::sqrt(a * (1 - a) * n));
  CHECK(p.explorations() >= 0.5 * a * n);
}

TEST_CASE("m = 3, K = 4: regret within m K^1.5 T^(1-1/2m) and regret per round shrinking with T") {
  std::vector<double> per_round;
  for (long long horizon : {4096LL, 32768LL}) {
    const auto cfg = MultiplayerConfig::standard(3, 4, horizon);
    double total = 0.0;
    for (int s = 0; s < 6; ++s) {
      MultiplayerTeam team(cfg, 60 + s);
      auto adv = make_adversary(AdversarySpec{}, 4, horizon, 60 + s);
      const double regret = run_game(team, *adv).report.regret;
      CHECK(regret <= 3.0 * 8.0 * std::pow(static_cast<double>(horizon), 1.0 - 1.0 / 6.0));
      total += regret;
    }
    per_round.push_back(total / 6.0 / static_cast<double>(horizon));
  }
  CHECK(per_round[1] < per_round[0]);
}
