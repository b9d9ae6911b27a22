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

#include "mpmab/multiplayer.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>

#include "mpmab/errors.hpp"

namespace mpmab {

long long int_pow(long long base, int exponent) {
  long long r = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && r > (1LL << 62) / base) return -1;
    r *= base;
  }
  return r;
}

long long exact_root(long long horizon, int m) {
  if (m < 1) throw ConfigError("player count must be positive");
  if (horizon < 1) throw ConfigError("horizon must be positive");
  auto n = static_cast<long long>(std::llround(std::pow(static_cast<double>(horizon), 1.0 / m)));
  n = std::max(n, 1LL);
  for (long long c = std::max(1LL, n - 1); c <= n + 1; ++c) {
    if (int_pow(c, m) == horizon) return c;
  }
  long long lo = n;
  while (lo > 1 && int_pow(lo, m) > horizon) --lo;
  long long hi = lo + 1;
  throw ConfigError(fmt::format("T = {} is not a perfect {}-th power; nearest valid horizons are {} and {}", horizon,
                                m, int_pow(lo, m), int_pow(hi, m)));
}

NestedSchedule::NestedSchedule(int players, long long horizon)
    : players_(players), horizon_(horizon), base_(exact_root(horizon, players)) {}

long long NestedSchedule::block_length(int player) const {
  if (player < 1 || player > players_) throw ConfigError("player index out of range");
  return int_pow(base_, players_ - player);
}

long long NestedSchedule::reset_period(int player) const {
  if (player < 1 || player > players_) throw ConfigError("player index out of range");
  return int_pow(base_, players_ - player + 1);
}

namespace {

std::vector<Arm> assign(std::span<const Arm> optimal, std::span<const Arm> played) {
  const int m = static_cast<int>(optimal.size());
  if (played.size() > optimal.size()) throw ValidationError("more played actions than comparator arms");
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (optimal[i] == optimal[j]) throw ValidationError("comparator arms must be distinct");
    }
  }
  for (std::size_t i = 0; i < played.size(); ++i) {
    if (played[i].value < m - static_cast<int>(i)) {
      throw ValidationError(fmt::format("played action A_{} = {} is below {}", i + 1, played[i].value, m - i));
    }
  }
  std::vector<Arm> out;
  std::vector<bool> used(m, false);
  for (std::size_t k = 0; k < played.size(); ++k) {
    const int floor = m - static_cast<int>(k);
    const auto hit = std::find(optimal.begin(), optimal.end(), played[k]);
    if (hit != optimal.end() && !used[hit - optimal.begin()]) {
      used[hit - optimal.begin()] = true;
      out.push_back(*hit);
      continue;
    }
    int pick = -1;
    for (int j = 0; j < m; ++j) {
      if (!used[j] && optimal[j].value >= floor) {
        pick = j;
        break;
      }
    }
    if (pick < 0) throw ValidationError(fmt::format("no comparator arm left for player {}", k + 1));
    used[pick] = true;
    out.push_back(optimal[pick]);
  }
  return out;
}

}  // namespace

std::vector<Arm> assign_in_order(std::span<const Arm> optimal, std::span<const Arm> played) {
  return assign(optimal, played);
}

std::vector<Arm> phi_assign(std::span<const Arm> optimal, std::span<const Arm> played) {
  std::vector<Arm> sorted(optimal.begin(), optimal.end());
  std::sort(sorted.begin(), sorted.end());
  return assign(sorted, played);
}

namespace {

bool audit_case(std::span<const Arm> optimal, std::span<const Arm> played) {
  const int m = static_cast<int>(optimal.size());
  const auto out = phi_assign(optimal, played);
  std::vector<Arm> lhs(out), rhs(optimal.begin(), optimal.end());
  std::sort(lhs.begin(), lhs.end());
  std::sort(rhs.begin(), rhs.end());
  if (lhs != rhs) return false;
  if (phi_assign(rhs, played) != out) return false;
  for (int k = 0; k < m; ++k) {
    if (out[k].value < m - k) return false;
    for (int j = 0; j < k; ++j) {
      if (out[k] == played[j] || out[k] == out[j]) return false;
    }
    const auto prefix = phi_assign(optimal, played.first(k + 1));
    if (!std::equal(prefix.begin(), prefix.end(), out.begin())) return false;
  }
  return true;
}

}  // namespace

PhiAudit audit_phi(int max_arms, int max_players) {
  PhiAudit audit;
  for (int k = 1; k <= max_arms; ++k) {
    for (int m = 1; m <= std::min(k, max_players); ++m) {
      // Every ordered m-tuple of distinct arms.
      std::vector<int> idx(m, 1);
      while (true) {
        bool distinct = true;
        for (int i = 0; i < m && distinct; ++i) {
          for (int j = i + 1; j < m; ++j) distinct = distinct && idx[i] != idx[j];
        }
        if (distinct) {
          std::vector<Arm> optimal;
          for (int v : idx) optimal.push_back(Arm{v});
          std::vector<int> seq(m);
          for (int i = 0; i < m; ++i) seq[i] = m - i;
          while (true) {
            std::vector<Arm> played;
            for (int v : seq) played.push_back(Arm{v});
            ++audit.cases;
            bool ok = false;
            try {
              ok = audit_case(optimal, played);
            } catch (const ValidationError&) {
              ok = false;
            }
            if (!ok && audit.failures++ == 0) {
              audit.first_failure = fmt::format("K={} a=({}) A=({})", k, fmt::join(idx, ","), fmt::join(seq, ","));
            }
            int pos = m - 1;
            while (pos >= 0 && seq[pos] == k) {
              seq[pos] = m - pos;
              --pos;
            }
            if (pos < 0) break;
            ++seq[pos];
          }
        }
        int pos = m - 1;
        while (pos >= 0 && idx[pos] == k) idx[pos--] = 1;
        if (pos < 0) break;
        ++idx[pos];
      }
    }
  }
  return audit;
}

MultiplayerConfig MultiplayerConfig::standard(int players, int arms, long long horizon) {
  MultiplayerConfig c;
  c.players = players;
  c.arms = arms;
  c.horizon = horizon;
  c.explore = std::sqrt(static_cast<double>(arms)) * std::pow(static_cast<double>(horizon), -0.5 / players);
  return c;
}

void MultiplayerConfig::validate() const {
  if (players < 1 || players > arms) throw ConfigError(fmt::format("need 1 <= m <= K, got m = {}, K = {}", players, arms));
  exact_root(horizon, players);
  const long long floor_t = int_pow(arms, players);
  if (floor_t < 0 || horizon < floor_t) {
    throw ConfigError(fmt::format("the m-player strategy needs T >= K^m = {}, got T = {}", floor_t, horizon));
  }
  if (!(explore >= 0.0 && explore <= 1.0)) throw ConfigError(fmt::format("exploration rate {} outside [0, 1]", explore));
}

AgentMemory AgentMemory::fresh(Arm floor) { return AgentMemory{{floor}, SwapRegretLearner({floor})}; }

MultiPlayer::MultiPlayer(const MultiplayerConfig& cfg, int index, RngStream rng)
    : cfg_(cfg),
      schedule_(cfg.players, cfg.horizon),
      index_(index),
      rng_(rng),
      memory_(AgentMemory::fresh(Arm{cfg.players - index + 1})) {
  cfg_.validate();
}

Arm MultiPlayer::act(long long t) {
  if (!schedule_.block_start(index_, t)) return action_;
  if (schedule_.reset(index_, t)) memory_ = AgentMemory::fresh(floor());
  ++block_starts_;
  block_loss_ = 0.0;
  std::vector<Arm> outside;
  for (int a = floor().value; a <= cfg_.arms; ++a) {
    if (std::find(memory_.active.begin(), memory_.active.end(), Arm{a}) == memory_.active.end()) outside.push_back(Arm{a});
  }
  RngStream r = rng_.at(static_cast<std::uint64_t>(t));
  exploring_ = !outside.empty() && r.uniform() < cfg_.explore;
  if (exploring_) {
    ++explorations_;
    action_ = outside[r.uniform_index(static_cast<int>(outside.size()))];
  } else {
    action_ = memory_.learner.sample(r);
  }
  return action_;
}

void MultiPlayer::observe(long long t, double loss) {
  block_loss_ += loss;
  if (!schedule_.block_end(index_, t)) return;
  const double len = static_cast<double>(schedule_.block_length(index_));
  if (exploring_) {
    if (block_loss_ < len) {
      auto& act = memory_.active;
      act.insert(std::upper_bound(act.begin(), act.end(), action_), action_);
      memory_.learner = SwapRegretLearner(act);
    }
  } else {
    memory_.learner.update(action_, block_loss_ / len);
  }
}

MultiplayerTeam::MultiplayerTeam(const MultiplayerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  for (int i = 1; i <= cfg.players; ++i) agents_.emplace_back(cfg, i, RngStream(seed, "player", i));
}

void MultiplayerTeam::act(long long t, std::span<Arm> actions) {
  for (int i = 0; i < cfg_.players; ++i) actions[i] = agents_[i].act(t);
}

void MultiplayerTeam::observe(long long t, std::span<const Feedback> feedback) {
  for (int i = 0; i < cfg_.players; ++i) agents_[i].observe(t, feedback[i].observed_loss);
}

UniformRandomTeam::UniformRandomTeam(int players, int arms, std::uint64_t seed) : players_(players), arms_(arms) {
  if (players < 1 || arms < 1) throw ConfigError("need at least one player and one arm");
  for (int i = 1; i <= players; ++i) rngs_.emplace_back(seed, "player", i);
}

std::vector<Distribution> UniformRandomTeam::declared_distributions(long long) {
  return std::vector<Distribution>(players_, Distribution(arms_, 1.0 / arms_));
}

void UniformRandomTeam::act(long long t, std::span<Arm> actions) {
  for (int i = 0; i < players_; ++i) {
    RngStream r = rngs_[i].at(static_cast<std::uint64_t>(t));
    actions[i] = Arm::from_slot(r.uniform_index(arms_));
  }
}

}  // namespace mpmab
