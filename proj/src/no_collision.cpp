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

#include "mpmab/no_collision.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "mpmab/errors.hpp"

namespace mpmab {

namespace {

constexpr std::uint32_t kPickLane = 0;
constexpr std::uint32_t kExploreLane = 1;

std::vector<Arm> arm_range(int first, int last) {
  std::vector<Arm> out;
  for (int a = first; a <= last; ++a) out.push_back(Arm{a});
  return out;
}

}  // namespace

BlockSchedule::BlockSchedule(long long horizon, long long blocks) : horizon_(horizon) {
  if (horizon < 1 || blocks < 1 || blocks > horizon) {
    throw ConfigError(fmt::format("cannot split T = {} into {} blocks", horizon, blocks));
  }
  const long long base = horizon / blocks;
  const long long extra = horizon % blocks;
  starts_.reserve(blocks + 1);
  long long s = 1;
  for (long long r = 0; r < blocks; ++r) {
    starts_.push_back(s);
    s += base + (r < extra ? 1 : 0);
  }
  starts_.push_back(horizon + 1);
}

long long BlockSchedule::block_of(long long t) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
  return (it - starts_.begin()) - 1;
}

bool BlockSchedule::is_start(long long t) const { return std::binary_search(starts_.begin(), starts_.end(), t); }
bool BlockSchedule::is_end(long long t) const { return is_start(t + 1); }

NoCollisionConfig NoCollisionConfig::standard(int arms, long long horizon) {
  NoCollisionConfig c;
  c.arms = arms;
  c.horizon = horizon;
  c.blocks = std::max(1LL, static_cast<long long>(std::floor(std::sqrt(static_cast<double>(horizon)))));
  while (c.blocks * c.blocks > horizon) --c.blocks;
  while ((c.blocks + 1) * (c.blocks + 1) <= horizon) ++c.blocks;
  c.explore = std::sqrt(static_cast<double>(arms) * static_cast<double>(c.blocks) / static_cast<double>(horizon));
  return c;
}

void NoCollisionConfig::validate() const {
  if (arms < 2) throw ConfigError("the no-collision strategy needs K >= 2");
  if (horizon < static_cast<long long>(arms) * arms) {
    throw ConfigError(fmt::format("the no-collision strategy needs T >= K^2 = {}, got T = {}", arms * arms, horizon));
  }
  if (blocks < 1 || blocks > horizon) throw ConfigError("block count must lie in [1, T]");
  if (!(explore >= 0.0 && explore <= 1.0)) throw ConfigError(fmt::format("exploration rate {} outside [0, 1]", explore));
}

// -- Alice -------------------------------------------------------------------

NoCollisionAlice::NoCollisionAlice(const NoCollisionConfig& cfg, RngStream rng)
    : cfg_(cfg), schedule_(cfg.horizon, cfg.blocks), rng_(rng),
      learner_(arm_range(2, cfg.arms), SwapRegretLearner::tuned_rate(cfg.arms - 1, cfg.blocks)) {
  cfg_.validate();
}

Arm NoCollisionAlice::act(long long t) {
  if (schedule_.is_start(t)) {
    RngStream r = rng_.at(static_cast<std::uint64_t>(t), kPickLane);
    action_ = learner_.sample(r);
    block_loss_ = 0.0;
  }
  return action_;
}

void NoCollisionAlice::observe(long long t, double loss) {
  block_loss_ += loss;
  if (schedule_.is_end(t)) {
    const long long len = schedule_.length(schedule_.block_of(t));
    learner_.update(action_, block_loss_ / static_cast<double>(len));
  }
}

Distribution NoCollisionAlice::declared(long long t) const {
  if (schedule_.is_start(t)) return learner_.distribution(cfg_.arms);
  Distribution d(cfg_.arms, 0.0);
  d[action_.slot()] = 1.0;
  return d;
}

// -- Bob ---------------------------------------------------------------------

NoCollisionBob::NoCollisionBob(const NoCollisionConfig& cfg, RngStream rng)
    : cfg_(cfg), schedule_(cfg.horizon, cfg.blocks), rng_(rng), learner_(Exp3::anytime({Arm{1}})) {
  cfg_.validate();
  reset_block();
}

void NoCollisionBob::reset_block() {
  active_ = {Arm{1}};
  learner_ = Exp3::anytime(active_);
}

std::vector<Arm> NoCollisionBob::complement() const {
  std::vector<Arm> out;
  for (int a = 1; a <= cfg_.arms; ++a) {
    if (std::find(active_.begin(), active_.end(), Arm{a}) == active_.end()) out.push_back(Arm{a});
  }
  return out;
}

Arm NoCollisionBob::act(long long t) {
  const auto outside = complement();
  RngStream r = rng_.at(static_cast<std::uint64_t>(t), kExploreLane);
  exploring_ = !outside.empty() && r.uniform() < cfg_.explore;
  if (exploring_) {
    ++explorations_;
    action_ = outside[r.uniform_index(static_cast<int>(outside.size()))];
  } else {
    RngStream pick = rng_.at(static_cast<std::uint64_t>(t), kPickLane);
    action_ = learner_.sample(pick);
  }
  return action_;
}

void NoCollisionBob::observe(long long t, double loss) {
  if (exploring_) {
    if (loss < 1.0) {
      active_.insert(std::upper_bound(active_.begin(), active_.end(), action_), action_);
      learner_ = Exp3::anytime(active_);
      ++additions_;
    }
  } else {
    learner_.update(action_, loss);
  }
  if (schedule_.is_end(t)) reset_block();
}

Distribution NoCollisionBob::declared(long long) const {
  Distribution d = learner_.distribution(cfg_.arms);
  const auto outside = complement();
  if (outside.empty()) return d;
  for (double& x : d) x *= 1.0 - cfg_.explore;
  for (Arm a : outside) d[a.slot()] += cfg_.explore / static_cast<double>(outside.size());
  return d;
}

// -- Team --------------------------------------------------------------------

NoCollisionTeam::NoCollisionTeam(const NoCollisionConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), alice_(cfg, RngStream(seed, "alice")), bob_(cfg, RngStream(seed, "bob")) {}

std::vector<Distribution> NoCollisionTeam::declared_distributions(long long t) {
  return {alice_.declared(t), bob_.declared(t)};
}

void NoCollisionTeam::act(long long t, std::span<Arm> actions) {
  actions[0] = alice_.act(t);
  actions[1] = bob_.act(t);
}

void NoCollisionTeam::observe(long long t, std::span<const Feedback> feedback) {
  alice_.observe(t, feedback[0].observed_loss);
  bob_.observe(t, feedback[1].observed_loss);
}

// -- Offline tools -----------------------------------------------------------

BestResponse best_response(const LossSequence& losses, std::span<const Arm> alice) {
  const long long horizon = losses.horizon();
  if (static_cast<long long>(alice.size()) != horizon) throw ConfigError("one Alice action per round");
  const int k = losses.arms();
  // value[t] = optimal pair loss over rounds t..T; choice[t] attains it.
  std::vector<double> value(horizon + 2, 0.0);
  std::vector<Arm> choice(horizon + 1);
  for (long long t = horizon; t >= 1; --t) {
    const Arm a = alice[t - 1];
    double best = 0.0;
    for (int b = 1; b <= k; ++b) {
      const double cost = (Arm{b} == a) ? 2.0 : losses.loss(t, a) + losses.loss(t, Arm{b});
      if (b == 1 || cost < best) {
        best = cost;
        choice[t] = Arm{b};
      }
    }
    value[t] = best + value[t + 1];
  }
  BestResponse out;
  out.pair_loss = value[1];
  out.actions.assign(choice.begin() + 1, choice.end());
  return out;
}

SwapPair pair_swap_maps(int arms, Arm a, Arm b) {
  if (a == b || a == Arm{1}) throw ConfigError("pair maps need a != b and a != 1");
  SwapPair out{std::vector<Arm>(arms, a), std::vector<Arm>(arms, b)};
  out.f[b.slot()] = b;
  out.g[b.slot()] = a;
  return out;
}

}  // namespace mpmab
