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

#include <span>
#include <string>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/learners.hpp"
#include "mpmab/random.hpp"

namespace mpmab {

// n with n^m = T; throws ConfigError naming the nearest valid horizons.
long long exact_root(long long horizon, int m);
long long int_pow(long long base, int exponent);

// Player i (1-based) holds its action for blocks of n^(m-i) rounds and
// clears its memory every n^(m-i+1) rounds, where T = n^m.
class NestedSchedule {
 public:
  NestedSchedule(int players, long long horizon);

  int players() const { return players_; }
  long long horizon() const { return horizon_; }
  long long base() const { return base_; }
  long long block_length(int player) const;
  long long reset_period(int player) const;
  bool block_start(int player, long long t) const { return (t - 1) % block_length(player) == 0; }
  bool block_end(int player, long long t) const { return t % block_length(player) == 0; }
  bool reset(int player, long long t) const { return (t - 1) % reset_period(player) == 0; }

 private:
  int players_;
  long long horizon_;
  long long base_;
};

// Assignment of the comparator arms a_1..a_m to the played prefix A_1..A_k.
// Keeps A_k when it is an unused comparator arm, otherwise takes the first
// unused a_j with a_j >= m - k + 1. `assign_in_order` scans the comparator
// in the order given; `phi_assign` sorts it first so the result depends only
// on the set. Both throw ValidationError on malformed input.
std::vector<Arm> assign_in_order(std::span<const Arm> optimal, std::span<const Arm> played);
std::vector<Arm> phi_assign(std::span<const Arm> optimal, std::span<const Arm> played);

// Exhaustive audit of phi_assign over every K <= max_arms, m <= min(K,
// max_players), every ordered comparator of distinct arms and every played
// sequence with A_i >= m - i + 1. A case fails unless the output is a
// permutation of the comparator, Ã_k >= m - k + 1, Ã_k avoids every earlier
// A and Ã, each Ã_k depends only on the prefix A_1..A_k, and reordering the
// comparator leaves the output unchanged.
struct PhiAudit {
  long long cases = 0;
  long long failures = 0;
  std::string first_failure;
};
PhiAudit audit_phi(int max_arms, int max_players);

struct MultiplayerConfig {
  int players = 2;
  int arms = 3;
  long long horizon = 9;
  double explore = 1.0;

  // Exploration sqrt(K) T^(-1/(2m)).
  static MultiplayerConfig standard(int players, int arms, long long horizon);
  void validate() const;
};

// Everything a player forgets at a reset.
struct AgentMemory {
  std::vector<Arm> active;
  SwapRegretLearner learner;

  static AgentMemory fresh(Arm floor);
  friend bool operator==(const AgentMemory&, const AgentMemory&) = default;
};

class MultiPlayer {
 public:
  MultiPlayer(const MultiplayerConfig& cfg, int index, RngStream rng);

  int index() const { return index_; }
  Arm floor() const { return Arm{cfg_.players - index_ + 1}; }
  Arm act(long long t);
  void observe(long long t, double loss);
  const AgentMemory& memory() const { return memory_; }
  bool exploring() const { return exploring_; }
  long long explorations() const { return explorations_; }
  long long block_starts() const { return block_starts_; }

 private:
  MultiplayerConfig cfg_;
  NestedSchedule schedule_;
  int index_;
  RngStream rng_;
  AgentMemory memory_;
  Arm action_{1};
  bool exploring_ = false;
  double block_loss_ = 0.0;
  long long explorations_ = 0;
  long long block_starts_ = 0;
};

class MultiplayerTeam final : public Team {
 public:
  MultiplayerTeam(const MultiplayerConfig& cfg, std::uint64_t seed);

  int players() const override { return cfg_.players; }
  int arms() const override { return cfg_.arms; }
  FeedbackModel model() const override { return FeedbackModel::kNoInfo; }
  void act(long long t, std::span<Arm> actions) override;
  void observe(long long t, std::span<const Feedback> feedback) override;

  const MultiPlayer& player(int i) const { return agents_[i - 1]; }

 private:
  MultiplayerConfig cfg_;
  std::vector<MultiPlayer> agents_;
};

// Baseline: every player uniform over all arms, every round.
class UniformRandomTeam final : public Team {
 public:
  UniformRandomTeam(int players, int arms, std::uint64_t seed);

  int players() const override { return players_; }
  int arms() const override { return arms_; }
  FeedbackModel model() const override { return FeedbackModel::kNoInfo; }
  bool declares_distributions() const override { return true; }
  std::vector<Distribution> declared_distributions(long long t) override;
  void act(long long t, std::span<Arm> actions) override;
  void observe(long long, std::span<const Feedback>) override {}

 private:
  int players_;
  int arms_;
  std::vector<RngStream> rngs_;
};

}  // namespace mpmab
