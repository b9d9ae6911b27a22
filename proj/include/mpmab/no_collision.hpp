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
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/learners.hpp"
#include "mpmab/random.hpp"

namespace mpmab {

// Contiguous blocks covering rounds 1..T; the first T mod R blocks are one
// round longer than the rest.
class BlockSchedule {
 public:
  BlockSchedule(long long horizon, long long blocks);

  long long horizon() const { return horizon_; }
  long long blocks() const { return static_cast<long long>(starts_.size()) - 1; }
  long long start(long long r) const { return starts_[r]; }
  long long length(long long r) const { return starts_[r + 1] - starts_[r]; }
  // 0-based block index of round t.
  long long block_of(long long t) const;
  bool is_start(long long t) const;
  bool is_end(long long t) const;

 private:
  long long horizon_;
  std::vector<long long> starts_;
};

struct NoCollisionConfig {
  int arms = 3;
  long long horizon = 9;
  long long blocks = 3;
  double explore = 1.0;

  // R = floor(sqrt T), exploration sqrt(K R / T).
  static NoCollisionConfig standard(int arms, long long horizon);
  void validate() const;
};

// Alice: one arm of {2..K} per block, chosen by a swap-regret learner that
// sees the block's average loss.
class NoCollisionAlice {
 public:
  NoCollisionAlice(const NoCollisionConfig& cfg, RngStream rng);

  Arm act(long long t);
  void observe(long long t, double loss);
  Distribution declared(long long t) const;
  const SwapRegretLearner& learner() const { return learner_; }
  Arm block_action() const { return action_; }

 private:
  NoCollisionConfig cfg_;
  BlockSchedule schedule_;
  RngStream rng_;
  SwapRegretLearner learner_;
  Arm action_{2};
  double block_loss_ = 0.0;
};

// Bob: anytime Exp3 on an active set that starts each block as {1} and
// grows with explored arms that returned a loss below 1.
class NoCollisionBob {
 public:
  NoCollisionBob(const NoCollisionConfig& cfg, RngStream rng);

  Arm act(long long t);
  void observe(long long t, double loss);
  Distribution declared(long long t) const;
  const std::vector<Arm>& active() const { return active_; }
  bool exploring() const { return exploring_; }
  long long explorations() const { return explorations_; }
  long long additions() const { return additions_; }

 private:
  std::vector<Arm> complement() const;
  void reset_block();

  NoCollisionConfig cfg_;
  BlockSchedule schedule_;
  RngStream rng_;
  std::vector<Arm> active_;
  Exp3 learner_;
  Arm action_{1};
  bool exploring_ = false;
  long long explorations_ = 0;
  long long additions_ = 0;
};

class NoCollisionTeam final : public Team {
 public:
  NoCollisionTeam(const NoCollisionConfig& cfg, std::uint64_t seed);

  int players() const override { return 2; }
  int arms() const override { return cfg_.arms; }
  FeedbackModel model() const override { return FeedbackModel::kNoInfo; }
  bool declares_distributions() const override { return true; }
  std::vector<Distribution> declared_distributions(long long t) override;
  void act(long long t, std::span<Arm> actions) override;
  void observe(long long t, std::span<const Feedback> feedback) override;

  const NoCollisionAlice& alice() const { return alice_; }
  const NoCollisionBob& bob() const { return bob_; }

 private:
  NoCollisionConfig cfg_;
  NoCollisionAlice alice_;
  NoCollisionBob bob_;
};

// Bob's best reply to a fixed Alice sequence: minimizes the pair's total
// effective loss, a collision costing both players 1.
struct BestResponse {
  double pair_loss = 0.0;
  std::vector<Arm> actions;
};
BestResponse best_response(const LossSequence& losses, std::span<const Arm> alice);

// The two maps used to split a pair comparator (a, b), a != 1, into two
// single-player swap maps. Indexed by slot, values are arms.
struct SwapPair {
  std::vector<Arm> f;
  std::vector<Arm> g;
};
SwapPair pair_swap_maps(int arms, Arm a, Arm b);

}  // namespace mpmab
