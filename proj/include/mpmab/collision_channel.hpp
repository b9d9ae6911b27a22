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
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "mpmab/collision_pair.hpp"

namespace mpmab {

// One endpoint's view of the collision channel: a queue of fixed-width
// transfers, sent or received one bit per round. The sender plays arm 1 for
// a 1 and arm 2 for a 0 while the receiver sits on arm 1, so a collision
// means 1.
class BitLink {
 public:
  void send(Fixed value, int width);
  void receive(int width);
  bool idle() const { return queue_.empty(); }
  bool sending() const;
  Arm arm() const;
  // Consumes one round of the head transfer. Returns the value of a receive
  // that completed with this bit.
  std::optional<Fixed> advance(bool collision);

 private:
  struct Transfer {
    bool outgoing = false;
    int width = 0;
    int done = 0;
    Fixed value = 0;
  };
  std::deque<Transfer> queue_;
};

struct TransmissionTrace {
  long long initiation_rounds = 0;
  long long bit_rounds = 0;
  long long collisions = 0;
  BitString decoded;
};

// Stand-alone transmission: the sender draws uniform arms from `rng` until
// it collides with the receiver (stationary on `receiver_arm`), then sends
// `message` bit by bit.
TransmissionTrace send_bits_via_collision(const BitString& message, int arms, RngStream rng,
                                          Arm receiver_arm = Arm{1});

struct WrappedStats {
  long long fixed_sessions = 0;
  long long random_sessions = 0;
  long long initiation_rounds = 0;
  long long bit_rounds = 0;
  long long bits = 0;
};

class AliceEndpoint;
class BobEndpoint;

// The two-player strategy with every oracle message carried over the
// collision channel. Alice opens each synchronization by playing uniform
// arms until she collides with Bob; Bob, who cannot tell when Alice stopped
// playing normally, keeps playing speculative rounds (or waits on arm 1 at a
// fixed round) and rolls back once the header tells him where the session
// began.
class WrappedCollisionTeam final : public Team {
 public:
  WrappedCollisionTeam(const PairConfig& cfg, std::uint64_t seed, SharedMode mode = SharedMode::kPrg);
  ~WrappedCollisionTeam() override;

  int players() const override { return 2; }
  int arms() const override { return cfg_.arms; }
  FeedbackModel model() const override { return FeedbackModel::kCollisionInfo; }
  void act(long long t, std::span<Arm> actions) override;
  void observe(long long t, std::span<const Feedback> feedback) override;
  void annotate(long long t, std::span<CommTag> tags, std::vector<CommEvent>& events) override;

  const WrappedStats& stats() const { return stats_; }
  // Virtual round played at each real round so far (0 for protocol rounds).
  const std::vector<long long>& virtual_rounds() const { return virtual_rounds_; }
  const AlicePlayer& alice() const;
  const BobPlayer& bob() const;

 private:
  PairConfig cfg_;
  std::unique_ptr<AliceEndpoint> alice_;
  std::unique_ptr<BobEndpoint> bob_;
  WrappedStats stats_;
  std::vector<long long> virtual_rounds_;
};

}  // namespace mpmab
