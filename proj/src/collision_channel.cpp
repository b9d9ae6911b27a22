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

#include "mpmab/collision_channel.hpp"

#include <fmt/format.h>

#include "mpmab/errors.hpp"

namespace mpmab {

// -- BitLink -----------------------------------------------------------------

void BitLink::send(Fixed value, int width) {
  if (width < 1 || width > 127 || (value >> width) != 0) {
    throw ProtocolError(fmt::format("value does not fit its {}-bit frame", width));
  }
  queue_.push_back({true, width, 0, value});
}

void BitLink::receive(int width) {
  if (width < 1 || width > 127) throw ProtocolError("receive width out of range");
  queue_.push_back({false, width, 0, 0});
}

bool BitLink::sending() const {
  if (queue_.empty()) throw ProtocolError("link is idle");
  return queue_.front().outgoing;
}

Arm BitLink::arm() const {
  const Transfer& head = queue_.front();
  if (!head.outgoing) return Arm{1};
  const bool bit = ((head.value >> (head.width - 1 - head.done)) & 1U) != 0;
  return bit ? Arm{1} : Arm{2};
}

std::optional<Fixed> BitLink::advance(bool collision) {
  if (queue_.empty()) throw ProtocolError("advance on an idle link");
  Transfer& head = queue_.front();
  if (head.outgoing) {
    const bool bit = ((head.value >> (head.width - 1 - head.done)) & 1U) != 0;
    if (bit != collision) throw ProtocolError("sent bit and observed collision disagree");
  } else {
    head.value = (head.value << 1) | (collision ? 1U : 0U);
  }
  if (++head.done < head.width) return std::nullopt;
  const Transfer finished = head;
  queue_.pop_front();
  if (finished.outgoing) return std::nullopt;
  return finished.value;
}

TransmissionTrace send_bits_via_collision(const BitString& message, int arms, RngStream rng, Arm receiver_arm) {
  if (arms < 2) throw ConfigError("the collision channel needs two arms");
  TransmissionTrace trace;
  while (true) {
    ++trace.initiation_rounds;
    if (Arm::from_slot(rng.uniform_index(arms)) == receiver_arm) break;
  }
  ++trace.collisions;
  BitLink sender;
  BitLink receiver;
  for (bool b : message) {
    sender.send(b ? 1U : 0U, 1);
    receiver.receive(1);
  }
  while (!sender.idle()) {
    const bool collision = sender.arm() == receiver.arm();
    ++trace.bit_rounds;
    trace.collisions += collision ? 1 : 0;
    sender.advance(collision);
    if (auto got = receiver.advance(collision)) trace.decoded.push_back(*got != 0);
  }
  return trace;
}

// -- Endpoints ---------------------------------------------------------------

namespace {

int header_bits(const PairConfig& cfg) { return bits_for(static_cast<std::uint64_t>(cfg.fixed_period)); }
int action_bits(const PairConfig& cfg) { return bits_for(static_cast<std::uint64_t>(cfg.arms - 1)); }
int slot_bits(const PairConfig& cfg) { return bits_for(static_cast<std::uint64_t>(cfg.arms)); }

bool collided(const Feedback& fb) {
  if (!fb.collision) throw ProtocolError("the collision channel needs collision flags");
  return *fb.collision;
}

}  // namespace

class AliceEndpoint {
 public:
  AliceEndpoint(const PairConfig& cfg, std::uint64_t seed, SharedMode mode)
      : cfg_(cfg),
        player_(cfg, RngStream(seed, "alice"), make_shared_stream(mode, seed, draw_prg_seed(seed))),
        protocol_rng_(seed, "protocol.alice") {
    const Arm first = player_.start();
    if (mode == SharedMode::kPrg) link_.send(draw_prg_seed(seed), 64);
    link_.send(static_cast<Fixed>(first.slot()), action_bits(cfg_));
  }

  const AlicePlayer& player() const { return player_; }

  Arm act(long long t) {
    if (stage_ == Stage::kPlaying && !decided_) {
      decided_ = true;
      if (auto kind = player_.begin_round(v_)) {
        stage_ = Stage::kInitiating;
        kind_ = *kind;
        bob_clock_ = v_;
      }
    }
    switch (stage_) {
      case Stage::kPlaying:
        return player_.action();
      case Stage::kInitiating:
        return Arm::from_slot(protocol_rng_.at(static_cast<std::uint64_t>(t)).uniform_index(cfg_.arms));
      default:
        return link_.arm();
    }
  }

  // Returns the virtual round played, or 0 for a protocol round.
  long long observe(long long t, const Feedback& fb) {
    const bool collision = collided(fb);
    event_.reset();
    switch (stage_) {
      case Stage::kPlaying: {
        if (collision) throw InvariantViolation(fmt::format("organic collision at round {}", t));
        tag_ = CommTag::kNone;
        player_.observe(v_, fb.observed_loss);
        decided_ = false;
        return v_++;
      }
      case Stage::kInitiating:
        tag_ = CommTag::kInit;
        if (collision) {
          open_session();
        } else if (bob_clock_ % cfg_.fixed_period != 0) {
          ++bob_clock_;
        }
        return 0;
      default:
        break;
    }
    tag_ = collision ? CommTag::kBit1 : CommTag::kBit0;
    ++session_bits_;
    if (auto got = link_.advance(collision)) take(*got);
    if (link_.idle()) {
      event_ = CommEvent{t, stage_ == Stage::kStartup ? CommKind::kStartup : kind_, session_bits_};
      session_bits_ = 0;
      stage_ = Stage::kPlaying;
      decided_ = true;
    }
    return 0;
  }

  CommTag tag() const { return tag_; }
  const std::optional<CommEvent>& event() const { return event_; }

 private:
  enum class Stage { kStartup, kPlaying, kInitiating, kSession };

  void open_session() {
    stage_ = Stage::kSession;
    received_ = 0;
    const AliceMessage mine = player_.outgoing(v_);
    const int w = player_.quantizer().width();
    link_.send(static_cast<Fixed>(bob_clock_ - v_), header_bits(cfg_));
    link_.send(mine.earlier, w);
    link_.send(mine.last, w);
    for (int i = 0; i < cfg_.arms - 1; ++i) link_.receive(w);
    link_.receive(slot_bits(cfg_));
    link_.receive(w);
    incoming_ = BobMessage{std::vector<Fixed>(cfg_.arms, 0), -1, 0};
  }

  void take(Fixed value) {
    const int k = cfg_.arms;
    const int index = received_++;
    if (index < k - 1) {
      int slot = index;
      if (slot >= player_.action().slot()) ++slot;
      incoming_.earlier[slot] = value;
    } else if (index == k - 1) {
      incoming_.last_slot = static_cast<int>(value) - 1;
      if (incoming_.last_slot >= k) throw ProtocolError("decoded arm out of range");
    } else {
      incoming_.last = value;
      const Arm next = player_.resolve_sync(v_, kind_, incoming_);
      link_.send(static_cast<Fixed>(next.slot()), action_bits(cfg_));
    }
  }

  PairConfig cfg_;
  AlicePlayer player_;
  RngStream protocol_rng_;
  BitLink link_;
  Stage stage_ = Stage::kStartup;
  long long v_ = 1;
  bool decided_ = true;
  long long bob_clock_ = 0;
  CommKind kind_ = CommKind::kFixed;
  int received_ = 0;
  BobMessage incoming_;
  long long session_bits_ = 0;
  CommTag tag_ = CommTag::kNone;
  std::optional<CommEvent> event_;
};

class BobEndpoint {
 public:
  BobEndpoint(const PairConfig& cfg, std::uint64_t seed, SharedMode mode)
      : cfg_(cfg),
        mode_(mode),
        player_(cfg, RngStream(seed, "bob"),
                mode == SharedMode::kIdeal ? make_shared_stream(mode, seed, 0) : nullptr) {
    if (mode == SharedMode::kPrg) link_.receive(64);
    link_.receive(action_bits(cfg_));
  }

  const BobPlayer& player() const { return player_; }

  Arm act(long long) {
    if (stage_ != Stage::kPlaying) return link_.arm();
    waiting_ = clock_ >= 2 && clock_ % cfg_.fixed_period == 0 && clock_ != synced_;
    return waiting_ ? Arm{1} : player_.act(clock_);
  }

  void observe(long long, const Feedback& fb) {
    const bool collision = collided(fb);
    if (stage_ == Stage::kPlaying) {
      if (collision) {
        stage_ = Stage::kSession;
        received_ = 0;
        link_.receive(header_bits(cfg_));
      } else if (!waiting_) {
        player_.observe(clock_, fb.observed_loss);
        ++clock_;
      }
      return;
    }
    if (auto got = link_.advance(collision)) {
      if (stage_ == Stage::kStartup) {
        take_startup(*got);
      } else {
        take(*got);
      }
    }
    if (link_.idle()) stage_ = Stage::kPlaying;
  }

 private:
  enum class Stage { kStartup, kPlaying, kSession };

  void take_startup(Fixed value) {
    if (mode_ == SharedMode::kPrg && !seeded_) {
      player_.attach_shared(std::make_unique<PrgStream>(static_cast<std::uint64_t>(value)));
      seeded_ = true;
      return;
    }
    player_.learn_start(Arm::from_slot(static_cast<int>(value)));
    clock_ = 1;
  }

  void take(Fixed value) {
    const int w = player_.quantizer().width();
    switch (received_++) {
      case 0:
        v_ = clock_ - static_cast<long long>(value);
        if (v_ < 2) throw ProtocolError("session header points before the first round");
        player_.rollback(v_);
        kind_ = v_ % cfg_.fixed_period == 0 ? CommKind::kFixed : CommKind::kRandom;
        link_.receive(w);
        link_.receive(w);
        break;
      case 1:
        alice_.earlier = value;
        break;
      case 2: {
        alice_.last = value;
        const BobMessage mine = player_.outgoing(v_);
        for (int s = 0; s < cfg_.arms; ++s) {
          if (s != player_.alice_action().slot()) link_.send(mine.earlier[s], w);
        }
        link_.send(static_cast<Fixed>(mine.last_slot + 1), slot_bits(cfg_));
        link_.send(mine.last, w);
        link_.receive(action_bits(cfg_));
        break;
      }
      default:
        player_.resolve_sync(v_, kind_, alice_, Arm::from_slot(static_cast<int>(value)));
        clock_ = v_;
        synced_ = v_;
        break;
    }
  }

  PairConfig cfg_;
  SharedMode mode_;
  BobPlayer player_;
  BitLink link_;
  Stage stage_ = Stage::kStartup;
  bool seeded_ = false;
  bool waiting_ = false;
  long long clock_ = 1;
  long long synced_ = 0;
  long long v_ = 0;
  CommKind kind_ = CommKind::kFixed;
  int received_ = 0;
  AliceMessage alice_;
};

// -- Team --------------------------------------------------------------------

WrappedCollisionTeam::WrappedCollisionTeam(const PairConfig& cfg, std::uint64_t seed, SharedMode mode)
    : cfg_(cfg),
      alice_(std::make_unique<AliceEndpoint>(cfg, seed, mode)),
      bob_(std::make_unique<BobEndpoint>(cfg, seed, mode)) {}

WrappedCollisionTeam::~WrappedCollisionTeam() = default;

const AlicePlayer& WrappedCollisionTeam::alice() const { return alice_->player(); }
const BobPlayer& WrappedCollisionTeam::bob() const { return bob_->player(); }

void WrappedCollisionTeam::act(long long t, std::span<Arm> actions) {
  actions[0] = alice_->act(t);
  actions[1] = bob_->act(t);
}

void WrappedCollisionTeam::observe(long long t, std::span<const Feedback> feedback) {
  virtual_rounds_.push_back(alice_->observe(t, feedback[0]));
  bob_->observe(t, feedback[1]);
  switch (alice_->tag()) {
    case CommTag::kInit:
      ++stats_.initiation_rounds;
      break;
    case CommTag::kBit0:
    case CommTag::kBit1:
      ++stats_.bit_rounds;
      break;
    default:
      break;
  }
  if (const auto& e = alice_->event()) {
    stats_.bits += e->bits;
    if (e->kind == CommKind::kFixed) ++stats_.fixed_sessions;
    if (e->kind == CommKind::kRandom) ++stats_.random_sessions;
  }
}

void WrappedCollisionTeam::annotate(long long, std::span<CommTag> tags, std::vector<CommEvent>& events) {
  tags[0] = tags[1] = alice_->tag();
  if (const auto& e = alice_->event()) events.push_back(*e);
}

}  // namespace mpmab
