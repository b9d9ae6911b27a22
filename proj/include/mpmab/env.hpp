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

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mpmab {

// Arms are numbered 1..K throughout the library. Serialized files (loss
// CSV columns, transcript action column) are 0-based.
struct Arm {
  int value = 1;

  constexpr int slot() const { return value - 1; }
  static constexpr Arm from_slot(int s) { return Arm{s + 1}; }
  friend constexpr auto operator<=>(Arm, Arm) = default;
};

// Per-arm probabilities indexed by slot (arm - 1); zero off the support.
using Distribution = std::vector<double>;

class LossSequence {
 public:
  LossSequence() = default;
  LossSequence(long long horizon, int arms);
  LossSequence(long long horizon, int arms, std::vector<double> table);

  long long horizon() const { return horizon_; }
  int arms() const { return arms_; }

  // t is 1-based.
  double loss(long long t, Arm a) const;
  std::span<const double> row(long long t) const;
  void set_row(long long t, std::span<const double> values);

  std::vector<double> cumulative() const;
  const std::vector<double>& table() const { return table_; }

  friend bool operator==(const LossSequence&, const LossSequence&) = default;

 private:
  long long horizon_ = 0;
  int arms_ = 0;
  std::vector<double> table_;
};

LossSequence read_loss_csv(std::istream& in);
void write_loss_csv(std::ostream& out, const LossSequence& seq);
LossSequence load_loss_csv(const std::string& path);
void save_loss_csv(const std::string& path, const LossSequence& seq);

enum class FeedbackModel { kCollisionInfo, kNoInfo, kCommunicationOracle };
std::string_view to_string(FeedbackModel model);

struct Feedback {
  double observed_loss = 0.0;
  std::optional<bool> collision;

  friend bool operator==(const Feedback&, const Feedback&) = default;
};

struct RoundOutcome {
  std::vector<double> effective;
  std::vector<bool> collided;
};

// Player i suffers max(l(a_i), 1{some other player chose a_i}).
RoundOutcome effective_loss(std::span<const double> losses, std::span<const Arm> actions);

double best_fixed_subset_loss(const LossSequence& seq, int m);
double best_fixed_subset_loss(std::span<const double> cumulative, int m);

enum class CommTag : std::uint8_t { kNone, kSync, kInit, kBit0, kBit1 };
std::string_view to_string(CommTag tag);
// Rounds spent by the collision-channel protocol (not game rounds).
bool is_protocol_tag(CommTag tag);

enum class CommKind : std::uint8_t { kStartup, kFixed, kRandom };
std::string_view to_string(CommKind kind);

struct CommEvent {
  long long t = 0;
  CommKind kind = CommKind::kFixed;
  long long bits = 0;
};

struct PlayerRecord {
  Arm action;
  double effective_loss = 0.0;
  bool collision = false;
  CommTag tag = CommTag::kNone;
};

class GameTranscript {
 public:
  GameTranscript(FeedbackModel model, int players, long long horizon);

  FeedbackModel model() const { return model_; }
  int players() const { return players_; }
  long long horizon() const { return horizon_; }
  long long rounds() const;

  void append_round(long long t, std::span<const PlayerRecord> records);
  void add_event(const CommEvent& event) { events_.push_back(event); }

  // player is 0-based.
  const PlayerRecord& at(long long t, int player) const;
  std::span<const PlayerRecord> round(long long t) const;
  const std::vector<CommEvent>& events() const { return events_; }

 private:
  FeedbackModel model_;
  int players_;
  long long horizon_;
  std::vector<PlayerRecord> records_;
  std::vector<CommEvent> events_;
};

void write_transcript_csv(std::ostream& out, const GameTranscript& transcript);

struct RegretReport {
  double player_loss = 0.0;
  double best_subset_loss = 0.0;
  double regret = 0.0;
  long long collision_rounds = 0;
  long long organic_collision_rounds = 0;  // collisions outside protocol rounds
  long long protocol_rounds = 0;
  long long comm_rounds = 0;
  long long bits = 0;
};

// Needs a transcript covering the whole horizon of `seq`.
RegretReport compute_regret(const GameTranscript& transcript, const LossSequence& seq);

// A joint strategy: m players, each holding private state. Implementations
// keep per-player objects separate and route information between them only
// through game feedback or an explicitly modeled channel.
class Team {
 public:
  virtual ~Team() = default;

  virtual int players() const = 0;
  virtual int arms() const = 0;
  virtual FeedbackModel model() const = 0;

  // White-box hook for adaptive adversaries: the law of each player's
  // action in round t, given everything before it.
  virtual bool declares_distributions() const { return false; }
  virtual std::vector<Distribution> declared_distributions(long long t);

  virtual void act(long long t, std::span<Arm> actions) = 0;
  virtual void observe(long long t, std::span<const Feedback> feedback) = 0;

  // Communication annotations for the round just observed.
  virtual void annotate(long long t, std::span<CommTag> tags, std::vector<CommEvent>& events);
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual int arms() const = 0;
  virtual long long horizon() const = 0;
  virtual bool adaptive() const = 0;
  // `declared` is null for oblivious adversaries.
  virtual void losses(long long t, const std::vector<Distribution>* declared,
                      std::span<double> out) = 0;
};

class ObliviousAdversary final : public Adversary {
 public:
  explicit ObliviousAdversary(LossSequence table) : table_(std::move(table)) {}
  int arms() const override { return table_.arms(); }
  long long horizon() const override { return table_.horizon(); }
  bool adaptive() const override { return false; }
  void losses(long long t, const std::vector<Distribution>* declared,
              std::span<double> out) override;
  const LossSequence& table() const { return table_; }

 private:
  LossSequence table_;
};

class Game {
 public:
  Game(Team& team, Adversary& adversary);

  void play_round(long long t);
  void play_all();

  const GameTranscript& transcript() const { return transcript_; }
  GameTranscript& transcript() { return transcript_; }
  const LossSequence& realized() const { return realized_; }

 private:
  Team& team_;
  Adversary& adversary_;
  GameTranscript transcript_;
  LossSequence realized_;
  std::vector<double> row_;
  std::vector<Arm> actions_;
  std::vector<Feedback> feedback_;
  std::vector<PlayerRecord> records_;
  std::vector<CommTag> tags_;
  std::vector<CommEvent> events_;
};

struct GameResult {
  GameTranscript transcript;
  LossSequence losses;
  RegretReport report;
};

GameResult run_game(Team& team, Adversary& adversary);

}  // namespace mpmab
