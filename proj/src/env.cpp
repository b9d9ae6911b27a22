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

#include "mpmab/env.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mpmab/errors.hpp"

namespace mpmab {

// -- LossSequence -----------------------------------------------------------

LossSequence::LossSequence(long long horizon, int arms)
    : LossSequence(horizon, arms, std::vector<double>(static_cast<std::size_t>(horizon) * arms, 0.0)) {}

LossSequence::LossSequence(long long horizon, int arms, std::vector<double> table)
    : horizon_(horizon), arms_(arms), table_(std::move(table)) {
  if (horizon < 1 || arms < 1) throw ConfigError("loss sequence needs T >= 1 and K >= 1");
  if (table_.size() != static_cast<std::size_t>(horizon) * arms) {
    throw ConfigError(fmt::format("loss table has {} entries, expected T*K = {}", table_.size(),
                                  horizon * arms));
  }
  for (double v : table_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(fmt::format("loss {} outside [0,1]", v));
  }
}

double LossSequence::loss(long long t, Arm a) const {
  if (a.value < 1 || a.value > arms_) throw ConfigError(fmt::format("arm {} outside [1,{}]", a.value, arms_));
  return row(t)[a.slot()];
}

std::span<const double> LossSequence::row(long long t) const {
  if (t < 1 || t > horizon_) throw ConfigError(fmt::format("round {} outside [1,{}]", t, horizon_));
  return {table_.data() + (t - 1) * arms_, static_cast<std::size_t>(arms_)};
}

void LossSequence::set_row(long long t, std::span<const double> values) {
  if (t < 1 || t > horizon_) throw ConfigError(fmt::format("round {} outside [1,{}]", t, horizon_));
  if (values.size() != static_cast<std::size_t>(arms_)) throw ConfigError("loss row has wrong length");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(fmt::format("loss {} outside [0,1]", v));
  }
  std::copy(values.begin(), values.end(), table_.begin() + (t - 1) * arms_);
}

std::vector<double> LossSequence::cumulative() const {
  std::vector<double> sums(arms_, 0.0);
  for (long long t = 0; t < horizon_; ++t) {
    for (int k = 0; k < arms_; ++k) sums[k] += table_[t * arms_ + k];
  }
  return sums;
}

LossSequence read_loss_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("loss CSV is empty");
  long long horizon = 0;
  int arms = 0;
  if (std::sscanf(line.c_str(), "# K=%d T=%lld", &arms, &horizon) != 2) {
    throw ConfigError("loss CSV must start with '# K=<k> T=<t>'");
  }
  if (arms < 1 || horizon < 1) throw ConfigError("loss CSV header has nonpositive K or T");
  std::vector<double> table;
  table.reserve(static_cast<std::size_t>(horizon) * arms);
  long long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        table.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("loss CSV row {}: '{}' is not a number", rows + 1, cell));
      }
      ++cols;
    }
    if (cols != arms) throw ConfigError(fmt::format("loss CSV row {} has {} columns, expected {}", rows + 1, cols, arms));
    ++rows;
  }
  if (rows != horizon) throw ConfigError(fmt::format("loss CSV has {} rows, header says T={}", rows, horizon));
  return LossSequence(horizon, arms, std::move(table));
}

void write_loss_csv(std::ostream& out, const LossSequence& seq) {
  out << fmt::format("# K={} T={}\n", seq.arms(), seq.horizon());
  for (long long t = 1; t <= seq.horizon(); ++t) {
    out << fmt::format("{}\n", fmt::join(seq.row(t), ","));
  }
}

LossSequence load_loss_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open loss file '{}'", path));
  return read_loss_csv(in);
}

void save_loss_csv(const std::string& path, const LossSequence& seq) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write loss file '{}'", path));
  write_loss_csv(out, seq);
}

std::string_view to_string(FeedbackModel model) {
  switch (model) {
    case FeedbackModel::kCollisionInfo: return "collision_info";
    case FeedbackModel::kNoInfo: return "no_info";
    case FeedbackModel::kCommunicationOracle: return "communication_oracle";
  }
  return "?";
}

// -- Round semantics --------------------------------------------------------

RoundOutcome effective_loss(std::span<const double> losses, std::span<const Arm> actions) {
  const int arms = static_cast<int>(losses.size());
  RoundOutcome out;
  out.effective.resize(actions.size());
  out.collided.resize(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Arm a = actions[i];
    if (a.value < 1 || a.value > arms) {
      throw ConfigError(fmt::format("action {} does not index a loss vector of length {}", a.value, arms));
    }
    bool shared = false;
    for (std::size_t j = 0; j < actions.size(); ++j) {
      if (j != i && actions[j] == a) shared = true;
    }
    out.collided[i] = shared;
    out.effective[i] = shared ? 1.0 : losses[a.slot()];
  }
  return out;
}

double best_fixed_subset_loss(std::span<const double> cumulative, int m) {
  if (m < 0 || m > static_cast<int>(cumulative.size())) {
    throw ConfigError(fmt::format("cannot pick {} distinct arms out of {}", m, cumulative.size()));
  }
  std::vector<double> sorted(cumulative.begin(), cumulative.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += sorted[i];
  return total;
}

double best_fixed_subset_loss(const LossSequence& seq, int m) {
  return best_fixed_subset_loss(seq.cumulative(), m);
}

std::string_view to_string(CommTag tag) {
  switch (tag) {
    case CommTag::kNone: return "none";
    case CommTag::kSync: return "sync";
    case CommTag::kInit: return "init";
    case CommTag::kBit0: return "bit0";
    case CommTag::kBit1: return "bit1";
  }
  return "?";
}

bool is_protocol_tag(CommTag tag) {
  return tag == CommTag::kInit || tag == CommTag::kBit0 || tag == CommTag::kBit1;
}

std::string_view to_string(CommKind kind) {
  switch (kind) {
    case CommKind::kStartup: return "startup";
    case CommKind::kFixed: return "fixed";
    case CommKind::kRandom: return "random";
  }
  return "?";
}

// -- Transcript -------------------------------------------------------------

GameTranscript::GameTranscript(FeedbackModel model, int players, long long horizon)
    : model_(model), players_(players), horizon_(horizon) {
  if (players < 1) throw ConfigError("a game needs at least one player");
  records_.reserve(static_cast<std::size_t>(horizon) * players);
}

long long GameTranscript::rounds() const {
  return static_cast<long long>(records_.size()) / players_;
}

void GameTranscript::append_round(long long t, std::span<const PlayerRecord> records) {
  if (t != rounds() + 1) throw StateError(fmt::format("round {} appended after round {}", t, rounds()));
  if (records.size() != static_cast<std::size_t>(players_)) throw StateError("wrong number of player records");
  records_.insert(records_.end(), records.begin(), records.end());
}

const PlayerRecord& GameTranscript::at(long long t, int player) const {
  if (t < 1 || t > rounds() || player < 0 || player >= players_) {
    throw StateError(fmt::format("no transcript record for round {} player {}", t, player));
  }
  return records_[(t - 1) * players_ + player];
}

std::span<const PlayerRecord> GameTranscript::round(long long t) const {
  if (t < 1 || t > rounds()) throw StateError(fmt::format("no transcript round {}", t));
  return {records_.data() + (t - 1) * players_, static_cast<std::size_t>(players_)};
}

void write_transcript_csv(std::ostream& out, const GameTranscript& transcript) {
  out << fmt::format("# model={} players={} rounds={}\n", to_string(transcript.model()),
                     transcript.players(), transcript.rounds());
  out << "t,player,action,eff_loss,collision,comm_event\n";
  for (long long t = 1; t <= transcript.rounds(); ++t) {
    const auto row = transcript.round(t);
    for (int p = 0; p < transcript.players(); ++p) {
      const PlayerRecord& r = row[p];
      out << fmt::format("{},{},{},{},{},{}\n", t, p, r.action.slot(), r.effective_loss,
                         r.collision ? 1 : 0, to_string(r.tag));
    }
  }
}

RegretReport compute_regret(const GameTranscript& transcript, const LossSequence& seq) {
  if (transcript.rounds() != seq.horizon()) {
    throw StateError(fmt::format("transcript has {} rounds, loss sequence has {}", transcript.rounds(),
                                 seq.horizon()));
  }
  RegretReport report;
  for (long long t = 1; t <= transcript.rounds(); ++t) {
    bool collided = false;
    bool protocol = false;
    for (const PlayerRecord& r : transcript.round(t)) {
      report.player_loss += r.effective_loss;
      collided = collided || r.collision;
      protocol = protocol || is_protocol_tag(r.tag);
    }
    report.collision_rounds += collided ? 1 : 0;
    report.organic_collision_rounds += (collided && !protocol) ? 1 : 0;
    report.protocol_rounds += protocol ? 1 : 0;
  }
  for (const CommEvent& e : transcript.events()) {
    ++report.comm_rounds;
    report.bits += e.bits;
  }
  report.best_subset_loss = best_fixed_subset_loss(seq, transcript.players());
  report.regret = report.player_loss - report.best_subset_loss;
  return report;
}

// -- Team / Adversary defaults ---------------------------------------------

std::vector<Distribution> Team::declared_distributions(long long) {
  throw ConfigError("this strategy cannot report its action distributions");
}

void Team::annotate(long long, std::span<CommTag>, std::vector<CommEvent>&) {}

void ObliviousAdversary::losses(long long t, const std::vector<Distribution>*, std::span<double> out) {
  const auto row = table_.row(t);
  std::copy(row.begin(), row.end(), out.begin());
}

// -- Game -------------------------------------------------------------------

Game::Game(Team& team, Adversary& adversary)
    : team_(team),
      adversary_(adversary),
      transcript_(team.model(), team.players(), adversary.horizon()),
      realized_(adversary.horizon(), adversary.arms()),
      row_(adversary.arms()),
      actions_(team.players()),
      feedback_(team.players()),
      records_(team.players()),
      tags_(team.players()) {
  if (team.arms() != adversary.arms()) {
    throw ConfigError(fmt::format("strategy expects K={} but adversary has K={}", team.arms(), adversary.arms()));
  }
  if (team.players() > team.arms()) throw ConfigError("more players than arms");
  if (adversary.adaptive() && !team.declares_distributions()) {
    throw ConfigError("adaptive adversaries need a strategy that declares its action distributions");
  }
}

void Game::play_round(long long t) {
  if (t != transcript_.rounds() + 1) throw StateError(fmt::format("round {} played out of order", t));
  const int arms = adversary_.arms();
  if (adversary_.adaptive()) {
    const std::vector<Distribution> declared = team_.declared_distributions(t);
    adversary_.losses(t, &declared, row_);
  } else {
    adversary_.losses(t, nullptr, row_);
  }
  realized_.set_row(t, row_);

  team_.act(t, actions_);
  const int m = team_.players();
  for (int i = 0; i < m; ++i) {
    if (actions_[i].value < 1 || actions_[i].value > arms) {
      throw ProtocolError(fmt::format("player {} chose arm {} outside [1,{}] in round {}", i, actions_[i].value,
                                      arms, t));
    }
  }
  const bool flags = team_.model() != FeedbackModel::kNoInfo;
  for (int i = 0; i < m; ++i) {
    bool shared = false;
    for (int j = 0; j < m; ++j) shared = shared || (j != i && actions_[j] == actions_[i]);
    const double eff = shared ? 1.0 : row_[actions_[i].slot()];
    feedback_[i].observed_loss = eff;
    feedback_[i].collision = flags ? std::optional<bool>(shared) : std::nullopt;
    records_[i] = PlayerRecord{actions_[i], eff, shared, CommTag::kNone};
  }
  team_.observe(t, feedback_);

  std::fill(tags_.begin(), tags_.end(), CommTag::kNone);
  events_.clear();
  team_.annotate(t, tags_, events_);
  for (int i = 0; i < m; ++i) records_[i].tag = tags_[i];
  transcript_.append_round(t, records_);
  for (const CommEvent& e : events_) transcript_.add_event(e);
}

void Game::play_all() {
  for (long long t = transcript_.rounds() + 1; t <= adversary_.horizon(); ++t) play_round(t);
}

GameResult run_game(Team& team, Adversary& adversary) {
  Game game(team, adversary);
  game.play_all();
  RegretReport report = compute_regret(game.transcript(), game.realized());
  return GameResult{std::move(game.transcript()), game.realized(), report};
}

}  // namespace mpmab
