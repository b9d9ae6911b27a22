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
#include <utility>
#include <vector>

#include "mpmab/env.hpp"

namespace mpmab::testing {

// Plays a fixed action table (row t-1 holds round t) and records feedback.
class ScriptedTeam final : public Team {
 public:
  ScriptedTeam(int arms, FeedbackModel model, std::vector<std::vector<Arm>> script)
      : arms_(arms), model_(model), script_(std::move(script)) {}

  int players() const override { return static_cast<int>(script_.front().size()); }
  int arms() const override { return arms_; }
  FeedbackModel model() const override { return model_; }
  void act(long long t, std::span<Arm> actions) override {
    const auto& row = script_[t - 1];
    for (std::size_t i = 0; i < row.size(); ++i) actions[i] = row[i];
  }
  void observe(long long, std::span<const Feedback> feedback) override {
    seen.emplace_back(feedback.begin(), feedback.end());
  }
  void annotate(long long t, std::span<CommTag> tags, std::vector<CommEvent>& events) override {
    if (model_ == FeedbackModel::kCommunicationOracle && t % 10 == 0) {
      tags[0] = CommTag::kSync;
      tags[1] = CommTag::kSync;
      events.push_back({t, CommKind::kFixed, 12});
    }
  }

  std::vector<std::vector<Feedback>> seen;

 private:
  int arms_;
  FeedbackModel model_;
  std::vector<std::vector<Arm>> script_;
};

inline std::vector<std::vector<Arm>> constant_script(long long horizon, std::vector<Arm> row) {
  return std::vector<std::vector<Arm>>(static_cast<std::size_t>(horizon), std::move(row));
}

}  // namespace mpmab::testing
