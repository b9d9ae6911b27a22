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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpmab/env.hpp"

namespace mpmab {

// Entry (t, k) ~ Bernoulli(means[k]), drawn row by row from the "adversary"
// stream of `seed`.
LossSequence stochastic_losses(std::span<const double> means, long long horizon, std::uint64_t seed);

// Three arms, thirds of the horizon: (0,1,1), then (1,0,1), then (0,0,1).
LossSequence remark_sequence(long long horizon);

// Unit loss on the first arm that either player (Alice first, lowest arm
// first) plays with probability at least 3/4; all zeros otherwise.
std::vector<double> adaptive_prop1_losses(std::span<const double> alice, std::span<const double> bob);

class AdaptiveProp1Adversary final : public Adversary {
 public:
  explicit AdaptiveProp1Adversary(long long horizon);
  int arms() const override { return 3; }
  long long horizon() const override { return horizon_; }
  bool adaptive() const override { return true; }
  void losses(long long t, const std::vector<Distribution>* declared, std::span<double> out) override;

 private:
  long long horizon_;
};

enum class AdversaryKind : std::uint8_t { kStochastic, kScripted, kRemark, kAdaptive };
std::string_view to_string(AdversaryKind kind);
AdversaryKind parse_adversary_kind(std::string_view text);

struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::kStochastic;
  std::vector<double> means;  // stochastic; empty means evenly spaced in [0.1, 0.9]
  std::string script;         // scripted: loss CSV path
};

// Default stochastic means: 0.1 to 0.9 evenly spaced over K arms.
std::vector<double> default_means(int arms);

std::unique_ptr<Adversary> make_adversary(const AdversarySpec& spec, int arms, long long horizon,
                                          std::uint64_t seed);

}  // namespace mpmab
