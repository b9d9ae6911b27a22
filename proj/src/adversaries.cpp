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

#include "mpmab/adversaries.hpp"

#include <fmt/format.h>

#include "mpmab/errors.hpp"
#include "mpmab/random.hpp"

namespace mpmab {

LossSequence stochastic_losses(std::span<const double> means, long long horizon, std::uint64_t seed) {
  if (means.empty()) throw ConfigError("stochastic adversary needs at least one arm mean");
  for (double m : means) {
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError(fmt::format("arm mean {} outside [0, 1]", m));
  }
  if (horizon < 1) throw ConfigError("horizon must be positive");
  RngStream rng(seed, "adversary");
  std::vector<double> table;
  table.reserve(static_cast<std::size_t>(horizon) * means.size());
  for (long long t = 0; t < horizon; ++t) {
    for (double m : means) table.push_back(rng.bernoulli(m) ? 1.0 : 0.0);
  }
  return LossSequence(horizon, static_cast<int>(means.size()), std::move(table));
}

LossSequence remark_sequence(long long horizon) {
  if (horizon < 3 || horizon % 3 != 0) throw ConfigError(fmt::format("remark sequence needs 3 | T, got T = {}", horizon));
  const long long third = horizon / 3;
  std::vector<double> table;
  table.reserve(static_cast<std::size_t>(horizon) * 3);
  for (long long t = 1; t <= horizon; ++t) {
    if (t <= third) {
      table.insert(table.end(), {0.0, 1.0, 1.0});
    } else if (t <= 2 * third) {
      table.insert(table.end(), {1.0, 0.0, 1.0});
    } else {
      table.insert(table.end(), {0.0, 0.0, 1.0});
    }
  }
  return LossSequence(horizon, 3, std::move(table));
}

std::vector<double> adaptive_prop1_losses(std::span<const double> alice, std::span<const double> bob) {
  if (alice.size() != 3 || bob.size() != 3) throw ConfigError("the adaptive adversary is defined for K = 3");
  std::vector<double> out(3, 0.0);
  for (auto law : {alice, bob}) {
    for (std::size_t i = 0; i < 3; ++i) {
      if (law[i] >= 0.75) {
        out[i] = 1.0;
        return out;
      }
    }
  }
  return out;
}

AdaptiveProp1Adversary::AdaptiveProp1Adversary(long long horizon) : horizon_(horizon) {
  if (horizon < 1) throw ConfigError("horizon must be positive");
}

void AdaptiveProp1Adversary::losses(long long, const std::vector<Distribution>* declared, std::span<double> out) {
  if (declared == nullptr || declared->size() != 2) {
    throw ConfigError("the adaptive adversary needs both players' declared distributions");
  }
  const auto l = adaptive_prop1_losses((*declared)[0], (*declared)[1]);
  std::copy(l.begin(), l.end(), out.begin());
}

std::string_view to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::kStochastic:
      return "stochastic";
    case AdversaryKind::kScripted:
      return "scripted";
    case AdversaryKind::kRemark:
      return "remark";
    case AdversaryKind::kAdaptive:
      return "adaptive";
  }
  return "?";
}

AdversaryKind parse_adversary_kind(std::string_view text) {
  if (text == "adaptive_prop1") return AdversaryKind::kAdaptive;
  for (auto k : {AdversaryKind::kStochastic, AdversaryKind::kScripted, AdversaryKind::kRemark, AdversaryKind::kAdaptive}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError(fmt::format("unknown adversary '{}' (expected stochastic, scripted, remark or adaptive)", text));
}

std::vector<double> default_means(int arms) {
  if (arms < 1) throw ConfigError("need at least one arm");
  std::vector<double> m(arms, 0.5);
  for (int k = 0; arms > 1 && k < arms; ++k) m[k] = 0.1 + 0.8 * k / (arms - 1);
  return m;
}

std::unique_ptr<Adversary> make_adversary(const AdversarySpec& spec, int arms, long long horizon, std::uint64_t seed) {
  switch (spec.kind) {
    case AdversaryKind::kStochastic: {
      const auto means = spec.means.empty() ? default_means(arms) : spec.means;
      if (static_cast<int>(means.size()) != arms) {
        throw ConfigError(fmt::format("{} arm means given for K = {}", means.size(), arms));
      }
      return std::make_unique<ObliviousAdversary>(stochastic_losses(means, horizon, seed));
    }
    case AdversaryKind::kScripted: {
      if (spec.script.empty()) throw ConfigError("scripted adversary needs a loss CSV path (key 'script')");
      LossSequence seq = load_loss_csv(spec.script);
      if (seq.arms() != arms || seq.horizon() != horizon) {
        throw ConfigError(fmt::format("script {} has K={} T={}, run expects K={} T={}", spec.script, seq.arms(),
                                      seq.horizon(), arms, horizon));
      }
      return std::make_unique<ObliviousAdversary>(std::move(seq));
    }
    case AdversaryKind::kRemark:
      if (arms != 3) throw ConfigError("the remark sequence needs K = 3");
      return std::make_unique<ObliviousAdversary>(remark_sequence(horizon));
    case AdversaryKind::kAdaptive:
      if (arms != 3) throw ConfigError("the adaptive adversary needs K = 3");
      return std::make_unique<AdaptiveProp1Adversary>(horizon);
  }
  throw ConfigError("unknown adversary kind");
}

}  // namespace mpmab
