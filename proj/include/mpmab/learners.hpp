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
#include "mpmab/random.hpp"

namespace mpmab {

// Throws ValidationError unless entries are >= 0 and sum to 1 within
// `tolerance`.
void check_distribution(std::span<const double> p, double tolerance = 1e-12);

// ceil(log2 t) for t >= 1; rounds t in (2^(j-1), 2^j] share epoch j.
int dyadic_epoch(long long t);

// sqrt(log n / (n * 2^ceil(log2 t))).
double anytime_learning_rate(long long t, int support_size);

// Exponential weights on importance-weighted loss estimates, restricted to
// a support set of arms. No exploration is mixed in; callers add their own.
// The anytime variant uses the dyadic rate above and forgets its estimates
// whenever the epoch changes.
class Exp3 {
 public:
  Exp3(std::vector<Arm> support, double eta);
  static Exp3 anytime(std::vector<Arm> support);

  const std::vector<Arm>& support() const { return support_; }
  int size() const { return static_cast<int>(support_.size()); }
  bool contains(Arm a) const { return index_of(a) >= 0; }

  double eta() const;
  long long round() const { return round_; }
  const std::vector<double>& cumulative() const { return cumulative_; }

  std::vector<double> local_probabilities() const;
  double probability(Arm a) const;
  Distribution distribution(int arms) const;
  Arm sample(RngStream& rng) const;

  // Adds loss / P(played) to the played arm, then moves to the next round.
  void update(Arm played, double loss);
  // Raw estimate, no importance weighting and no round change.
  void add_estimate(Arm arm, double estimate);
  void advance();

  friend bool operator==(const Exp3&, const Exp3&) = default;

 private:
  int index_of(Arm a) const;

  std::vector<Arm> support_;
  std::vector<double> cumulative_;
  bool anytime_ = false;
  double fixed_eta_ = 0.0;
  long long round_ = 1;
};

// Power iteration from the uniform vector (at most 1e5 steps), then a
// least-squares solve of p(M - I) = 0, sum(p) = 1 when n <= 64.
// `matrix` is row-major n x n and row-stochastic.
std::vector<double> stationary_distribution(std::span<const double> matrix, int n);

// Swap-regret learner from one Exp3 instance per support arm. The played
// arm's importance-weighted loss is split across instances in proportion to
// the combined distribution, which is the stationary law of the matrix whose
// rows are the instance distributions. The one-argument constructor uses
// anytime instances; the two-argument one fixes every instance's rate.
class SwapRegretLearner {
 public:
  explicit SwapRegretLearner(std::vector<Arm> support);
  SwapRegretLearner(std::vector<Arm> support, double eta);

  // sqrt(ln n / rounds) for an n-arm support and a known round count; 1 when
  // n = 1. The instances' second-order terms sum to at most n per round
  // because the combined law is stationary, so the swap-regret bound is
  // n ln n / eta + eta n rounds.
  static double tuned_rate(int n, long long rounds);

  const std::vector<Arm>& support() const { return support_; }
  const std::vector<double>& local_distribution() const { return combined_; }
  double probability(Arm a) const;
  Distribution distribution(int arms) const;
  Arm sample(RngStream& rng) const;
  const Exp3& instance(int i) const { return instances_[i]; }

  void update(Arm played, double loss);
  void apply_estimate(Arm played, double estimate);

  friend bool operator==(const SwapRegretLearner&, const SwapRegretLearner&) = default;

 private:
  int index_of(Arm a) const;
  void recombine();

  std::vector<Arm> support_;
  std::vector<Exp3> instances_;
  std::vector<double> combined_;
};

// Realized regrets of an action sequence against a loss table whose rows
// are rounds. The comparator ranges over `support`.
double external_regret(std::span<const Arm> actions, const LossSequence& losses, std::span<const Arm> support);
// Maximum over every map support -> support (|support|^|support| of them).
double swap_regret(std::span<const Arm> actions, const LossSequence& losses, std::span<const Arm> support);

}  // namespace mpmab
