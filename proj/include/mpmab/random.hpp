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

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace mpmab {

// Keyed SipHash-2-4 over a 64-bit counter (libsodium crypto_shorthash).
class Prf {
 public:
  Prf(std::uint64_t key0, std::uint64_t key1);
  std::uint64_t operator()(std::uint64_t counter) const;

  friend bool operator==(const Prf&, const Prf&) = default;

 private:
  std::array<unsigned char, 16> key_{};
};

// Maps the top 53 bits of a word onto [0, 1).
double unit_interval(std::uint64_t bits);

// Counter-based generator. A stream is named by (seed, name, index); draws
// are PRF(key, counter++), so independent consumers never perturb each
// other. `at(position, lane)` opens a sub-sequence addressed by a round
// number, which lets a player replay a round's draws exactly.
//
// Documented streams used by the library:
//   "alice", "bob"             two-player strategies, index = 0
//   "player", index = i        m-player strategy, player i (1-based)
//   "protocol.alice"           collision-channel initiation arms
//   "adversary"                stochastic loss tables
//   "shared"                   seed of the idealized shared-randomness stream
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  double uniform();
  bool bernoulli(double p);
  int uniform_index(int n);
  // Inverse-CDF draw from a nonnegative weight vector (need not sum to 1).
  int categorical(std::span<const double> weights);

  RngStream at(std::uint64_t position, std::uint32_t lane = 0) const;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  RngStream(const Prf& prf, std::uint64_t counter) : prf_(prf), counter_(counter) {}

  Prf prf_;
  std::uint64_t counter_ = 0;
};

// Inverse-CDF draw with an externally supplied uniform.
int sample_index(std::span<const double> weights, double u);

}  // namespace mpmab
