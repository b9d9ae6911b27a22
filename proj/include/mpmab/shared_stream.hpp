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
#include <string>
#include <vector>

#include "mpmab/random.hpp"

namespace mpmab {

// Common randomness both players read at the same virtual round. Positions
// may be visited out of order or repeatedly; the value at a position never
// changes. Each player holds its own clone.
class SharedStream {
 public:
  virtual ~SharedStream() = default;
  virtual double uniform(long long position) = 0;
  virtual std::unique_ptr<SharedStream> clone() const = 0;
  virtual std::string kind() const = 0;
};

// Pseudorandom stream expanded from a 64-bit seed: one 64-bit word per
// position, PRF(seed, position).
class PrgStream final : public SharedStream {
 public:
  explicit PrgStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t word(long long position) const;
  double uniform(long long position) override;
  std::unique_ptr<SharedStream> clone() const override;
  std::string kind() const override { return "prg"; }

 private:
  std::uint64_t seed_;
  Prf prf_;
};

// Stand-in for true shared randomness: an independent Mersenne Twister
// sequence, generated lazily and cached so positions are random-access.
class IdealSharedStream final : public SharedStream {
 public:
  explicit IdealSharedStream(std::uint64_t seed);

  double uniform(long long position) override;
  std::unique_ptr<SharedStream> clone() const override;
  std::string kind() const override { return "ideal"; }

 private:
  std::uint64_t seed_;
  std::vector<double> cache_;
};

// The first n bits of the PRG expansion of `seed`. Bit i is bit (i mod 64)
// of word(i / 64), least significant first.
std::vector<bool> prg_expand(std::uint64_t seed, std::size_t n);

}  // namespace mpmab
