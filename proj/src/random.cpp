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

#include "mpmab/random.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

#include "mpmab/errors.hpp"

namespace mpmab {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    return true;
  }();
  (void)ready;
}

constexpr int kPositionShift = 24;
constexpr int kLaneShift = 16;

}  // namespace

Prf::Prf(std::uint64_t key0, std::uint64_t key1) {
  static_assert(crypto_shorthash_KEYBYTES == 16);
  ensure_sodium();
  std::memcpy(key_.data(), &key0, 8);
  std::memcpy(key_.data() + 8, &key1, 8);
}

std::uint64_t Prf::operator()(std::uint64_t counter) const {
  unsigned char in[8];
  unsigned char out[crypto_shorthash_BYTES];
  std::memcpy(in, &counter, 8);
  crypto_shorthash(out, in, sizeof in, key_.data());
  std::uint64_t v;
  std::memcpy(&v, out, 8);
  return v;
}

double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

RngStream::RngStream(std::uint64_t seed, std::string_view name, std::uint64_t index)
    : prf_(seed, splitmix64(fnv1a(name) ^ splitmix64(index))) {}

RngStream::result_type RngStream::operator()() { return prf_(counter_++); }

double RngStream::uniform() { return unit_interval((*this)()); }

bool RngStream::bernoulli(double p) { return uniform() < p; }

int RngStream::uniform_index(int n) {
  if (n <= 0) throw ConfigError("uniform_index: empty range");
  int k = static_cast<int>(uniform() * n);
  return k < n ? k : n - 1;
}

int RngStream::categorical(std::span<const double> weights) {
  return sample_index(weights, uniform());
}

RngStream RngStream::at(std::uint64_t position, std::uint32_t lane) const {
  return RngStream(prf_, (position << kPositionShift) |
                             (static_cast<std::uint64_t>(lane) << kLaneShift));
}

int sample_index(std::span<const double> weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw ValidationError("categorical draw from a zero weight vector");
  const double target = u * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += weights[i];
    if (target < acc) return last_positive;
  }
  return last_positive;
}

}  // namespace mpmab
