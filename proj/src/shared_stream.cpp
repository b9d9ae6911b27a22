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

#include "mpmab/shared_stream.hpp"

#include <algorithm>
#include <random>

#include "mpmab/errors.hpp"

namespace mpmab {

namespace {
constexpr std::uint64_t kPrgDomain = 0x70726773747265ULL;
}

PrgStream::PrgStream(std::uint64_t seed) : seed_(seed), prf_(seed, kPrgDomain) {}

std::uint64_t PrgStream::word(long long position) const {
  if (position < 0) throw ConfigError("shared stream positions are nonnegative");
  return prf_(static_cast<std::uint64_t>(position));
}

double PrgStream::uniform(long long position) { return unit_interval(word(position)); }

std::unique_ptr<SharedStream> PrgStream::clone() const { return std::make_unique<PrgStream>(*this); }

IdealSharedStream::IdealSharedStream(std::uint64_t seed) : seed_(seed) {}

double IdealSharedStream::uniform(long long position) {
  if (position < 0) throw ConfigError("shared stream positions are nonnegative");
  const auto need = static_cast<std::size_t>(position) + 1;
  if (cache_.size() < need) {
    // Regenerate from the start so the sequence never depends on access order.
    std::mt19937_64 engine(seed_);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> fresh;
    fresh.reserve(std::max(need, cache_.size() * 2));
    for (std::size_t i = 0; i < fresh.capacity(); ++i) fresh.push_back(dist(engine));
    cache_ = std::move(fresh);
  }
  return cache_[need - 1];
}

std::unique_ptr<SharedStream> IdealSharedStream::clone() const {
  return std::make_unique<IdealSharedStream>(*this);
}

std::vector<bool> prg_expand(std::uint64_t seed, std::size_t n) {
  const PrgStream prg(seed);
  std::vector<bool> bits(n);
  std::uint64_t block = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) block = prg.word(static_cast<long long>(i / 64));
    bits[i] = (block >> (i % 64)) & 1U;
  }
  return bits;
}

}  // namespace mpmab
