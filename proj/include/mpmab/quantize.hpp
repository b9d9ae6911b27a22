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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mpmab {

__extension__ typedef unsigned __int128 Fixed;
using BitString = std::vector<bool>;

// Fixed-point grid for estimator values at horizon T. With c = ceil(log2 T),
// values carry 2c+1 fractional bits and 2c+1 integer bits, so every x in
// [0, T^2] round-trips within T^-2 and one value fits in 4c+2 bits.
class Quantizer {
 public:
  explicit Quantizer(long long horizon);

  int fraction_bits() const { return fraction_bits_; }
  int width() const { return width_; }
  double max_value() const { return max_value_; }
  double resolution() const;

  Fixed encode(double value) const;
  double decode(Fixed code) const;
  double round_trip(double value) const { return decode(encode(value)); }

 private:
  int fraction_bits_;
  int width_;
  double max_value_;
};

// Per-message bit budget ceil(K * (2 log2 T + 8)).
long long message_budget(int arms, long long horizon);

// Bits needed to write any integer in [0, n], at least 1.
int bits_for(std::uint64_t n);

// Most significant bit first.
void append_bits(BitString& out, Fixed value, int width);
Fixed read_bits(const BitString& in, std::size_t& cursor, int width);

}  // namespace mpmab
