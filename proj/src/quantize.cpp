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

#include "mpmab/quantize.hpp"

#include <fmt/format.h>

#include <cmath>

#include "mpmab/errors.hpp"
#include "mpmab/learners.hpp"

namespace mpmab {

Quantizer::Quantizer(long long horizon) {
  if (horizon < 1) throw ConfigError("quantizer needs a positive horizon");
  const int c = dyadic_epoch(horizon);
  fraction_bits_ = 2 * c + 1;
  width_ = 4 * c + 2;
  max_value_ = static_cast<double>(horizon) * static_cast<double>(horizon);
}

double Quantizer::resolution() const { return std::ldexp(1.0, -fraction_bits_); }

Fixed Quantizer::encode(double value) const {
  if (!(value >= 0.0) || value > max_value_) {
    throw ProtocolError(fmt::format("value {} is outside the quantizer range [0, {}]", value, max_value_));
  }
  // Scaling by a power of two is exact; above 2^53 the product is already integral.
  const double scaled = std::nearbyint(std::ldexp(value, fraction_bits_));
  return static_cast<Fixed>(scaled);
}

double Quantizer::decode(Fixed code) const {
  const auto hi = static_cast<std::uint64_t>(code >> 64);
  const auto lo = static_cast<std::uint64_t>(code);
  return std::ldexp(std::ldexp(static_cast<double>(hi), 64) + static_cast<double>(lo), -fraction_bits_);
}

long long message_budget(int arms, long long horizon) {
  return static_cast<long long>(std::ceil(arms * (2.0 * std::log2(static_cast<double>(horizon)) + 8.0)));
}

int bits_for(std::uint64_t n) {
  int b = 1;
  while (b < 64 && (n >> b) != 0) ++b;
  return b;
}

void append_bits(BitString& out, Fixed value, int width) {
  if (width < 128 && (value >> width) != 0) throw ProtocolError(fmt::format("value does not fit in {} bits", width));
  for (int i = width - 1; i >= 0; --i) out.push_back(((value >> i) & 1U) != 0);
}

Fixed read_bits(const BitString& in, std::size_t& cursor, int width) {
  if (cursor + static_cast<std::size_t>(width) > in.size()) throw ProtocolError("message shorter than its framing");
  Fixed v = 0;
  for (int i = 0; i < width; ++i) v = (v << 1) | (in[cursor++] ? 1U : 0U);
  return v;
}

}  // namespace mpmab
