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

#include <stdexcept>

namespace mpmab {

// Bad user or caller input: dimensions, ranges, incompatible options.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric object (distribution, matrix) failed a structural check.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A player emitted something the game cannot accept, or the collision
// channel lost synchronization.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal guarantee of a strategy was falsified during a run.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The object was used out of order (e.g. regret of an unfinished game).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mpmab
