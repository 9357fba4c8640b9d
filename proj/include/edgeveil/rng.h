// Copyright 2026 The EdgeVeil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace edgeveil {

// Mixes a user seed with a stream label into an independent engine seed.
// Every consumer of randomness draws from its own labelled stream, so turning
// one mechanism on or off never shifts another's draws.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// Seeded random source with platform-independent samplers. The standard
// <random> distributions are implementation-defined; these are not, so a
// seed reproduces the same draws on every toolchain.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view label)
      : engine_(derive_seed(seed, label)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Box-Muller; consumes two uniforms per draw.
  double gaussian(double stddev);

  // Inverse-CDF Laplace(0, scale).
  double laplace(double scale);

  // Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace edgeveil
