// Copyright 2026 The li-qt Authors
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

// Platform-stable random streams.
//
// Every stream is a std::mt19937_64 (its output sequence is fixed by the C++
// standard) seeded through SplitMix64. Uniform doubles take the top 53 bits of
// one 64-bit draw, so no implementation-defined std:: distribution is involved
// and event logs are bit-identical across compilers and platforms.
//
// Stream splitting: repeat r of a run seeded with s uses
//   derive_seed(s, r) = splitmix64(s + (r + 1) * 0x9E3779B97F4A7C15)
// Repeats are independent of how many threads execute them.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace liqt {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller on two uniforms (deterministic, no cached state).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

/// Runs fn(r, derive_seed(seed, r)) for r in [0, repeats) on up to `threads`
/// workers and returns results ordered by repeat index.
template <typename Result>
std::vector<Result> run_repeats(std::size_t repeats, std::uint64_t seed,
                                const std::function<Result(std::size_t, std::uint64_t)>& fn,
                                unsigned threads = std::thread::hardware_concurrency()) {
  std::vector<Result> results(repeats);
  if (threads <= 1 || repeats <= 1) {
    for (std::size_t r = 0; r < repeats; ++r) results[r] = fn(r, derive_seed(seed, r));
    return results;
  }
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t r = w; r < repeats; r += threads) results[r] = fn(r, derive_seed(seed, r));
      });
    }
  }
  return results;
}

}  // namespace liqt
