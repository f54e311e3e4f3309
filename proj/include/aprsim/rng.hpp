// Copyright 2026 The aprsim developers.
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

/**
 * @file rng.hpp
 * Counter-style random stream for reproducible Monte Carlo runs.
 *
 * Each trial owns a TrialRng seeded by (seed, stream index), so results
 * depend only on those two numbers and never on how trials are divided
 * among threads. Sampling helpers are written out explicitly because the
 * standard <random> distributions do not promise identical output across
 * library implementations.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace aprsim {

namespace detail {

/// splitmix64 step; passes standard statistical batteries and mixes
/// consecutive counters into independent-looking values.
inline uint64_t splitmix64(uint64_t& x) {
    x += 0x9E3779B97F4A7C15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

class TrialRng {
  public:
    TrialRng(uint64_t seed, uint64_t stream) {
        // Decorrelate the per-stream starting points by running the seed
        // and stream through the mixer before use.
        uint64_t s = seed;
        const uint64_t a = detail::splitmix64(s);
        s = stream ^ 0xD1B54A32D192ED03ull;
        const uint64_t b = detail::splitmix64(s);
        state_ = a ^ (b + 0x9E3779B97F4A7C15ull * (stream + 1));
    }

    uint64_t next_u64() { return detail::splitmix64(state_); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Index draw by CDF inversion over nonnegative weights. The weights
    /// need not be normalized; a zero total is a caller error.
    int pick(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights)
            total += w;
        if (total <= 0.0)
            throw std::invalid_argument("pick needs a positive total weight");
        double u = uniform() * total;
        for (size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0)
                return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

  private:
    uint64_t state_;
};

} // namespace aprsim
