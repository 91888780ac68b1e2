// Copyright 2026 The qfuse Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <utility>

namespace qfuse {

inline int parity64(std::uint64_t x) { return std::popcount(x) & 1; }

/// Index of the k-th basis index whose bit `t` is zero: the bits of `k`
/// below `t` stay in place, the rest shift up by one.
inline std::uint64_t pair_base(std::uint64_t k, std::uint64_t lo_mask) {
    return ((k & ~lo_mask) << 1) | (k & lo_mask);
}

/// Inserts `count` zero bits at position `pos`, shifting the upper bits up.
inline std::uint64_t insert_zero_bits(std::uint64_t x, unsigned pos, unsigned count) {
    const std::uint64_t lo_mask = (std::uint64_t{1} << pos) - 1;
    return ((x & ~lo_mask) << count) | (x & lo_mask);
}

/// SplitMix64: tiny, seedable, platform-independent 64-bit generator.
struct SplitMix64 {
    std::uint64_t state;

    explicit constexpr SplitMix64(std::uint64_t seed) : state(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a logarithm argument.
    double next_unit_open() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    /// Two independent standard normals via the Box-Muller transform.
    /// Consumes exactly two generator outputs.
    std::pair<double, double> next_normal_pair() {
        const double u1 = next_unit_open();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * 3.14159265358979323846 * u2;
        return {r * std::cos(t), r * std::sin(t)};
    }
};

} // namespace qfuse
