/*
Copyright 2026 The gcmap Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace gcmap {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent per-module seeds from one
/// master seed: derive_seed(master, k) for stream k.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x51ed2701ULL));
}

/// Named seed streams. Values are part of the reproducibility contract; never
/// renumber an existing entry.
enum class SeedStream : std::uint64_t {
    Graph = 1,
    Split = 2,
    SyntheticInit = 3,
    AffinityInit = 4,
    RelayInit = 5,
    EdgeBatch = 6,
    DeployRelay = 7,
    Coreset = 8,
    MappingInit = 9,
};

inline Rng make_rng(std::uint64_t master, SeedStream stream) {
    return Rng(derive_seed(master, static_cast<std::uint64_t>(stream)));
}

/// Uniform double in [lo, hi) from the top 53 bits; portable across standard
/// libraries, unlike std::uniform_real_distribution.
inline double uniform(Rng &rng, double lo = 0.0, double hi = 1.0) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

/// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng &rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

/// Box-Muller standard normal.
inline double standard_normal(Rng &rng) {
    double u1;
    do {
        u1 = uniform(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

template <typename Vec> void shuffle(Vec &v, Rng &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace gcmap
