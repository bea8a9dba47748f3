// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace scomcp {

// splitmix64 finalizer; decorrelates structured seed tuples
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic sub-seed from a tuple like (base_seed, stage, epoch, sample).
// All stochastic draws in the pipeline derive from these, so runs and resumes
// reproduce exactly for a fixed config seed.
inline uint64_t derive_seed(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x243f6a8885a308d3ULL;
    for (uint64_t p : parts) h = mix64(h ^ mix64(p));
    return h;
}

inline std::mt19937_64 make_rng(std::initializer_list<uint64_t> parts) {
    return std::mt19937_64(derive_seed(parts));
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(mix64(seed)); }

}  // namespace scomcp
