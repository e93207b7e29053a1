// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mmm {

// Seeded RNG with explicitly implemented distributions so that streams are
// bit-identical across standard libraries and platforms. Derived streams
// (seed, index) let bulk jobs run order-independently.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(mix(seed)) {}

    static Rng stream(uint64_t seed, uint64_t index) {
        return Rng(mix(seed) ^ mix(index * 0x9e3779b97f4a7c15ull + 0x6a09e667f3bcc909ull));
    }

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n), rejection-sampled (unbiased, fixed algorithm).
    uint64_t uniform_int(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    explicit Rng(uint64_t raw, int) : eng_(raw) {}

    // splitmix64 finalizer; spreads low-entropy seeds over the full state space.
    static uint64_t mix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::mt19937_64 eng_;
};

}  // namespace mmm
