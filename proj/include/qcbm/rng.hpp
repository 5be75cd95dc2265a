#pragma once

#include <cstdint>

namespace qcbm {

// Counter-based pseudo-random generator built on the SplitMix64 finalizer.
// The i-th draw is a pure function of (seed, i), so streams are reproducible
// across platforms and can be split by deriving child seeds. Used everywhere
// a seeded source of randomness is part of a contract (shot sampling,
// parameter initialization, Monte Carlo trials).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    // Raw 64-bit output for counter value i.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t i) {
        std::uint64_t z = seed + (i + 1) * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return mix(seed_, counter_++); }

    // Uniform double in [0, 1), 53 bits of precision.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Derive an independent child stream, e.g. per Monte Carlo trial or
    // per image block, so results do not depend on evaluation order.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
        return mix(seed ^ stream, stream);
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace qcbm
