#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace assocda {

// Deterministic random stream. Same (seed, stream) always yields the same
// sequence; distinct stream ids give independent sequences for the same
// seed. Draw counting backs the stream-position accounting checks in the
// training harness. Normal deviates use Box-Muller directly so the output
// does not depend on the standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed, uint64_t stream = 0)
        : engine_(mix(seed + 0x9e3779b97f4a7c15ull * (stream + 1))) {}

    // Uniform in [0, 1).
    double uniform() {
        ++draws_;
        return (engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal deviate.
    double normal() {
        ++draws_;
        const double u1 = ((engine_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = (engine_() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, n). Rejection sampling keeps it exactly uniform.
    int below(int n) {
        ++draws_;
        const uint64_t un = static_cast<uint64_t>(n);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return static_cast<int>(v % un);
    }

    // Logical draw count; one per call regardless of internal extractions.
    uint64_t draws() const { return draws_; }

  private:
    static uint64_t mix(uint64_t z) {  // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    uint64_t draws_ = 0;
};

}  // namespace assocda
