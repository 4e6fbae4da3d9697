#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace bon {

/// SplitMix64 (Steele, Lea & Flood 2014). One 64-bit word of state, a fixed
/// additive constant and two xor-multiply finalizer rounds; the same seed
/// always yields the same stream, on every platform. All randomness in this
/// project flows through this generator so runs are reproducible bit-for-bit.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Multiply-shift reduction (Lemire 2019).
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool coin(double p) { return uniform() < p; }

    /// Fisher-Yates, driven by below(). Identical seed, identical permutation.
    template <class V>
    void shuffle(V& v) {
        if (v.size() < 2) return;
        for (size_t i = v.size() - 1; i > 0; --i) {
            size_t j = static_cast<size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    /// Derives an independent stream for substream `k` of a run seeded with
    /// `seed` (per-sentence generation, per-task probes, ...).
    static uint64_t derive(uint64_t seed, uint64_t k) {
        Rng r(seed ^ (0xD1B54A32D192ED03ull + k * 0x9E3779B97F4A7C15ull));
        return r.next_u64();
    }

private:
    uint64_t state_;
};

}  // namespace bon
