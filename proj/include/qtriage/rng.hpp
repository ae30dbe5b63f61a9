#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace qtriage {

/// SplitMix64 finalizer. Used to derive independent seeds (per fold, per label).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Portable random source. The standard distributions are implementation
/// defined, so every draw here is computed from raw mt19937_64 output and
/// reproduces bit-for-bit across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n); n > 0. Lemire's rejection method.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace qtriage
