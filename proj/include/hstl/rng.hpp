#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace hstl {

// PCG32: 64-bit state, 32-bit output, standard multiplier/stream setup.
// Every stochastic choice in the toolkit (splits, dropout masks, weight
// init, synthetic scenes) flows through this generator so that equal
// seeds give byte-identical artifacts.
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0) {
        state_ = 0u;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    // Uniform in [0, 1) with 32-bit resolution.
    double next_double() { return next_u32() * 0x1p-32; }

    // Uniform in {0, ..., bound-1}, rejection sampled (no modulo bias).
    std::uint32_t bounded(std::uint32_t bound) {
        const std::uint32_t threshold = (-bound) % bound;
        for (;;) {
            const std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller; consumes exactly two u32 draws.
    // 1-u1 keeps the log argument in (0, 1].
    double next_normal() {
        const double u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(1.0 - u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
};

// In-place Fisher-Yates driven by rng.bounded: i = n-1 .. 1, j = bounded(i+1).
template <typename T>
void fisher_yates_shuffle(std::vector<T>& items, Pcg32& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = rng.bounded(static_cast<std::uint32_t>(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace hstl
