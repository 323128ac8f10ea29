#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace zplke {

// Deterministic, platform-independent PRNG (splitmix64 stream). std's
// distributions are not bit-stable across standard libraries, so bounded
// draws are done here by rejection.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, bound), bound > 0. Rejection sampling keeps the
    // draw unbiased and identical on every platform.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    double next_unit() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

    // k distinct indices from [0, n), returned sorted ascending.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::uint64_t state_;
};

// FNV-1a over bytes; used to derive per-item RNG streams from string keys.
std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed = 0xCBF29CE484222325ull);

// Combines a base seed with string components into one stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> parts);

}  // namespace zplke
