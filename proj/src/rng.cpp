#include "zplke/rng.hpp"

#include <algorithm>
#include <unordered_set>

namespace zplke {

std::vector<std::size_t> SeededRng::sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out;
    out.reserve(k);
    if (k >= n) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(i);
        return out;
    }
    // Floyd's algorithm: k draws, no O(n) scratch.
    std::unordered_set<std::size_t> chosen;
    for (std::size_t j = n - k; j < n; ++j) {
        const std::size_t t = static_cast<std::size_t>(next_below(j + 1));
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    out.assign(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> parts) {
    std::uint64_t h = 0xCBF29CE484222325ull ^ base;
    for (auto p : parts) {
        h = hash_bytes(p, h);
        h = hash_bytes(std::string_view("\x1f", 1), h);  // component delimiter
    }
    return h;
}

}  // namespace zplke
