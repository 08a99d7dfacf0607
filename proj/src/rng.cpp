#include "recrobust/rng.hpp"

#include <algorithm>
#include <utility>

#include "recrobust/common.hpp"

namespace recrobust {

std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
}  // namespace

Rng::Rng(std::uint64_t seed) {
    // xoshiro state must not be all zero; splitmix64 expansion guarantees it
    // for every seed in practice and decorrelates close seeds.
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64_next(sm);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    // reject the non-multiple tail so every residue is equally likely
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t x = next();
        if (x >= threshold) return x % bound;
    }
}

double Rng::unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * unit();
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
    std::uint64_t state = root ^ fnv1a64(label);
    return splitmix64_next(state);
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) k = n;
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace recrobust
