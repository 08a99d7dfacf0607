#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace recrobust {

// splitmix64 step. Used to expand seeds and derive sub-streams.
std::uint64_t splitmix64_next(std::uint64_t& state);

// xoshiro256** 1.0, seeded through splitmix64. The generator is pinned so
// splits, perturbations and model initializations are reproducible across
// platforms and standard-library versions; std::uniform_*_distribution is
// deliberately not used anywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();

    // Unbiased draw in [0, bound), bound > 0. Rejection sampling on the
    // top of the range, then modulo.
    std::uint64_t below(std::uint64_t bound);

    // 53-bit draw in [0, 1).
    double unit();

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);

    // Fisher-Yates, iterating from the back. One below() call per step.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t s_[4];
};

// Deterministic sub-seed for a labeled component ("split", "model:fm", ...).
// Adding a component never shifts the randomness of the others.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

// Uniformly random k-subset of {0..n-1}, returned sorted ascending.
// Partial Fisher-Yates; consumes exactly k draws.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng);

}  // namespace recrobust
