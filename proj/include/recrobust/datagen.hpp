#pragma once

#include <cstdint>
#include <filesystem>

namespace recrobust::datagen {

// Synthetic corpus in the classic ML-100k file layout (u.data, u.user,
// u.item). The defaults reproduce the well-known shape: 943 users, 1682
// items, 100000 ratings in {1..5}, a 74%/26% male/female interaction
// marginal, ages spanning [7, 73], 21 occupations and 19 genre flags.
// Fully deterministic given the seed.
struct Ml100kOptions {
    std::uint64_t seed = 101;
    std::size_t n_users = 943;
    std::size_t n_items = 1682;
    std::size_t n_interactions = 100000;
    double male_interaction_share = 0.74;
};

void write_ml100k(const std::filesystem::path& dir, const Ml100kOptions& options = {});

}  // namespace recrobust::datagen
