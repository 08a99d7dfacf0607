#pragma once

// Shared fixtures for the test suites: one synthetic ML-100k-format corpus
// per process plus small hand-built datasets.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "recrobust/data.hpp"
#include "recrobust/datagen.hpp"

namespace testsupport {

inline std::filesystem::path unique_temp_dir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("recrobust-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

// Generated once per process; ~100k interactions with the classic shape.
inline const std::filesystem::path& ml100k_dir() {
    static const std::filesystem::path dir = [] {
        auto d = unique_temp_dir("ml100k");
        recrobust::datagen::write_ml100k(d, {});
        return d;
    }();
    return dir;
}

inline const recrobust::Dataset& ml100k() {
    static const recrobust::Dataset ds = recrobust::load_movielens(ml100k_dir());
    return ds;
}

// A small feature-free dataset: `ratings[u][i] != 0` adds an interaction of
// user "u<u>" with item "i<i>" at that rating.
inline recrobust::Dataset toy_dataset(const std::vector<std::vector<double>>& ratings,
                                      recrobust::RatingScale scale = {1.0, 5.0,
                                                                      {1, 2, 3, 4, 5}}) {
    recrobust::Dataset ds;
    ds.rating_scale = std::move(scale);
    for (std::size_t u = 0; u < ratings.size(); ++u)
        for (std::size_t i = 0; i < ratings[u].size(); ++i)
            if (ratings[u][i] != 0.0)
                ds.interactions.push_back(recrobust::Interaction{
                    "u" + std::to_string(u), "i" + std::to_string(i), ratings[u][i], {}});
    ds.validate();
    return ds;
}

// Users with a single categorical feature; interaction k is (user k mod n,
// item k) so every user gets interactions.
inline recrobust::Dataset toy_feature_dataset(const std::vector<std::string>& user_values,
                                              const std::string& feature,
                                              const std::vector<std::string>& domain,
                                              std::size_t n_interactions) {
    recrobust::Dataset ds;
    ds.rating_scale = recrobust::RatingScale{1.0, 5.0, {1, 2, 3, 4, 5}};
    ds.user_features.schema = {recrobust::FeatureSchema{
        feature, recrobust::FeatureKind::Categorical, domain, 0, 0, false}};
    for (std::size_t u = 0; u < user_values.size(); ++u)
        ds.user_features.rows.emplace("u" + std::to_string(u),
                                      recrobust::FeatureRow{user_values[u]});
    for (std::size_t k = 0; k < n_interactions; ++k)
        ds.interactions.push_back(
            recrobust::Interaction{"u" + std::to_string(k % user_values.size()),
                                   "i" + std::to_string(k), 1.0 + double(k % 5), {}});
    ds.validate();
    return ds;
}

inline std::vector<std::size_t> all_indices(const recrobust::Dataset& ds) {
    std::vector<std::size_t> out(ds.interactions.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
}

}  // namespace testsupport
