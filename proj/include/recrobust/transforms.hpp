#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recrobust/data.hpp"

namespace recrobust {

enum class Side { User, Item };

struct SubpopulationPredicate {
    enum class Kind { FeatureEquals, ActivityBand, MeanRatingBand };

    Kind kind = Kind::FeatureEquals;

    // FeatureEquals
    Side side = Side::User;
    std::string feature;
    std::string value;  // compared textually for categorical, numerically for numeric features

    // ActivityBand: quantile positions, half-open [lower, upper).
    // MeanRatingBand: inclusive rating bounds [lower, upper].
    double lower = 0.0;
    double upper = 0.0;

    void validate(const Dataset& dataset) const;
};

struct ShiftTarget {
    Side side = Side::User;
    std::string feature;                           // categorical feature name
    std::map<std::string, double> target_marginals;  // value -> proportion, sums to 1

    void validate(const Dataset& dataset) const;
};

enum class TransformMode { Random, Structured };

struct TransformSpec {
    Side side = Side::User;
    std::string feature;
    TransformMode mode = TransformMode::Random;
    double delta = 0.0;              // structured only: relative distance bound
    double affected_fraction = 1.0;  // share of eligible entities to perturb

    void validate(const Dataset& dataset) const;
};

struct AttackSpec {
    double fraction = 0.0;

    void validate(const Dataset& dataset) const;
};

struct SparsitySpec {
    double fraction = 0.0;
    std::optional<SubpopulationPredicate> user_filter;

    void validate(const Dataset& dataset) const;
};

// Keeps the test interactions whose user (or item) satisfies the predicate.
// Activity and mean-rating statistics are computed on the train portion.
// Deterministic; order of surviving indices is preserved. An empty result is
// legal (callers decide how to report it).
std::vector<std::size_t> slice_subpopulation(const Dataset& dataset,
                                             std::span<const std::size_t> test_indices,
                                             std::span<const std::size_t> train_indices,
                                             const SubpopulationPredicate& predicate);

// Maximal-size stratified subsample of the test indices whose empirical
// marginal over interactions matches the target within 1/|result| per value.
// Strata sizes: n = min_v floor(available_v / t_v), apportioned by largest
// remainder; within a stratum, survivors are drawn uniformly by seed.
std::vector<std::size_t> shift_distribution(const Dataset& dataset,
                                            std::span<const std::size_t> test_indices,
                                            const ShiftTarget& target,
                                            std::uint64_t seed);

// Structured transform of a numeric feature: each affected entity gets a
// value drawn uniformly from [v*(1-delta), v*(1+delta)], clipped to the
// schema bounds and rounded if integer-valued. Exactly
// round(affected_fraction * |eligible|) entities change, where eligible =
// entities of the spec side appearing in the test indices.
FeatureTable transform_feature_structured(const Dataset& dataset,
                                          std::span<const std::size_t> test_indices,
                                          const TransformSpec& spec,
                                          std::uint64_t seed);

// Random transform: categorical values are redrawn uniformly from the domain
// excluding the original; numeric values uniformly over [min, max].
FeatureTable transform_feature_random(const Dataset& dataset,
                                      std::span<const std::size_t> test_indices,
                                      const TransformSpec& spec,
                                      std::uint64_t seed);

// Replaces the rating of exactly round(fraction * |train|) train interactions
// with a different valid rating. Everything else is returned bit-identical.
std::vector<Interaction> attack_ratings(const Dataset& dataset,
                                        std::span<const std::size_t> train_indices,
                                        const AttackSpec& spec,
                                        std::uint64_t seed);

// Removes exactly floor(fraction * n_u) train interactions per user passing
// the filter; returns the surviving subset of train_indices, order preserved.
std::vector<std::size_t> sparsify(const Dataset& dataset,
                                  std::span<const std::size_t> train_indices,
                                  const SparsitySpec& spec,
                                  std::uint64_t seed);

}  // namespace recrobust
