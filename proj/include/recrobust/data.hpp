#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "recrobust/common.hpp"

namespace recrobust {

enum class FeatureKind { Categorical, Numeric };

// A categorical value is stored as a string, a numeric one as a double.
using FeatureValue = std::variant<std::string, double>;

struct FeatureSchema {
    std::string name;
    FeatureKind kind = FeatureKind::Categorical;

    // Categorical: ordered, duplicate-free domain.
    std::vector<std::string> domain;

    // Numeric: inclusive bounds; integer_valued constrains stored values
    // and transform outputs to integers.
    double min = 0.0;
    double max = 0.0;
    bool integer_valued = false;

    void validate() const;  // throws DataError on a malformed schema
    bool value_ok(const FeatureValue& v) const;

    bool operator==(const FeatureSchema&) const = default;
};

struct Interaction {
    std::string user_id;
    std::string item_id;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;

    bool operator==(const Interaction&) const = default;
};

struct RatingScale {
    double min = 1.0;
    double max = 5.0;
    std::vector<double> values;  // empty means a continuous scale

    bool discrete() const { return !values.empty(); }
    bool contains(double r) const;

    bool operator==(const RatingScale&) const = default;
};

// One row holds the values for one entity, aligned with the schema order.
using FeatureRow = std::vector<FeatureValue>;

struct FeatureTable {
    std::vector<FeatureSchema> schema;
    std::map<std::string, FeatureRow> rows;

    bool empty() const { return schema.empty() && rows.empty(); }
    std::optional<std::size_t> feature_index(std::string_view name) const;
    // nullptr when the entity or the column is absent.
    const FeatureValue* find(const std::string& id, std::size_t feature) const;
    void validate() const;

    bool operator==(const FeatureTable&) const = default;
};

struct Dataset {
    std::vector<Interaction> interactions;
    FeatureTable user_features;
    FeatureTable item_features;
    RatingScale rating_scale;

    void validate() const;  // throws DataError on any invariant violation

    // Sorted ids; feature-table keys when present, otherwise the distinct
    // ids observed in interactions.
    std::vector<std::string> all_user_ids() const;
    std::vector<std::string> all_item_ids() const;

    std::uint64_t fingerprint() const;

    bool operator==(const Dataset&) const = default;
};

struct Split {
    std::vector<std::size_t> train;  // sorted ascending
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    std::array<double, 3> ratios{};
};

// Classic ML-100k directory: u.data / u.user / u.item.
Dataset load_movielens(const std::filesystem::path& root);

// Delimiter-separated interaction/feature files plus a JSON schema file.
// Feature paths are optional for feature-free datasets.
Dataset load_generic(const std::filesystem::path& interactions_path,
                     const std::optional<std::filesystem::path>& user_features_path,
                     const std::optional<std::filesystem::path>& item_features_path,
                     const std::filesystem::path& schema_path);

// Canonical export in the generic format; load_generic() on the result
// reproduces the dataset exactly.
void save_generic(const Dataset& dataset, const std::filesystem::path& dir);

// Seeded random permutation cut at the ratio boundaries.
// |train| = floor(r1*N), |valid| = floor(r2*N), test takes the remainder.
Split split_ratio(const Dataset& dataset, std::array<double, 3> ratios, std::uint64_t seed);

// Per-user interaction counts over the given indices; users without
// interactions in the set are absent.
std::map<std::string, std::size_t> user_activity(const Dataset& dataset,
                                                 std::span<const std::size_t> indices);

// Per-user mean rating over the given indices.
std::map<std::string, double> user_mean_rating(const Dataset& dataset,
                                               std::span<const std::size_t> indices);

}  // namespace recrobust
