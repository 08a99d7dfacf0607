#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "recrobust/data.hpp"

namespace recrobust {

// One active coordinate of a sparse feature vector.
struct ActiveFeature {
    std::size_t index = 0;
    double value = 0.0;

    bool operator==(const ActiveFeature&) const = default;
};

// One-hot layout for LR/FM: [train user ids | train item ids | user
// categorical (feature x domain value) | user numeric (one real dim each,
// min-max scaled by the schema bounds) | item categorical | item numeric].
// Values are read from the feature tables passed at encode time, so
// perturbed test-side tables flow straight into the score.
class FeatureEncoder {
public:
    FeatureEncoder() = default;

    // Layout is built from the dataset schemas and the ids observed in the
    // train indices.
    FeatureEncoder(const Dataset& dataset, std::span<const std::size_t> train_indices);

    std::size_t dim() const { return dim_; }

    // Zero-valued coordinates are omitted. Ids unseen at build time and
    // entities missing from a table contribute nothing for that field.
    std::vector<ActiveFeature> encode(const std::string& user_id,
                                      const std::string& item_id,
                                      const FeatureTable& user_features,
                                      const FeatureTable& item_features) const;

    // Split encodings for fast full-ranking scoring: user part once, item
    // part per candidate. encode() == encode_user() ++ encode_item().
    std::vector<ActiveFeature> encode_user(const std::string& user_id,
                                           const FeatureTable& user_features) const;
    std::vector<ActiveFeature> encode_item(const std::string& item_id,
                                           const FeatureTable& item_features) const;

    nlohmann::json to_json() const;
    static FeatureEncoder from_json(const nlohmann::json& j);

    bool operator==(const FeatureEncoder&) const;

private:
    struct CategoricalField {
        std::string name;
        std::size_t base = 0;                    // first dim of this field
        std::map<std::string, std::size_t> value_offset;
    };
    struct NumericField {
        std::string name;
        std::size_t index = 0;
        double min = 0.0;
        double max = 0.0;
    };
    struct SideLayout {
        std::vector<CategoricalField> categorical;
        std::vector<NumericField> numeric;
    };

    void encode_side(const std::string& id, const FeatureTable& table,
                     const std::map<std::string, std::size_t>& id_dims,
                     const SideLayout& layout,
                     std::vector<ActiveFeature>& out) const;

    std::map<std::string, std::size_t> user_dims_;
    std::map<std::string, std::size_t> item_dims_;
    SideLayout user_layout_;
    SideLayout item_layout_;
    std::size_t dim_ = 0;
};

}  // namespace recrobust
