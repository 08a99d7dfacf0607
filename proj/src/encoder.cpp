#include "recrobust/encoder.hpp"

#include <set>

#include <nlohmann/json.hpp>

namespace recrobust {

using nlohmann::json;

FeatureEncoder::FeatureEncoder(const Dataset& dataset,
                               std::span<const std::size_t> train_indices) {
    std::set<std::string> users, items;
    for (std::size_t idx : train_indices) {
        users.insert(dataset.interactions[idx].user_id);
        items.insert(dataset.interactions[idx].item_id);
    }
    std::size_t next = 0;
    for (const auto& u : users) user_dims_.emplace(u, next++);
    for (const auto& i : items) item_dims_.emplace(i, next++);

    auto build_side = [&next](const FeatureTable& table, SideLayout& layout) {
        for (const auto& s : table.schema) {
            if (s.kind == FeatureKind::Categorical) {
                CategoricalField field;
                field.name = s.name;
                field.base = next;
                for (const auto& value : s.domain) field.value_offset.emplace(value, next++);
                layout.categorical.push_back(std::move(field));
            } else {
                layout.numeric.push_back(NumericField{s.name, next++, s.min, s.max});
            }
        }
    };
    build_side(dataset.user_features, user_layout_);
    build_side(dataset.item_features, item_layout_);
    dim_ = next;
}

void FeatureEncoder::encode_side(const std::string& id, const FeatureTable& table,
                                 const std::map<std::string, std::size_t>& id_dims,
                                 const SideLayout& layout,
                                 std::vector<ActiveFeature>& out) const {
    if (auto it = id_dims.find(id); it != id_dims.end())
        out.push_back(ActiveFeature{it->second, 1.0});

    for (const auto& field : layout.categorical) {
        auto fidx = table.feature_index(field.name);
        if (!fidx) continue;
        const FeatureValue* v = table.find(id, *fidx);
        if (!v) continue;
        const auto* s = std::get_if<std::string>(v);
        if (!s) continue;
        // values outside the build-time domain encode as all-zero
        if (auto off = field.value_offset.find(*s); off != field.value_offset.end())
            out.push_back(ActiveFeature{off->second, 1.0});
    }
    for (const auto& field : layout.numeric) {
        auto fidx = table.feature_index(field.name);
        if (!fidx) continue;
        const FeatureValue* v = table.find(id, *fidx);
        if (!v) continue;
        const auto* d = std::get_if<double>(v);
        if (!d) continue;
        const double range = field.max - field.min;
        const double scaled = range > 0.0 ? (*d - field.min) / range : 0.0;
        if (scaled != 0.0) out.push_back(ActiveFeature{field.index, scaled});
    }
}

std::vector<ActiveFeature> FeatureEncoder::encode_user(const std::string& user_id,
                                                       const FeatureTable& user_features) const {
    std::vector<ActiveFeature> out;
    encode_side(user_id, user_features, user_dims_, user_layout_, out);
    return out;
}

std::vector<ActiveFeature> FeatureEncoder::encode_item(const std::string& item_id,
                                                       const FeatureTable& item_features) const {
    std::vector<ActiveFeature> out;
    encode_side(item_id, item_features, item_dims_, item_layout_, out);
    return out;
}

std::vector<ActiveFeature> FeatureEncoder::encode(const std::string& user_id,
                                                  const std::string& item_id,
                                                  const FeatureTable& user_features,
                                                  const FeatureTable& item_features) const {
    std::vector<ActiveFeature> out = encode_user(user_id, user_features);
    encode_side(item_id, item_features, item_dims_, item_layout_, out);
    return out;
}

json FeatureEncoder::to_json() const {
    json j;
    j["dim"] = dim_;
    j["user_dims"] = user_dims_;
    j["item_dims"] = item_dims_;
    auto side_json = [](const SideLayout& layout) {
        json s;
        s["categorical"] = json::array();
        for (const auto& f : layout.categorical)
            s["categorical"].push_back(
                {{"name", f.name}, {"base", f.base}, {"value_offset", f.value_offset}});
        s["numeric"] = json::array();
        for (const auto& f : layout.numeric)
            s["numeric"].push_back(
                {{"name", f.name}, {"index", f.index}, {"min", f.min}, {"max", f.max}});
        return s;
    };
    j["user_layout"] = side_json(user_layout_);
    j["item_layout"] = side_json(item_layout_);
    return j;
}

FeatureEncoder FeatureEncoder::from_json(const json& j) {
    FeatureEncoder e;
    e.dim_ = j.at("dim").get<std::size_t>();
    e.user_dims_ = j.at("user_dims").get<std::map<std::string, std::size_t>>();
    e.item_dims_ = j.at("item_dims").get<std::map<std::string, std::size_t>>();
    auto side_from = [](const json& s) {
        SideLayout layout;
        for (const auto& f : s.at("categorical")) {
            CategoricalField field;
            field.name = f.at("name").get<std::string>();
            field.base = f.at("base").get<std::size_t>();
            field.value_offset =
                f.at("value_offset").get<std::map<std::string, std::size_t>>();
            layout.categorical.push_back(std::move(field));
        }
        for (const auto& f : s.at("numeric"))
            layout.numeric.push_back(NumericField{f.at("name").get<std::string>(),
                                                  f.at("index").get<std::size_t>(),
                                                  f.at("min").get<double>(),
                                                  f.at("max").get<double>()});
        return layout;
    };
    e.user_layout_ = side_from(j.at("user_layout"));
    e.item_layout_ = side_from(j.at("item_layout"));
    return e;
}

bool FeatureEncoder::operator==(const FeatureEncoder& other) const {
    return to_json() == other.to_json();
}

}  // namespace recrobust
