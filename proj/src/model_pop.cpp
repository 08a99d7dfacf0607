#include <nlohmann/json.hpp>

#include "recrobust/common.hpp"
#include "recrobust/models.hpp"

namespace recrobust {

using nlohmann::json;

void PopModel::fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
                   std::uint64_t seed) {
    (void)seed;
    if (train_indices.empty()) throw ConfigError("pop: empty train set");
    item_counts_.clear();
    max_count_ = 0;
    for (std::size_t idx : train_indices) {
        std::size_t& c = item_counts_[dataset.interactions[idx].item_id];
        ++c;
        max_count_ = std::max(max_count_, c);
    }
}

double PopModel::score(const std::string& user_id, const std::string& item_id,
                       const EvalContext& ctx) const {
    (void)user_id;
    (void)ctx;
    auto it = item_counts_.find(item_id);
    if (it == item_counts_.end() || max_count_ == 0) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(max_count_);
}

json PopModel::checkpoint() const {
    json j;
    j["model"] = name();
    j["hyperparameters"] = json::object();
    j["parameters"]["item_counts"] = item_counts_;
    j["parameters"]["max_count"] = max_count_;
    return j;
}

std::uint64_t PopModel::parameter_fingerprint() const {
    Fnv1a h;
    h.update_u64(max_count_);
    for (const auto& [id, c] : item_counts_) {
        h.update(id);
        h.update_u64(c);
    }
    return h.digest();
}

std::unique_ptr<PopModel> PopModel::from_checkpoint(const json& j) {
    auto model = std::make_unique<PopModel>();
    model->item_counts_ =
        j.at("parameters").at("item_counts").get<std::map<std::string, std::size_t>>();
    model->max_count_ = j.at("parameters").at("max_count").get<std::size_t>();
    return model;
}

}  // namespace recrobust
