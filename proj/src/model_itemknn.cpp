#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "recrobust/common.hpp"
#include "recrobust/models.hpp"

namespace recrobust {

using nlohmann::json;

void ItemKnnModel::fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
                       std::uint64_t seed) {
    (void)seed;
    if (train_indices.empty()) throw ConfigError("itemknn: empty train set");

    std::set<std::string> users, items;
    for (std::size_t idx : train_indices) {
        users.insert(dataset.interactions[idx].user_id);
        items.insert(dataset.interactions[idx].item_id);
    }
    user_ids_.assign(users.begin(), users.end());
    item_ids_.assign(items.begin(), items.end());
    user_index_.clear();
    item_index_.clear();
    for (std::uint32_t u = 0; u < user_ids_.size(); ++u) user_index_[user_ids_[u]] = u;
    for (std::uint32_t i = 0; i < item_ids_.size(); ++i) item_index_[item_ids_[i]] = i;

    std::vector<std::uint32_t> us, is;
    std::vector<double> rs;
    us.reserve(train_indices.size());
    is.reserve(train_indices.size());
    rs.reserve(train_indices.size());
    for (std::size_t idx : train_indices) {
        const auto& x = dataset.interactions[idx];
        us.push_back(user_index_.at(x.user_id));
        is.push_back(item_index_.at(x.item_id));
        rs.push_back(x.rating);
    }
    const RatingMatrix matrix = build_rating_matrix(
        static_cast<std::uint32_t>(user_ids_.size()),
        static_cast<std::uint32_t>(item_ids_.size()), us, is, rs);

    history_.assign(user_ids_.size(), {});
    for (std::uint32_t u = 0; u < user_ids_.size(); ++u)
        for (std::size_t p = matrix.user_offsets[u]; p < matrix.user_offsets[u + 1]; ++p)
            history_[u].emplace_back(matrix.user_items[p], matrix.user_ratings[p]);

    neighbors_ = item_topk_similarity(matrix, hyper_.k, hyper_.shrinkage, fit_threads_);
    rebuild_transpose();
}

void ItemKnnModel::rebuild_transpose() {
    transpose_.assign(item_ids_.size(), {});
    for (std::uint32_t i = 0; i < neighbors_.size(); ++i)
        for (const Neighbor& n : neighbors_[i]) transpose_[n.item].push_back(Neighbor{i, n.sim});
}

double ItemKnnModel::score(const std::string& user_id, const std::string& item_id,
                           const EvalContext& ctx) const {
    (void)ctx;
    auto uit = user_index_.find(user_id);
    auto iit = item_index_.find(item_id);
    if (uit == user_index_.end() || iit == item_index_.end()) return 0.0;
    const auto& neigh = neighbors_[iit->second];
    double s = 0.0;
    // both lists are item-sorted only on the history side; the neighbor list
    // is (sim desc), so walk the history and binary-search is not applicable.
    for (const auto& [j, rating] : history_[uit->second]) {
        for (const Neighbor& n : neigh) {
            if (n.item == j) {
                s += n.sim * rating;
                break;
            }
        }
    }
    return s;
}

std::vector<double> ItemKnnModel::score_all(const std::string& user_id,
                                            std::span<const std::string> candidates,
                                            const EvalContext& ctx) const {
    (void)ctx;
    auto uit = user_index_.find(user_id);
    if (uit == user_index_.end())
        return std::vector<double>(candidates.size(), 0.0);

    // accumulate over the reverse adjacency: for every history item j, add
    // sim(i, j) * r_uj to every item i that lists j as a neighbor
    std::vector<double> acc(item_ids_.size(), 0.0);
    for (const auto& [j, rating] : history_[uit->second])
        for (const Neighbor& n : transpose_[j]) acc[n.item] += n.sim * rating;

    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        auto iit = item_index_.find(c);
        out.push_back(iit == item_index_.end() ? 0.0 : acc[iit->second]);
    }
    return out;
}

json ItemKnnModel::checkpoint() const {
    json j;
    j["model"] = name();
    j["hyperparameters"] = {{"k", hyper_.k}, {"shrinkage", hyper_.shrinkage}};
    j["parameters"]["user_ids"] = user_ids_;
    j["parameters"]["item_ids"] = item_ids_;
    json hist = json::array();
    for (const auto& h : history_) {
        json row = json::array();
        for (const auto& [item, rating] : h) row.push_back({item, rating});
        hist.push_back(std::move(row));
    }
    j["parameters"]["history"] = std::move(hist);
    json rows = json::array();
    for (const auto& row : neighbors_) {
        json r = json::array();
        for (const Neighbor& n : row) r.push_back({n.item, n.sim});
        rows.push_back(std::move(r));
    }
    j["parameters"]["neighbors"] = std::move(rows);
    return j;
}

std::uint64_t ItemKnnModel::parameter_fingerprint() const {
    Fnv1a h;
    for (const auto& row : neighbors_) {
        h.update_u64(row.size());
        for (const Neighbor& n : row) {
            h.update_u64(n.item);
            h.update_double(n.sim);
        }
    }
    for (const auto& hist : history_) {
        h.update_u64(hist.size());
        for (const auto& [item, rating] : hist) {
            h.update_u64(item);
            h.update_double(rating);
        }
    }
    return h.digest();
}

std::unique_ptr<ItemKnnModel> ItemKnnModel::from_checkpoint(const json& j) {
    ItemKnnHyper h;
    h.k = j.at("hyperparameters").at("k").get<int>();
    h.shrinkage = j.at("hyperparameters").at("shrinkage").get<double>();
    auto model = std::make_unique<ItemKnnModel>(h);
    const auto& p = j.at("parameters");
    model->user_ids_ = p.at("user_ids").get<std::vector<std::string>>();
    model->item_ids_ = p.at("item_ids").get<std::vector<std::string>>();
    for (std::uint32_t u = 0; u < model->user_ids_.size(); ++u)
        model->user_index_[model->user_ids_[u]] = u;
    for (std::uint32_t i = 0; i < model->item_ids_.size(); ++i)
        model->item_index_[model->item_ids_[i]] = i;
    for (const auto& row : p.at("history")) {
        std::vector<std::pair<std::uint32_t, double>> h_row;
        for (const auto& e : row)
            h_row.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<double>());
        model->history_.push_back(std::move(h_row));
    }
    for (const auto& row : p.at("neighbors")) {
        std::vector<Neighbor> n_row;
        for (const auto& e : row)
            n_row.push_back(Neighbor{e.at(0).get<std::uint32_t>(), e.at(1).get<double>()});
        model->neighbors_.push_back(std::move(n_row));
    }
    model->rebuild_transpose();
    return model;
}

}  // namespace recrobust
