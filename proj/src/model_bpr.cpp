#include <algorithm>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "recrobust/common.hpp"
#include "recrobust/models.hpp"
#include "recrobust/rng.hpp"
#include "recrobust/sgd_math.hpp"

namespace recrobust {

using nlohmann::json;

void BprModel::fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
                   std::uint64_t seed) {
    if (train_indices.empty()) throw ConfigError("bpr: empty train set");

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

    const std::size_t f = static_cast<std::size_t>(hyper_.factors);
    const std::size_t n_users = user_ids_.size();
    const std::size_t n_items = item_ids_.size();

    // positives: interactions at or above the threshold, in train order
    std::vector<std::pair<std::uint32_t, std::uint32_t>> positives;
    std::vector<std::unordered_set<std::uint32_t>> positive_sets(n_users);
    for (std::size_t idx : train_indices) {
        const auto& x = dataset.interactions[idx];
        if (x.rating >= hyper_.positive_threshold) {
            const std::uint32_t u = user_index_.at(x.user_id);
            const std::uint32_t i = item_index_.at(x.item_id);
            positives.emplace_back(u, i);
            positive_sets[u].insert(i);
        }
    }

    Rng rng(seed);
    user_factors_.resize(n_users * f);
    item_factors_.resize(n_items * f);
    item_bias_.assign(n_items, 0.0);
    for (auto& p : user_factors_) p = rng.uniform(-0.01, 0.01);
    for (auto& q : item_factors_) q = rng.uniform(-0.01, 0.01);

    epoch_losses_.clear();
    if (positives.empty()) return;  // nothing to sample from

    std::vector<std::size_t> order(positives.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < hyper_.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t loss_n = 0;
        for (std::size_t pos : order) {
            const auto [u, i] = positives[pos];
            for (int t = 0; t < hyper_.negatives_per_positive; ++t) {
                std::uint32_t j = 0;
                bool found = false;
                for (int tries = 0; tries < 1000; ++tries) {
                    j = static_cast<std::uint32_t>(rng.below(n_items));
                    if (!positive_sets[u].count(j)) {
                        found = true;
                        break;
                    }
                }
                if (!found) continue;  // user positive on nearly every item

                std::span<double> pu(user_factors_.data() + u * f, f);
                std::span<double> qi(item_factors_.data() + i * f, f);
                std::span<double> qj(item_factors_.data() + j * f, f);
                const sgd::BprTriple triple{pu, qi, qj, item_bias_[i], item_bias_[j]};
                loss_sum += sgd::bpr_triple_loss(triple, hyper_.l2);
                ++loss_n;
                const sgd::BprTripleGrad grad = sgd::bpr_triple_grad(triple, hyper_.l2);
                const double lr = hyper_.learning_rate;
                for (std::size_t d = 0; d < f; ++d) {
                    pu[d] -= lr * grad.user[d];
                    qi[d] -= lr * grad.item_pos[d];
                    qj[d] -= lr * grad.item_neg[d];
                }
                item_bias_[i] -= lr * grad.bias_pos;
                item_bias_[j] -= lr * grad.bias_neg;
            }
        }
        epoch_losses_.push_back(loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0);
        logging::debug("bpr epoch " + std::to_string(epoch + 1) + "/" +
                       std::to_string(hyper_.epochs) + " loss " +
                       format_double(epoch_losses_.back()));
    }
}

double BprModel::score(const std::string& user_id, const std::string& item_id,
                       const EvalContext& ctx) const {
    (void)ctx;
    auto iit = item_index_.find(item_id);
    if (iit == item_index_.end()) return 0.0;
    const std::size_t f = static_cast<std::size_t>(hyper_.factors);
    double s = item_bias_[iit->second];
    auto uit = user_index_.find(user_id);
    if (uit != user_index_.end()) {
        const double* pu = user_factors_.data() + uit->second * f;
        const double* qi = item_factors_.data() + iit->second * f;
        for (std::size_t d = 0; d < f; ++d) s += pu[d] * qi[d];
    }
    return s;
}

std::vector<double> BprModel::score_all(const std::string& user_id,
                                        std::span<const std::string> candidates,
                                        const EvalContext& ctx) const {
    (void)ctx;
    const std::size_t f = static_cast<std::size_t>(hyper_.factors);
    auto uit = user_index_.find(user_id);
    const double* pu = uit != user_index_.end() ? user_factors_.data() + uit->second * f : nullptr;

    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        auto iit = item_index_.find(c);
        if (iit == item_index_.end()) {
            out.push_back(0.0);
            continue;
        }
        double s = item_bias_[iit->second];
        if (pu) {
            const double* qi = item_factors_.data() + iit->second * f;
            for (std::size_t d = 0; d < f; ++d) s += pu[d] * qi[d];
        }
        out.push_back(s);
    }
    return out;
}

json BprModel::checkpoint() const {
    json j;
    j["model"] = name();
    j["hyperparameters"] = {{"factors", hyper_.factors},
                            {"learning_rate", hyper_.learning_rate},
                            {"l2", hyper_.l2},
                            {"epochs", hyper_.epochs},
                            {"negatives_per_positive", hyper_.negatives_per_positive},
                            {"positive_threshold", hyper_.positive_threshold}};
    j["parameters"]["user_ids"] = user_ids_;
    j["parameters"]["item_ids"] = item_ids_;
    j["parameters"]["user_factors"] = user_factors_;
    j["parameters"]["item_factors"] = item_factors_;
    j["parameters"]["item_bias"] = item_bias_;
    return j;
}

std::uint64_t BprModel::parameter_fingerprint() const {
    Fnv1a h;
    for (double v : user_factors_) h.update_double(v);
    for (double v : item_factors_) h.update_double(v);
    for (double v : item_bias_) h.update_double(v);
    return h.digest();
}

std::unique_ptr<BprModel> BprModel::from_checkpoint(const json& j) {
    const auto& hp = j.at("hyperparameters");
    BprHyper h;
    h.factors = hp.at("factors").get<int>();
    h.learning_rate = hp.at("learning_rate").get<double>();
    h.l2 = hp.at("l2").get<double>();
    h.epochs = hp.at("epochs").get<int>();
    h.negatives_per_positive = hp.at("negatives_per_positive").get<int>();
    h.positive_threshold = hp.at("positive_threshold").get<double>();
    auto model = std::make_unique<BprModel>(h);
    const auto& p = j.at("parameters");
    model->user_ids_ = p.at("user_ids").get<std::vector<std::string>>();
    model->item_ids_ = p.at("item_ids").get<std::vector<std::string>>();
    for (std::uint32_t u = 0; u < model->user_ids_.size(); ++u)
        model->user_index_[model->user_ids_[u]] = u;
    for (std::uint32_t i = 0; i < model->item_ids_.size(); ++i)
        model->item_index_[model->item_ids_[i]] = i;
    model->user_factors_ = p.at("user_factors").get<std::vector<double>>();
    model->item_factors_ = p.at("item_factors").get<std::vector<double>>();
    model->item_bias_ = p.at("item_bias").get<std::vector<double>>();
    return model;
}

}  // namespace recrobust
