#include <algorithm>

#include <nlohmann/json.hpp>

#include "recrobust/common.hpp"
#include "recrobust/models.hpp"
#include "recrobust/rng.hpp"
#include "recrobust/sgd_math.hpp"

namespace recrobust {

using nlohmann::json;

void LinearModelBase::fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
                          std::uint64_t seed) {
    if (train_indices.empty()) throw ConfigError(name() + ": empty train set");

    encoder_ = FeatureEncoder(dataset, train_indices);
    const std::size_t dim = encoder_.dim();
    const int f = factors();

    Rng rng(seed);
    w0_ = 0.0;
    w_.assign(dim, 0.0);
    if (f > 0) {
        v_.resize(dim * static_cast<std::size_t>(f));
        for (auto& x : v_) x = rng.uniform(-0.01, 0.01);
    } else {
        v_.clear();
    }

    // encode once against the clean fit-time tables
    std::vector<std::vector<ActiveFeature>> rows;
    std::vector<double> labels;
    rows.reserve(train_indices.size());
    labels.reserve(train_indices.size());
    for (std::size_t idx : train_indices) {
        const auto& x = dataset.interactions[idx];
        rows.push_back(encoder_.encode(x.user_id, x.item_id, dataset.user_features,
                                       dataset.item_features));
        labels.push_back(x.rating >= positive_threshold() ? 1.0 : 0.0);
    }

    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    epoch_losses_.clear();
    const double lr = learning_rate();
    const double lambda = l2();
    for (int epoch = 0; epoch < epochs(); ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t pos : order) {
            const auto& x = rows[pos];
            const double y = labels[pos];
            if (f > 0) {
                loss_sum += sgd::fm_example_loss(w0_, w_, v_, f, x, y, lambda);
                const auto grad = sgd::fm_example_grad(w0_, w_, v_, f, x, y, lambda);
                w0_ -= lr * grad.w0;
                for (std::size_t a = 0; a < x.size(); ++a) {
                    w_[x[a].index] -= lr * grad.w[a];
                    for (int d = 0; d < f; ++d)
                        v_[x[a].index * static_cast<std::size_t>(f) + d] -=
                            lr * grad.v[a * static_cast<std::size_t>(f) + d];
                }
            } else {
                loss_sum += sgd::lr_example_loss(w0_, w_, x, y, lambda);
                const auto grad = sgd::lr_example_grad(w0_, w_, x, y, lambda);
                w0_ -= lr * grad.w0;
                for (std::size_t a = 0; a < x.size(); ++a) w_[x[a].index] -= lr * grad.w[a];
            }
        }
        epoch_losses_.push_back(loss_sum / static_cast<double>(rows.size()));
        logging::debug(name() + " epoch " + std::to_string(epoch + 1) + "/" +
                       std::to_string(epochs()) + " loss " +
                       format_double(epoch_losses_.back()));
    }
}

double LinearModelBase::raw_score(std::span<const ActiveFeature> x) const {
    const int f = factors();
    if (f > 0) return sgd::fm_raw_score(w0_, w_, v_, f, x);
    return sgd::lr_raw_score(w0_, w_, x);
}

double LinearModelBase::score(const std::string& user_id, const std::string& item_id,
                              const EvalContext& ctx) const {
    // route through score_all so single-pair and batch scoring share one
    // floating-point evaluation order
    const std::string items[1] = {item_id};
    return score_all(user_id, std::span<const std::string>(items, 1), ctx)[0];
}

std::vector<double> LinearModelBase::score_all(const std::string& user_id,
                                               std::span<const std::string> candidates,
                                               const EvalContext& ctx) const {
    // user part is shared across candidates; per-factor partial sums make a
    // candidate cost proportional to its own active features only
    const auto user_part = encoder_.encode_user(user_id, *ctx.user_features);
    const int f = factors();

    double z_user = w0_;
    for (const auto& a : user_part) z_user += w_[a.index] * a.value;

    std::vector<double> s_user, q_user;
    double pair_user = 0.0;
    if (f > 0) {
        s_user.assign(f, 0.0);
        q_user.assign(f, 0.0);
        for (const auto& a : user_part)
            for (int d = 0; d < f; ++d) {
                const double t = v_[a.index * static_cast<std::size_t>(f) + d] * a.value;
                s_user[d] += t;
                q_user[d] += t * t;
            }
        for (int d = 0; d < f; ++d) pair_user += s_user[d] * s_user[d] - q_user[d];
    }

    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        const auto item_part = encoder_.encode_item(c, *ctx.item_features);
        double z = z_user;
        for (const auto& a : item_part) z += w_[a.index] * a.value;
        if (f > 0) {
            double pair = pair_user;
            for (int d = 0; d < f; ++d) {
                double s_add = 0.0, q_add = 0.0;
                for (const auto& a : item_part) {
                    const double t = v_[a.index * static_cast<std::size_t>(f) + d] * a.value;
                    s_add += t;
                    q_add += t * t;
                }
                // (s_u + s_i)^2 - s_u^2 = s_i^2 + 2 s_u s_i
                pair += s_add * s_add + 2.0 * s_user[d] * s_add - q_add;
            }
            z += 0.5 * pair;
        }
        out.push_back(sgd::sigmoid(z));
    }
    return out;
}

std::uint64_t LinearModelBase::parameter_fingerprint() const {
    Fnv1a h;
    h.update_double(w0_);
    for (double x : w_) h.update_double(x);
    for (double x : v_) h.update_double(x);
    return h.digest();
}

json LinearModelBase::parameters_json() const {
    json p;
    p["encoder"] = encoder_.to_json();
    p["w0"] = w0_;
    p["w"] = w_;
    if (!v_.empty()) p["v"] = v_;
    return p;
}

void LinearModelBase::parameters_from_json(const json& p) {
    encoder_ = FeatureEncoder::from_json(p.at("encoder"));
    w0_ = p.at("w0").get<double>();
    w_ = p.at("w").get<std::vector<double>>();
    v_ = p.contains("v") ? p.at("v").get<std::vector<double>>() : std::vector<double>{};
}

json LrModel::checkpoint() const {
    json j;
    j["model"] = name();
    j["hyperparameters"] = {{"learning_rate", hyper_.learning_rate},
                            {"l2", hyper_.l2},
                            {"epochs", hyper_.epochs},
                            {"positive_threshold", hyper_.positive_threshold}};
    j["parameters"] = parameters_json();
    return j;
}

std::unique_ptr<LrModel> LrModel::from_checkpoint(const json& j) {
    const auto& hp = j.at("hyperparameters");
    LrHyper h;
    h.learning_rate = hp.at("learning_rate").get<double>();
    h.l2 = hp.at("l2").get<double>();
    h.epochs = hp.at("epochs").get<int>();
    h.positive_threshold = hp.at("positive_threshold").get<double>();
    auto model = std::make_unique<LrModel>(h);
    model->parameters_from_json(j.at("parameters"));
    return model;
}

json FmModel::checkpoint() const {
    json j;
    j["model"] = name();
    j["hyperparameters"] = {{"factors", hyper_.factors},
                            {"learning_rate", hyper_.learning_rate},
                            {"l2", hyper_.l2},
                            {"epochs", hyper_.epochs},
                            {"positive_threshold", hyper_.positive_threshold}};
    j["parameters"] = parameters_json();
    return j;
}

std::unique_ptr<FmModel> FmModel::from_checkpoint(const json& j) {
    const auto& hp = j.at("hyperparameters");
    FmHyper h;
    h.factors = hp.at("factors").get<int>();
    h.learning_rate = hp.at("learning_rate").get<double>();
    h.l2 = hp.at("l2").get<double>();
    h.epochs = hp.at("epochs").get<int>();
    h.positive_threshold = hp.at("positive_threshold").get<double>();
    auto model = std::make_unique<FmModel>(h);
    model->parameters_from_json(j.at("parameters"));
    return model;
}

}  // namespace recrobust
