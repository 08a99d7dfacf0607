#include "recrobust/models.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "recrobust/common.hpp"

namespace recrobust {

using nlohmann::json;

std::vector<double> Recommender::score_all(const std::string& user_id,
                                           std::span<const std::string> candidates,
                                           const EvalContext& ctx) const {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& item : candidates) out.push_back(score(user_id, item, ctx));
    return out;
}

std::vector<std::string> Recommender::rank(const std::string& user_id,
                                           std::span<const std::string> candidates,
                                           std::size_t k, const EvalContext& ctx) const {
    if (candidates.empty()) throw ConfigError("rank: empty candidate set");
    if (k < 1) throw ConfigError("rank: k must be >= 1");
    const std::vector<double> scores = score_all(user_id, candidates, ctx);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return candidates[a] < candidates[b];
    };
    const std::size_t depth = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + depth, order.end(), better);
    std::vector<std::string> out;
    out.reserve(depth);
    for (std::size_t p = 0; p < depth; ++p) out.push_back(candidates[order[p]]);
    return out;
}

const std::vector<double>& Recommender::epoch_losses() const {
    static const std::vector<double> empty;
    return empty;
}

std::vector<std::string> known_model_names() {
    return {"bpr", "fm", "itemknn", "lr", "pop"};
}

namespace {

void reject_unknown_keys(const json& overrides, std::initializer_list<const char*> known,
                         const std::string& model) {
    if (!overrides.is_object())
        throw ConfigError("hyperparameters for '" + model + "' must be an object");
    for (const auto& [key, _] : overrides.items()) {
        if (key == "name" || key == "metrics") continue;  // config bookkeeping
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end())
            throw ConfigError("unknown hyperparameter '" + key + "' for model '" + model + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (j.is_object() && j.contains(key)) return j.at(key).get<T>();
    return fallback;
}

void require_positive(double v, const std::string& what) {
    if (!(v > 0.0)) throw ConfigError(what + " must be > 0");
}

void require_count(long long v, const std::string& what) {
    if (v < 1) throw ConfigError(what + " must be >= 1");
}

}  // namespace

std::unique_ptr<Recommender> make_model(const std::string& name,
                                        const json& overrides,
                                        double positive_threshold) {
    if (name == "pop") {
        reject_unknown_keys(overrides, {}, name);
        return std::make_unique<PopModel>();
    }
    if (name == "itemknn") {
        reject_unknown_keys(overrides, {"k", "shrinkage"}, name);
        ItemKnnHyper h;
        h.k = get_or<int>(overrides, "k", h.k);
        h.shrinkage = get_or<double>(overrides, "shrinkage", h.shrinkage);
        require_count(h.k, "itemknn.k");
        if (h.shrinkage < 0.0) throw ConfigError("itemknn.shrinkage must be >= 0");
        return std::make_unique<ItemKnnModel>(h);
    }
    if (name == "bpr") {
        reject_unknown_keys(overrides,
                            {"factors", "learning_rate", "l2", "epochs",
                             "negatives_per_positive"},
                            name);
        BprHyper h;
        h.factors = get_or<int>(overrides, "factors", h.factors);
        h.learning_rate = get_or<double>(overrides, "learning_rate", h.learning_rate);
        h.l2 = get_or<double>(overrides, "l2", h.l2);
        h.epochs = get_or<int>(overrides, "epochs", h.epochs);
        h.negatives_per_positive =
            get_or<int>(overrides, "negatives_per_positive", h.negatives_per_positive);
        h.positive_threshold = positive_threshold;
        require_count(h.factors, "bpr.factors");
        require_positive(h.learning_rate, "bpr.learning_rate");
        if (h.l2 < 0.0) throw ConfigError("bpr.l2 must be >= 0");
        if (h.epochs < 0) throw ConfigError("bpr.epochs must be >= 0");
        require_count(h.negatives_per_positive, "bpr.negatives_per_positive");
        return std::make_unique<BprModel>(h);
    }
    if (name == "lr") {
        reject_unknown_keys(overrides, {"learning_rate", "l2", "epochs"}, name);
        LrHyper h;
        h.learning_rate = get_or<double>(overrides, "learning_rate", h.learning_rate);
        h.l2 = get_or<double>(overrides, "l2", h.l2);
        h.epochs = get_or<int>(overrides, "epochs", h.epochs);
        h.positive_threshold = positive_threshold;
        require_positive(h.learning_rate, "lr.learning_rate");
        if (h.l2 < 0.0) throw ConfigError("lr.l2 must be >= 0");
        if (h.epochs < 0) throw ConfigError("lr.epochs must be >= 0");
        return std::make_unique<LrModel>(h);
    }
    if (name == "fm") {
        reject_unknown_keys(overrides, {"factors", "learning_rate", "l2", "epochs"}, name);
        FmHyper h;
        h.factors = get_or<int>(overrides, "factors", h.factors);
        h.learning_rate = get_or<double>(overrides, "learning_rate", h.learning_rate);
        h.l2 = get_or<double>(overrides, "l2", h.l2);
        h.epochs = get_or<int>(overrides, "epochs", h.epochs);
        h.positive_threshold = positive_threshold;
        require_count(h.factors, "fm.factors");
        require_positive(h.learning_rate, "fm.learning_rate");
        if (h.l2 < 0.0) throw ConfigError("fm.l2 must be >= 0");
        if (h.epochs < 0) throw ConfigError("fm.epochs must be >= 0");
        return std::make_unique<FmModel>(h);
    }
    std::string known;
    for (const auto& m : known_model_names()) known += (known.empty() ? "" : ", ") + m;
    throw ConfigError("unknown model '" + name + "' (known: " + known + ")");
}

void save_checkpoint(const Recommender& model, const std::filesystem::path& path) {
    json j = model.checkpoint();
    j["format"] = "recrobust-checkpoint";
    j["version"] = 1;
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

std::unique_ptr<Recommender> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint '" + path.string() + "': " + e.what());
    }
    if (j.value("format", "") != "recrobust-checkpoint")
        throw ConfigError("'" + path.string() + "' is not a recrobust checkpoint");
    const std::string model = j.value("model", "");
    if (model == "pop") return PopModel::from_checkpoint(j);
    if (model == "itemknn") return ItemKnnModel::from_checkpoint(j);
    if (model == "bpr") return BprModel::from_checkpoint(j);
    if (model == "lr") return LrModel::from_checkpoint(j);
    if (model == "fm") return FmModel::from_checkpoint(j);
    throw ConfigError("checkpoint for unknown model '" + model + "'");
}

}  // namespace recrobust
