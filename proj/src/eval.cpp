#include "recrobust/eval.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "recrobust/common.hpp"
#include "recrobust/kernels.hpp"

namespace recrobust {

namespace {

struct UserCase {
    std::string user_id;
    std::set<std::string> relevant;
    std::vector<std::string> candidates;  // all items minus train history
};

// Per-user ranking cases in user-id-sorted order. Users without relevant
// items in the eval set are dropped here (excluded from the averages).
std::vector<UserCase> build_cases(const Dataset& dataset,
                                  std::span<const std::size_t> eval_indices,
                                  std::span<const std::size_t> train_indices,
                                  double positive_threshold) {
    std::map<std::string, std::set<std::string>> relevant;
    for (std::size_t idx : eval_indices) {
        const auto& x = dataset.interactions[idx];
        if (x.rating >= positive_threshold) relevant[x.user_id].insert(x.item_id);
    }
    std::map<std::string, std::unordered_set<std::string>> history;
    for (std::size_t idx : train_indices) {
        const auto& x = dataset.interactions[idx];
        history[x.user_id].insert(x.item_id);
    }
    const std::vector<std::string> all_items = dataset.all_item_ids();

    std::vector<UserCase> cases;
    cases.reserve(relevant.size());
    for (auto& [user, rel] : relevant) {
        UserCase c;
        c.user_id = user;
        c.relevant = std::move(rel);
        const auto hist = history.find(user);
        c.candidates.reserve(all_items.size());
        for (const auto& item : all_items)
            if (hist == history.end() || !hist->second.count(item)) c.candidates.push_back(item);
        if (!c.candidates.empty()) cases.push_back(std::move(c));
    }
    return cases;
}

struct UserTerms {
    double ndcg = 0.0;
    double recall = 0.0;
    double hit = 0.0;
};

UserTerms user_terms(const Recommender& model, const UserCase& c, const EvalContext& ctx,
                     int k) {
    const auto ranked = model.rank(c.user_id, c.candidates, static_cast<std::size_t>(k), ctx);
    UserTerms t;
    // relevant is never empty for a built case, so the optionals hold values
    t.ndcg = *ndcg_at_k(ranked, c.relevant, k);
    t.recall = *recall_at_k(ranked, c.relevant, k);
    t.hit = *hit_at_k(ranked, c.relevant, k);
    return t;
}

std::map<std::string, MetricValue> aggregate(const std::vector<UserTerms>& terms,
                                             const RankingOptions& options) {
    std::vector<double> ndcg, recall, hit;
    ndcg.reserve(terms.size());
    recall.reserve(terms.size());
    hit.reserve(terms.size());
    for (const auto& t : terms) {
        ndcg.push_back(t.ndcg);
        recall.push_back(t.recall);
        hit.push_back(t.hit);
    }
    std::map<std::string, MetricValue> out;
    const std::string suffix = "@" + std::to_string(options.k);
    for (const auto& name : options.metric_names) {
        MetricValue mv;
        mv.name = name + suffix;
        mv.k = options.k;
        mv.n = terms.size();
        if (name == "ndcg")
            mv.value = ordered_mean(ndcg);
        else if (name == "recall")
            mv.value = ordered_mean(recall);
        else if (name == "hit")
            mv.value = ordered_mean(hit);
        else
            throw ConfigError("unknown ranking metric '" + name + "'");
        out.emplace(mv.name, std::move(mv));
    }
    return out;
}

}  // namespace

std::map<std::string, MetricValue> evaluate_ranking_serial(const Recommender& model,
                                                           const Dataset& dataset,
                                                           std::span<const std::size_t> eval_indices,
                                                           std::span<const std::size_t> train_indices,
                                                           const EvalContext& ctx,
                                                           const RankingOptions& options) {
    const auto cases =
        build_cases(dataset, eval_indices, train_indices, options.positive_threshold);
    std::vector<UserTerms> terms(cases.size());
    for (std::size_t c = 0; c < cases.size(); ++c)
        terms[c] = user_terms(model, cases[c], ctx, options.k);
    return aggregate(terms, options);
}

std::map<std::string, MetricValue> evaluate_ranking(const Recommender& model,
                                                    const Dataset& dataset,
                                                    std::span<const std::size_t> eval_indices,
                                                    std::span<const std::size_t> train_indices,
                                                    const EvalContext& ctx,
                                                    const RankingOptions& options) {
    const auto cases =
        build_cases(dataset, eval_indices, train_indices, options.positive_threshold);
    std::vector<UserTerms> terms(cases.size());
#ifdef _OPENMP
    const int n_threads = resolve_threads(options.threads);
    #pragma omp parallel for schedule(dynamic, 8) num_threads(n_threads)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(cases.size()); ++c)
        terms[c] = user_terms(model, cases[c], ctx, options.k);
#else
    for (std::size_t c = 0; c < cases.size(); ++c)
        terms[c] = user_terms(model, cases[c], ctx, options.k);
#endif
    // terms are slotted by case position; the mean below runs in the fixed
    // user-sorted order regardless of how the loop was scheduled
    return aggregate(terms, options);
}

std::optional<MetricValue> evaluate_auc_serial(const Recommender& model,
                                               const Dataset& dataset,
                                               std::span<const std::size_t> eval_indices,
                                               const EvalContext& ctx,
                                               double positive_threshold) {
    std::vector<double> scores(eval_indices.size());
    std::vector<std::uint8_t> labels(eval_indices.size());
    for (std::size_t p = 0; p < eval_indices.size(); ++p) {
        const auto& x = dataset.interactions[eval_indices[p]];
        scores[p] = model.score(x.user_id, x.item_id, ctx);
        labels[p] = x.rating >= positive_threshold ? 1 : 0;
    }
    const auto value = auc(scores, labels);
    if (!value) return std::nullopt;
    return MetricValue{"auc", *value, std::nullopt, eval_indices.size()};
}

std::optional<MetricValue> evaluate_auc(const Recommender& model,
                                        const Dataset& dataset,
                                        std::span<const std::size_t> eval_indices,
                                        const EvalContext& ctx,
                                        double positive_threshold,
                                        int threads) {
    std::vector<double> scores(eval_indices.size());
    std::vector<std::uint8_t> labels(eval_indices.size());
#ifdef _OPENMP
    const int n_threads = resolve_threads(threads);
    #pragma omp parallel for schedule(static) num_threads(n_threads)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(eval_indices.size()); ++p) {
        const auto& x = dataset.interactions[eval_indices[p]];
        scores[p] = model.score(x.user_id, x.item_id, ctx);
        labels[p] = x.rating >= positive_threshold ? 1 : 0;
    }
#else
    (void)threads;
    for (std::size_t p = 0; p < eval_indices.size(); ++p) {
        const auto& x = dataset.interactions[eval_indices[p]];
        scores[p] = model.score(x.user_id, x.item_id, ctx);
        labels[p] = x.rating >= positive_threshold ? 1 : 0;
    }
#endif
    const auto value = auc(scores, labels);
    if (!value) return std::nullopt;
    return MetricValue{"auc", *value, std::nullopt, eval_indices.size()};
}

}  // namespace recrobust
