#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recrobust/data.hpp"
#include "recrobust/metrics.hpp"
#include "recrobust/models.hpp"

namespace recrobust {

struct RankingOptions {
    std::vector<std::string> metric_names;  // subset of {"ndcg","recall","hit"}
    int k = 10;
    double positive_threshold = 4.0;
    int threads = 0;
};

// Full-ranking evaluation: for every user with at least one relevant item in
// eval_indices, rank all items minus the user's train history and average the
// per-user metric terms in user-id-sorted order. Keys are labeled metric
// names ("ndcg@10"). Users are processed in parallel; the accumulation order
// is fixed, so results are bit-stable across thread counts.
std::map<std::string, MetricValue> evaluate_ranking(const Recommender& model,
                                                    const Dataset& dataset,
                                                    std::span<const std::size_t> eval_indices,
                                                    std::span<const std::size_t> train_indices,
                                                    const EvalContext& ctx,
                                                    const RankingOptions& options);

// Single-threaded reference implementation kept for testing and benchmarks;
// produces bit-identical results.
std::map<std::string, MetricValue> evaluate_ranking_serial(const Recommender& model,
                                                           const Dataset& dataset,
                                                           std::span<const std::size_t> eval_indices,
                                                           std::span<const std::size_t> train_indices,
                                                           const EvalContext& ctx,
                                                           const RankingOptions& options);

// AUC over the eval interactions: model scores against binarized ratings,
// no synthetic negatives. nullopt when the labels are single-class.
std::optional<MetricValue> evaluate_auc(const Recommender& model,
                                        const Dataset& dataset,
                                        std::span<const std::size_t> eval_indices,
                                        const EvalContext& ctx,
                                        double positive_threshold,
                                        int threads);

std::optional<MetricValue> evaluate_auc_serial(const Recommender& model,
                                               const Dataset& dataset,
                                               std::span<const std::size_t> eval_indices,
                                               const EvalContext& ctx,
                                               double positive_threshold);

}  // namespace recrobust
