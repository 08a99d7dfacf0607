#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace recrobust {

struct MetricValue {
    std::string name;        // "ndcg@10", "auc", ...
    double value = 0.0;
    std::optional<int> k;    // cutoff for ranking metrics
    std::size_t n = 0;       // contributing users / examples

    bool operator==(const MetricValue&) const = default;
};

// Binary-relevance nDCG@K. nullopt when relevant is empty (the user is
// excluded from aggregation rather than counted as zero).
std::optional<double> ndcg_at_k(std::span<const std::string> ranked,
                                const std::set<std::string>& relevant,
                                int k);

std::optional<double> recall_at_k(std::span<const std::string> ranked,
                                  const std::set<std::string>& relevant,
                                  int k);

// 1 iff the top-K contains a relevant item.
std::optional<double> hit_at_k(std::span<const std::string> ranked,
                               const std::set<std::string>& relevant,
                               int k);

// Wilcoxon/Mann-Whitney rank-sum estimator with average ranks for tied
// scores. nullopt when labels are single-class.
std::optional<double> auc(std::span<const double> scores,
                          std::span<const std::uint8_t> labels);

// Throws ConfigError on length mismatch or empty input.
double rmse(std::span<const double> predicted, std::span<const double> actual);

// 100 * (perturbed - baseline) / baseline; nullopt when baseline == 0.
std::optional<double> percent_change(double baseline, double perturbed);

// Arithmetic mean accumulated in the given order; callers pass terms in a
// fixed (user-id-sorted) order so results are bit-stable across thread counts.
double ordered_mean(std::span<const double> terms);

}  // namespace recrobust
