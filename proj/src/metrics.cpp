#include "recrobust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "recrobust/common.hpp"

namespace recrobust {

std::optional<double> ndcg_at_k(std::span<const std::string> ranked,
                                const std::set<std::string>& relevant,
                                int k) {
    if (k < 1) throw ConfigError("ndcg cutoff must be >= 1");
    if (relevant.empty()) return std::nullopt;
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    double dcg = 0.0;
    for (std::size_t p = 0; p < depth; ++p)
        if (relevant.count(ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    const std::size_t ideal = std::min<std::size_t>(k, relevant.size());
    double idcg = 0.0;
    for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    return dcg / idcg;
}

std::optional<double> recall_at_k(std::span<const std::string> ranked,
                                  const std::set<std::string>& relevant,
                                  int k) {
    if (k < 1) throw ConfigError("recall cutoff must be >= 1");
    if (relevant.empty()) return std::nullopt;
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    std::size_t hits = 0;
    for (std::size_t p = 0; p < depth; ++p)
        if (relevant.count(ranked[p])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

std::optional<double> hit_at_k(std::span<const std::string> ranked,
                               const std::set<std::string>& relevant,
                               int k) {
    if (k < 1) throw ConfigError("hit cutoff must be >= 1");
    if (relevant.empty()) return std::nullopt;
    const std::size_t depth = std::min<std::size_t>(k, ranked.size());
    for (std::size_t p = 0; p < depth; ++p)
        if (relevant.count(ranked[p])) return 1.0;
    return 0.0;
}

std::optional<double> auc(std::span<const double> scores,
                          std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw ConfigError("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (auto y : labels) n_pos += y ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    // average ranks within tie groups (1-based ranks)
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]]) pos_rank_sum += avg_rank;
        i = j;
    }

    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size())
        throw ConfigError("rmse: predicted and actual differ in length");
    if (predicted.empty()) throw ConfigError("rmse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - actual[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(predicted.size()));
}

std::optional<double> percent_change(double baseline, double perturbed) {
    if (baseline == 0.0) return std::nullopt;
    return 100.0 * (perturbed - baseline) / baseline;
}

double ordered_mean(std::span<const double> terms) {
    if (terms.empty()) return 0.0;
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum / static_cast<double>(terms.size());
}

}  // namespace recrobust
