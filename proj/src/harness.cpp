#include "recrobust/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "recrobust/eval.hpp"
#include "recrobust/rng.hpp"
#include "recrobust/transforms.hpp"

namespace recrobust {

using nlohmann::json;

namespace {

bool is_ranking_metric(const std::string& name) {
    return name == "ndcg" || name == "recall" || name == "hit";
}

// Metric names evaluated for one model: the explicit per-model list when
// present, otherwise the config list filtered by model kind (general models
// rank, context-aware models score).
std::vector<std::string> metrics_for(const ModelSpec& spec, const Recommender& model,
                                     const MetricsSpec& metrics) {
    if (spec.metrics) return *spec.metrics;
    std::vector<std::string> out;
    for (const auto& name : metrics.names) {
        if (name == "rmse") continue;  // never a default; see metric routing below
        const bool ranking = is_ranking_metric(name);
        if (model.uses_features() ? !ranking : ranking) out.push_back(name);
    }
    return out;
}

std::string label_for(const std::string& name, int k) {
    return is_ranking_metric(name) ? name + "@" + std::to_string(k) : name;
}

struct ModelEvaluation {
    std::map<std::string, MetricValue> values;  // by label
    std::map<std::string, std::string> absent;  // label -> reason
};

// All requested metrics of one model on one evaluation set.
ModelEvaluation evaluate_model(const Recommender& model,
                               const std::vector<std::string>& names,
                               const Dataset& dataset,
                               std::span<const std::size_t> eval_indices,
                               std::span<const std::size_t> train_indices,
                               const EvalContext& ctx,
                               const MetricsSpec& metrics,
                               int threads) {
    ModelEvaluation out;

    std::vector<std::string> ranking_names;
    for (const auto& name : names) {
        if (name == "rmse") {
            out.absent[label_for(name, metrics.k)] = "metric_unsupported_by_model";
            continue;
        }
        if (is_ranking_metric(name))
            ranking_names.push_back(name);
    }

    if (eval_indices.empty()) {
        for (const auto& name : names)
            if (name != "rmse") out.absent[label_for(name, metrics.k)] = "empty_subset";
        return out;
    }

    if (!ranking_names.empty()) {
        RankingOptions options;
        options.metric_names = ranking_names;
        options.k = metrics.k;
        options.positive_threshold = metrics.positive_threshold;
        options.threads = threads;
        auto values =
            evaluate_ranking(model, dataset, eval_indices, train_indices, ctx, options);
        for (auto& [label, mv] : values) {
            if (mv.n == 0)
                out.absent[label] = "no_contributing_users";
            else
                out.values.emplace(label, std::move(mv));
        }
    }

    if (std::find(names.begin(), names.end(), "auc") != names.end()) {
        auto mv = evaluate_auc(model, dataset, eval_indices, ctx, metrics.positive_threshold,
                               threads);
        if (mv)
            out.values.emplace("auc", std::move(*mv));
        else
            out.absent["auc"] = "single_class_labels";
    }

    return out;
}

std::map<std::string, std::map<std::string, double>> categorical_marginals(
    const Dataset& dataset, const FeatureTable& table, Side side,
    std::span<const std::size_t> indices) {
    constexpr std::size_t kMaxDomain = 32;
    std::map<std::string, std::map<std::string, double>> out;
    for (std::size_t f = 0; f < table.schema.size(); ++f) {
        const auto& schema = table.schema[f];
        if (schema.kind != FeatureKind::Categorical || schema.domain.size() > kMaxDomain)
            continue;
        std::map<std::string, std::size_t> counts;
        std::size_t total = 0;
        for (std::size_t idx : indices) {
            const auto& x = dataset.interactions[idx];
            const auto& id = side == Side::User ? x.user_id : x.item_id;
            const FeatureValue* v = table.find(id, f);
            if (!v) continue;
            ++counts[std::get<std::string>(*v)];
            ++total;
        }
        if (total == 0) continue;
        std::map<std::string, double> marginal;
        for (const auto& [value, c] : counts)
            marginal[value] = static_cast<double>(c) / static_cast<double>(total);
        out.emplace(schema.name, std::move(marginal));
    }
    return out;
}

double quantile_of_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

DatasetStats compute_dataset_stats(const Dataset& dataset, const Split& split) {
    DatasetStats stats;
    stats.n_users = dataset.all_user_ids().size();
    stats.n_items = dataset.all_item_ids().size();
    stats.n_interactions = dataset.interactions.size();
    stats.train_size = split.train.size();
    stats.valid_size = split.valid.size();
    stats.test_size = split.test.size();
    stats.train_user_marginals =
        categorical_marginals(dataset, dataset.user_features, Side::User, split.train);
    stats.train_item_marginals =
        categorical_marginals(dataset, dataset.item_features, Side::Item, split.train);

    std::vector<double> counts;
    for (const auto& [_, c] : user_activity(dataset, split.train))
        counts.push_back(static_cast<double>(c));
    std::sort(counts.begin(), counts.end());
    if (!counts.empty()) {
        stats.activity_quantiles["min"] = counts.front();
        stats.activity_quantiles["q25"] = quantile_of_sorted(counts, 0.25);
        stats.activity_quantiles["median"] = quantile_of_sorted(counts, 0.5);
        stats.activity_quantiles["q75"] = quantile_of_sorted(counts, 0.75);
        stats.activity_quantiles["max"] = counts.back();
    }
    return stats;
}

EvalReport run_experiment(const RobustnessConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();

    if (config.robustness_section_count() > 1)
        throw ConfigError("config: at most one robustness section may be present");

    const Dataset dataset = load_dataset(config.dataset);
    const std::uint64_t split_seed =
        config.split.seed ? *config.split.seed : derive_seed(config.seed, "split");
    const Split split = split_ratio(dataset, config.split.ratios, split_seed);

    EvalReport report;
    report.config_echo = config.to_json();
    report.seed = config.seed;
    report.stats = compute_dataset_stats(dataset, split);

    // Robustness section validation happens before any training so config
    // mistakes surface immediately.
    const auto kind = config.robustness_kind();
    if (config.subpopulation) config.subpopulation->validate(dataset);
    if (config.shift) config.shift->validate(dataset);
    if (config.transformation) config.transformation->validate(dataset);
    if (config.attack) config.attack->validate(dataset);
    if (config.sparsity) config.sparsity->validate(dataset);

    // Baseline fits on the clean train set.
    std::vector<std::unique_ptr<Recommender>> baseline_models;
    for (const auto& spec : config.models) {
        auto model = make_model(spec.name, spec.hyper, config.metrics.positive_threshold);
        if (auto* knn = dynamic_cast<ItemKnnModel*>(model.get()))
            knn->set_fit_threads(config.threads);
        logging::debug("fitting baseline " + spec.name);
        model->fit(dataset, split.train, derive_seed(config.seed, "model:" + spec.name));
        baseline_models.push_back(std::move(model));
    }

    const EvalContext clean_ctx{&dataset.user_features, &dataset.item_features};

    // Perturbed side of the run.
    std::vector<std::size_t> perturbed_eval(split.test.begin(), split.test.end());
    EvalContext perturbed_ctx = clean_ctx;
    FeatureTable perturbed_table;
    Dataset attacked_dataset;
    std::vector<std::size_t> sparsified_train;
    std::vector<std::unique_ptr<Recommender>> refit_models;
    report.fits_per_model = 1;

    if (kind) {
        PerturbationInfo info;
        info.kind = *kind;
        info.detail = report.config_echo.at(*kind);

        if (config.subpopulation) {
            perturbed_eval =
                slice_subpopulation(dataset, split.test, split.train, *config.subpopulation);
            info.subset_size = perturbed_eval.size();
        } else if (config.shift) {
            perturbed_eval = shift_distribution(dataset, split.test, *config.shift,
                                                derive_seed(config.seed, "perturb:shift"));
            info.subset_size = perturbed_eval.size();
        } else if (config.transformation) {
            const std::uint64_t seed = derive_seed(config.seed, "perturb:transformation");
            perturbed_table =
                config.transformation->mode == TransformMode::Structured
                    ? transform_feature_structured(dataset, split.test, *config.transformation,
                                                   seed)
                    : transform_feature_random(dataset, split.test, *config.transformation,
                                               seed);
            if (config.transformation->side == Side::User)
                perturbed_ctx.user_features = &perturbed_table;
            else
                perturbed_ctx.item_features = &perturbed_table;
        } else if (config.attack) {
            attacked_dataset = dataset;
            attacked_dataset.interactions =
                attack_ratings(dataset, split.train, *config.attack,
                               derive_seed(config.seed, "perturb:attack"));
        } else if (config.sparsity) {
            sparsified_train = sparsify(dataset, split.train, *config.sparsity,
                                        derive_seed(config.seed, "perturb:sparsity"));
            info.subset_size = sparsified_train.size();
        }

        // Train-side perturbations refit with the same per-model seeds;
        // test-side perturbations reuse the fitted baseline models.
        if (config.attack || config.sparsity) {
            report.fits_per_model = 2;
            const Dataset& fit_data = config.attack ? attacked_dataset : dataset;
            const std::span<const std::size_t> fit_indices =
                config.attack ? std::span<const std::size_t>(split.train)
                              : std::span<const std::size_t>(sparsified_train);
            for (const auto& spec : config.models) {
                auto model =
                    make_model(spec.name, spec.hyper, config.metrics.positive_threshold);
                if (auto* knn = dynamic_cast<ItemKnnModel*>(model.get()))
                    knn->set_fit_threads(config.threads);
                logging::debug("refitting " + spec.name + " on the perturbed train set");
                model->fit(fit_data, fit_indices,
                           derive_seed(config.seed, "model:" + spec.name));
                refit_models.push_back(std::move(model));
            }
        }

        report.perturbation = std::move(info);
    }

    for (std::size_t m = 0; m < config.models.size(); ++m) {
        const auto& spec = config.models[m];
        const Recommender& baseline = *baseline_models[m];
        const auto names = metrics_for(spec, baseline, config.metrics);

        const ModelEvaluation base = evaluate_model(baseline, names, dataset, split.test,
                                                    split.train, clean_ctx, config.metrics,
                                                    config.threads);

        std::optional<ModelEvaluation> pert;
        if (kind) {
            const Recommender& perturbed_model =
                refit_models.empty() ? baseline : *refit_models[m];
            // Attack/sparsity runs evaluate the refit models on the clean
            // test set; candidate exclusion still uses the original train
            // history so baseline and perturbed rankings stay comparable.
            pert = evaluate_model(perturbed_model, names, dataset, perturbed_eval, split.train,
                                  perturbed_ctx, config.metrics, config.threads);
        }

        for (const auto& name : names) {
            const std::string label = label_for(name, config.metrics.k);
            ReportEntry entry;
            entry.model = spec.name;
            entry.metric = label;
            if (auto it = base.values.find(label); it != base.values.end())
                entry.baseline = it->second;
            else if (auto ab = base.absent.find(label); ab != base.absent.end())
                entry.reason = ab->second;

            if (pert) {
                if (auto it = pert->values.find(label); it != pert->values.end())
                    entry.perturbed = it->second;
                else if (auto ab = pert->absent.find(label); ab != pert->absent.end())
                    entry.reason = ab->second;
            } else if (entry.reason.empty()) {
                entry.reason = "no_perturbation";
            }

            if (entry.baseline && entry.perturbed) {
                entry.pct_change =
                    percent_change(entry.baseline->value, entry.perturbed->value);
                if (!entry.pct_change) entry.reason = "baseline_zero";
            }
            report.entries.push_back(std::move(entry));
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    report.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
    return report;
}

}  // namespace recrobust
