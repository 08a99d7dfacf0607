#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recrobust/transforms.hpp"

namespace recrobust {

struct DatasetSpec {
    std::string kind;  // "movielens" | "generic"
    std::filesystem::path path;          // movielens root
    std::filesystem::path interactions;  // generic
    std::optional<std::filesystem::path> user_features;
    std::optional<std::filesystem::path> item_features;
    std::filesystem::path schema;
};

struct SplitSpec {
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    std::optional<std::uint64_t> seed;  // defaults to derive_seed(seed, "split")
};

struct ModelSpec {
    std::string name;
    nlohmann::json hyper = nlohmann::json::object();
    // Explicit metric names for this model; defaults by model kind otherwise.
    std::optional<std::vector<std::string>> metrics;
};

struct MetricsSpec {
    std::vector<std::string> names{"ndcg", "auc"};
    int k = 10;
    double positive_threshold = 4.0;
};

struct OutputSpec {
    std::filesystem::path directory = ".";
    bool write_json = true;
    bool write_csv = true;
    bool chart = false;
};

// The one record a run is driven by. At most one robustness section may be
// present (one perturbation per run).
struct RobustnessConfig {
    DatasetSpec dataset;
    SplitSpec split;
    std::vector<ModelSpec> models;
    MetricsSpec metrics;

    std::optional<SubpopulationPredicate> subpopulation;
    std::optional<ShiftTarget> shift;
    std::optional<TransformSpec> transformation;
    std::optional<AttackSpec> attack;
    std::optional<SparsitySpec> sparsity;

    std::uint64_t seed = 0;
    int threads = 0;
    OutputSpec output;

    // Structural parsing + validation; throws ConfigError naming the field.
    static RobustnessConfig parse(const nlohmann::json& j);
    static RobustnessConfig load(const std::filesystem::path& path);

    // Normalized echo with defaults applied; embedded in reports.
    nlohmann::json to_json() const;

    int robustness_section_count() const;
    // "subpopulation" | "shift" | "transformation" | "attack" | "sparsity"
    std::optional<std::string> robustness_kind() const;
};

// Known metric names ("ndcg", "recall", "hit", "auc", "rmse").
std::vector<std::string> known_metric_names();

Dataset load_dataset(const DatasetSpec& spec);

}  // namespace recrobust
