#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recrobust/config.hpp"
#include "recrobust/metrics.hpp"

namespace recrobust {

struct ReportEntry {
    std::string model;
    std::string metric;  // labeled, e.g. "ndcg@10"
    std::optional<MetricValue> baseline;
    std::optional<MetricValue> perturbed;
    std::optional<double> pct_change;
    // Non-empty when perturbed/pct_change is absent: "empty_subset",
    // "baseline_zero", "single_class_labels", "metric_unsupported_by_model",
    // "no_contributing_users", "no_perturbation".
    std::string reason;

    bool operator==(const ReportEntry&) const = default;
};

struct DatasetStats {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::size_t n_interactions = 0;
    std::size_t train_size = 0;
    std::size_t valid_size = 0;
    std::size_t test_size = 0;
    // Interaction-weighted train marginals of categorical features with
    // domains of at most 32 values.
    std::map<std::string, std::map<std::string, double>> train_user_marginals;
    std::map<std::string, std::map<std::string, double>> train_item_marginals;
    // min/q25/median/q75/max of per-user train interaction counts.
    std::map<std::string, double> activity_quantiles;

    bool operator==(const DatasetStats&) const = default;
};

struct PerturbationInfo {
    std::string kind;
    nlohmann::json detail;  // echo of the section
    // Size of the sliced/shifted test subset (subpopulation/shift) or of the
    // kept train set (sparsity).
    std::optional<std::size_t> subset_size;

    bool operator==(const PerturbationInfo&) const = default;
};

struct EvalReport {
    int schema_version = 1;
    nlohmann::json config_echo;
    std::uint64_t seed = 0;
    DatasetStats stats;
    std::optional<PerturbationInfo> perturbation;
    std::vector<ReportEntry> entries;
    // How many times each model was fitted (2 for train-side perturbations).
    std::size_t fits_per_model = 1;
    // Volatile; written to run_meta.json, never to report.json.
    double wall_clock_seconds = 0.0;

    nlohmann::json to_json() const;  // deterministic content only
    static EvalReport from_json(const nlohmann::json& j);
    std::string to_csv() const;

    bool has_pct_entries() const;
};

// Executes the full protocol for one config: load, split, fit baselines,
// apply the robustness section on the correct side (train-side sections
// refit, test-side sections re-evaluate), compute metrics + percent changes.
EvalReport run_experiment(const RobustnessConfig& config);

struct EmitPaths {
    std::filesystem::path json;
    std::filesystem::path csv;
    std::filesystem::path meta;
};

// report.json + report.csv (same numbers, same textual form) and
// run_meta.json (wall clock).
EmitPaths emit_report(const EvalReport& report, const std::filesystem::path& dir,
                      bool write_json, bool write_csv);

// Standalone SVG bar chart of the percent changes, one bar per model x
// metric, zero line drawn, labeled bars. Throws ConfigError when the report
// has no percent-change entries.
std::string render_chart_svg(const EvalReport& report);
void emit_chart(const EvalReport& report, const std::filesystem::path& path);

EvalReport load_report(const std::filesystem::path& path);

// The percent-change table printed by the CLI; identical to report.csv.
void print_table(const EvalReport& report, std::ostream& out);

// Stats shown by `inspect` (also embedded in every report).
DatasetStats compute_dataset_stats(const Dataset& dataset, const Split& split);

}  // namespace recrobust
