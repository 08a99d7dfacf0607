#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "recrobust/common.hpp"
#include "recrobust/harness.hpp"
#include "recrobust/rng.hpp"

namespace {

using namespace recrobust;

int cmd_run(const std::string& config_path, const std::string& out_dir, bool seed_set,
            std::uint64_t seed, bool chart) {
    RobustnessConfig config = RobustnessConfig::load(config_path);
    if (seed_set) config.seed = seed;
    if (!out_dir.empty()) config.output.directory = out_dir;
    if (chart) config.output.chart = true;

    const EvalReport report = run_experiment(config);
    emit_report(report, config.output.directory, config.output.write_json,
                config.output.write_csv);
    if (config.output.chart)
        emit_chart(report, config.output.directory / "chart.svg");
    print_table(report, std::cout);
    return 0;
}

int cmd_inspect(const std::string& config_path) {
    const RobustnessConfig config = RobustnessConfig::load(config_path);
    const Dataset dataset = load_dataset(config.dataset);
    const std::uint64_t split_seed =
        config.split.seed ? *config.split.seed : derive_seed(config.seed, "split");
    const Split split = split_ratio(dataset, config.split.ratios, split_seed);
    const DatasetStats stats = compute_dataset_stats(dataset, split);

    std::cout << "users: " << stats.n_users << "\n";
    std::cout << "items: " << stats.n_items << "\n";
    std::cout << "interactions: " << stats.n_interactions << "\n";
    std::cout << "split: train=" << stats.train_size << " valid=" << stats.valid_size
              << " test=" << stats.test_size << " seed=" << split_seed << "\n";
    auto print_marginals = [](const char* side,
                              const std::map<std::string, std::map<std::string, double>>& m) {
        if (m.empty()) return;
        std::cout << "train " << side << " feature marginals:\n";
        for (const auto& [feature, values] : m) {
            std::cout << "  " << feature << ":";
            for (const auto& [value, p] : values)
                std::cout << ' ' << value << '=' << format_double(p);
            std::cout << "\n";
        }
    };
    print_marginals("user", stats.train_user_marginals);
    print_marginals("item", stats.train_item_marginals);
    if (!stats.activity_quantiles.empty()) {
        std::cout << "train interactions per user:";
        for (const char* key : {"min", "q25", "median", "q75", "max"}) {
            auto it = stats.activity_quantiles.find(key);
            if (it != stats.activity_quantiles.end())
                std::cout << ' ' << key << '=' << format_double(it->second);
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_chart(const std::string& report_path, const std::string& output_path) {
    const EvalReport report = load_report(report_path);
    emit_chart(report, output_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robustness evaluation toolkit for recommender models"};
    app.require_subcommand(1);

    std::string config_path, out_dir, report_path, output_path;
    std::uint64_t seed = 0;
    bool chart = false;
    bool verbose = false;

    auto* run = app.add_subcommand(
        "run", "execute one experiment from a config and write report files");
    run->add_option("--config", config_path, "config file (JSON)")->required();
    run->add_option("--out-dir", out_dir, "override output.directory");
    auto* seed_opt = run->add_option("--seed", seed, "override the global seed");
    run->add_flag("--chart", chart, "also write chart.svg");
    run->add_flag("--verbose", verbose, "epoch progress on stderr");

    auto* inspect = app.add_subcommand(
        "inspect", "print dataset statistics and train-side feature marginals");
    inspect->add_option("--config", config_path, "config file (JSON)")->required();
    inspect->add_flag("--verbose", verbose, "extra progress on stderr");

    auto* chart_cmd =
        app.add_subcommand("chart", "render the SVG chart for a saved report");
    chart_cmd->add_option("report", report_path, "report.json produced by run")->required();
    chart_cmd->add_option("output", output_path, "output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    recrobust::logging::set_verbose(verbose);

    try {
        if (run->parsed())
            return cmd_run(config_path, out_dir, seed_opt->count() > 0, seed, chart);
        if (inspect->parsed()) return cmd_inspect(config_path);
        if (chart_cmd->parsed()) return cmd_chart(report_path, output_path);
    } catch (const recrobust::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const recrobust::DataError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
