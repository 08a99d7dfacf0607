// Times the OpenMP kernels against their serial reference implementations on
// an ML-100k-shaped synthetic corpus and checks that both produce identical
// results while doing so.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "recrobust/datagen.hpp"
#include "recrobust/eval.hpp"
#include "recrobust/kernels.hpp"
#include "recrobust/models.hpp"

using namespace recrobust;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t neighbors_fingerprint(const std::vector<std::vector<Neighbor>>& rows) {
    Fnv1a h;
    for (const auto& row : rows) {
        h.update_u64(row.size());
        for (const auto& n : row) {
            h.update_u64(n.item);
            h.update_double(n.sim);
        }
    }
    return h.digest();
}

std::uint64_t metrics_fingerprint(const std::map<std::string, MetricValue>& m) {
    Fnv1a h;
    for (const auto& [label, mv] : m) {
        h.update(label);
        h.update_double(mv.value);
        h.update_u64(mv.n);
    }
    return h.digest();
}

void report_line(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s serial %9.1f ms   parallel %9.1f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel benchmark"};
    bool quick = false;
    int threads = 0;
    app.add_flag("--quick", quick, "small corpus for smoke runs");
    app.add_option("--threads", threads, "parallel thread count (0 = default)");
    CLI11_PARSE(app, argc, argv);

    datagen::Ml100kOptions gen;
    if (quick) {
        gen.n_users = 200;
        gen.n_items = 400;
        gen.n_interactions = 8000;
    }
    const auto dir =
        std::filesystem::temp_directory_path() /
        ("recrobust-bench-" + std::to_string(gen.n_users) + "-" + std::to_string(gen.seed));
    datagen::write_ml100k(dir, gen);
    const Dataset dataset = load_movielens(dir);
    const Split split = split_ratio(dataset, {0.8, 0.1, 0.1}, 7);
    std::cout << "corpus: " << dataset.interactions.size() << " interactions, "
              << dataset.all_user_ids().size() << " users, " << dataset.all_item_ids().size()
              << " items, threads=" << resolve_threads(threads) << "\n";

    // item-item similarity
    {
        std::vector<std::uint32_t> us, is;
        std::vector<double> rs;
        std::map<std::string, std::uint32_t> uidx, iidx;
        for (std::size_t idx : split.train) {
            const auto& x = dataset.interactions[idx];
            if (!uidx.count(x.user_id))
                uidx.emplace(x.user_id, static_cast<std::uint32_t>(uidx.size()));
            if (!iidx.count(x.item_id))
                iidx.emplace(x.item_id, static_cast<std::uint32_t>(iidx.size()));
            us.push_back(uidx.at(x.user_id));
            is.push_back(iidx.at(x.item_id));
            rs.push_back(x.rating);
        }
        const RatingMatrix m = build_rating_matrix(
            static_cast<std::uint32_t>(uidx.size()), static_cast<std::uint32_t>(iidx.size()),
            us, is, rs);

        auto t0 = Clock::now();
        const auto serial = item_topk_similarity_serial(m, 100, 0.0);
        const double serial_ms = ms_since(t0);
        t0 = Clock::now();
        const auto parallel = item_topk_similarity(m, 100, 0.0, threads);
        const double parallel_ms = ms_since(t0);
        report_line("item_topk_similarity", serial_ms, parallel_ms,
                    neighbors_fingerprint(serial) == neighbors_fingerprint(parallel));
    }

    // full-ranking evaluation
    {
        BprHyper hyper;
        hyper.epochs = quick ? 3 : 5;
        BprModel model(hyper);
        model.fit(dataset, split.train, 13);
        const EvalContext ctx{&dataset.user_features, &dataset.item_features};
        RankingOptions options;
        options.metric_names = {"ndcg", "recall", "hit"};
        options.threads = threads;

        auto t0 = Clock::now();
        const auto serial =
            evaluate_ranking_serial(model, dataset, split.test, split.train, ctx, options);
        const double serial_ms = ms_since(t0);
        t0 = Clock::now();
        const auto parallel =
            evaluate_ranking(model, dataset, split.test, split.train, ctx, options);
        const double parallel_ms = ms_since(t0);
        report_line("evaluate_ranking (bpr)", serial_ms, parallel_ms,
                    metrics_fingerprint(serial) == metrics_fingerprint(parallel));
    }

    // batch scoring for AUC
    {
        FmHyper hyper;
        hyper.epochs = quick ? 3 : 5;
        FmModel model(hyper);
        model.fit(dataset, split.train, 17);
        const EvalContext ctx{&dataset.user_features, &dataset.item_features};

        auto t0 = Clock::now();
        const auto serial = evaluate_auc_serial(model, dataset, split.test, ctx, 4.0);
        const double serial_ms = ms_since(t0);
        t0 = Clock::now();
        const auto parallel = evaluate_auc(model, dataset, split.test, ctx, 4.0, threads);
        const double parallel_ms = ms_since(t0);
        report_line("evaluate_auc (fm)", serial_ms, parallel_ms,
                    serial.has_value() == parallel.has_value() &&
                        (!serial || serial->value == parallel->value));
    }

    std::filesystem::remove_all(dir);
    return 0;
}
