#include <fstream>
#include <ostream>
#include <sstream>

#include "recrobust/common.hpp"
#include "recrobust/harness.hpp"

namespace recrobust {

using nlohmann::json;

namespace {

json metric_value_to_json(const MetricValue& mv) {
    json j;
    j["name"] = mv.name;
    j["value"] = mv.value;
    if (mv.k) j["k"] = *mv.k;
    j["n"] = mv.n;
    return j;
}

MetricValue metric_value_from_json(const json& j) {
    MetricValue mv;
    mv.name = j.at("name").get<std::string>();
    mv.value = j.at("value").get<double>();
    if (j.contains("k")) mv.k = j.at("k").get<int>();
    mv.n = j.at("n").get<std::size_t>();
    return mv;
}

}  // namespace

bool EvalReport::has_pct_entries() const {
    for (const auto& e : entries)
        if (e.pct_change) return true;
    return false;
}

json EvalReport::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["config"] = config_echo;
    j["seed"] = seed;

    json st;
    st["n_users"] = stats.n_users;
    st["n_items"] = stats.n_items;
    st["n_interactions"] = stats.n_interactions;
    st["split_sizes"] = {{"train", stats.train_size},
                         {"valid", stats.valid_size},
                         {"test", stats.test_size}};
    st["train_user_marginals"] = stats.train_user_marginals;
    st["train_item_marginals"] = stats.train_item_marginals;
    st["activity_quantiles"] = stats.activity_quantiles;
    j["dataset_stats"] = std::move(st);

    if (perturbation) {
        json p;
        p["kind"] = perturbation->kind;
        p["detail"] = perturbation->detail;
        if (perturbation->subset_size) p["subset_size"] = *perturbation->subset_size;
        j["perturbation"] = std::move(p);
    }
    j["fits_per_model"] = fits_per_model;

    j["entries"] = json::array();
    for (const auto& e : entries) {
        json ej;
        ej["model"] = e.model;
        ej["metric"] = e.metric;
        ej["baseline"] = e.baseline ? metric_value_to_json(*e.baseline) : json(nullptr);
        ej["perturbed"] = e.perturbed ? metric_value_to_json(*e.perturbed) : json(nullptr);
        ej["pct_change"] = e.pct_change ? json(*e.pct_change) : json(nullptr);
        if (!e.reason.empty()) ej["reason"] = e.reason;
        j["entries"].push_back(std::move(ej));
    }
    return j;
}

EvalReport EvalReport::from_json(const json& j) {
    EvalReport r;
    try {
        r.schema_version = j.at("schema_version").get<int>();
        r.config_echo = j.at("config");
        r.seed = j.at("seed").get<std::uint64_t>();

        const json& st = j.at("dataset_stats");
        r.stats.n_users = st.at("n_users").get<std::size_t>();
        r.stats.n_items = st.at("n_items").get<std::size_t>();
        r.stats.n_interactions = st.at("n_interactions").get<std::size_t>();
        r.stats.train_size = st.at("split_sizes").at("train").get<std::size_t>();
        r.stats.valid_size = st.at("split_sizes").at("valid").get<std::size_t>();
        r.stats.test_size = st.at("split_sizes").at("test").get<std::size_t>();
        using Marginals = std::map<std::string, std::map<std::string, double>>;
        r.stats.train_user_marginals = st.at("train_user_marginals").get<Marginals>();
        r.stats.train_item_marginals = st.at("train_item_marginals").get<Marginals>();
        r.stats.activity_quantiles =
            st.at("activity_quantiles").get<std::map<std::string, double>>();

        if (j.contains("perturbation")) {
            PerturbationInfo p;
            p.kind = j.at("perturbation").at("kind").get<std::string>();
            p.detail = j.at("perturbation").at("detail");
            if (j.at("perturbation").contains("subset_size"))
                p.subset_size = j.at("perturbation").at("subset_size").get<std::size_t>();
            r.perturbation = std::move(p);
        }
        r.fits_per_model = j.at("fits_per_model").get<std::size_t>();

        for (const auto& ej : j.at("entries")) {
            ReportEntry e;
            e.model = ej.at("model").get<std::string>();
            e.metric = ej.at("metric").get<std::string>();
            if (!ej.at("baseline").is_null())
                e.baseline = metric_value_from_json(ej.at("baseline"));
            if (!ej.at("perturbed").is_null())
                e.perturbed = metric_value_from_json(ej.at("perturbed"));
            if (!ej.at("pct_change").is_null())
                e.pct_change = ej.at("pct_change").get<double>();
            e.reason = ej.value("reason", "");
            r.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
    return r;
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "model,metric,baseline,perturbed,pct_change\n";
    for (const auto& e : entries) {
        out << e.model << ',' << e.metric << ',';
        if (e.baseline) out << format_double(e.baseline->value);
        out << ',';
        if (e.perturbed) out << format_double(e.perturbed->value);
        out << ',';
        if (e.pct_change) out << format_double(*e.pct_change);
        out << '\n';
    }
    return out.str();
}

EmitPaths emit_report(const EvalReport& report, const std::filesystem::path& dir,
                      bool write_json, bool write_csv) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir))
        throw Error("cannot create output directory '" + dir.string() + "'");

    EmitPaths paths;
    if (write_json) {
        paths.json = dir / "report.json";
        std::ofstream out(paths.json);
        if (!out) throw Error("cannot write '" + paths.json.string() + "'");
        out << report.to_json().dump(2) << '\n';
    }
    if (write_csv) {
        paths.csv = dir / "report.csv";
        std::ofstream out(paths.csv);
        if (!out) throw Error("cannot write '" + paths.csv.string() + "'");
        out << report.to_csv();
    }
    {
        paths.meta = dir / "run_meta.json";
        std::ofstream out(paths.meta);
        if (!out) throw Error("cannot write '" + paths.meta.string() + "'");
        json meta;
        meta["wall_clock_seconds"] = report.wall_clock_seconds;
        out << meta.dump(2) << '\n';
    }
    return paths;
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open report '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("report '" + path.string() + "': " + e.what());
    }
    return EvalReport::from_json(j);
}

void print_table(const EvalReport& report, std::ostream& out) {
    out << report.to_csv();
}

}  // namespace recrobust
