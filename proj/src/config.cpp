#include "recrobust/config.hpp"

#include <algorithm>
#include <fstream>

#include "recrobust/common.hpp"
#include "recrobust/models.hpp"

namespace recrobust {

using nlohmann::json;

std::vector<std::string> known_metric_names() {
    return {"auc", "hit", "ndcg", "recall", "rmse"};
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& field) {
    if (!j.is_object() || !j.contains(key)) fail(field + "." + key, "missing required key");
    return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& field) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        fail(field, "has the wrong type");
    }
}

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& field) {
    if (!j.is_object()) fail(field, "must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end())
            fail(field + "." + key, "unknown key");
}

Side parse_side(const json& j, const std::string& field) {
    const auto s = get_as<std::string>(j, field);
    if (s == "user") return Side::User;
    if (s == "item") return Side::Item;
    fail(field, "must be 'user' or 'item'");
}

SubpopulationPredicate parse_predicate(const json& j, const std::string& field) {
    SubpopulationPredicate p;
    const auto kind = get_as<std::string>(require(j, "kind", field), field + ".kind");
    if (kind == "feature_equals") {
        check_keys(j, {"kind", "side", "feature", "value"}, field);
        p.kind = SubpopulationPredicate::Kind::FeatureEquals;
        if (j.contains("side")) p.side = parse_side(j.at("side"), field + ".side");
        p.feature = get_as<std::string>(require(j, "feature", field), field + ".feature");
        const auto& v = require(j, "value", field);
        p.value = v.is_string() ? v.get<std::string>() : v.dump();
    } else if (kind == "activity_band") {
        check_keys(j, {"kind", "lower_quantile", "upper_quantile"}, field);
        p.kind = SubpopulationPredicate::Kind::ActivityBand;
        p.lower = get_as<double>(require(j, "lower_quantile", field), field + ".lower_quantile");
        p.upper = get_as<double>(require(j, "upper_quantile", field), field + ".upper_quantile");
    } else if (kind == "mean_rating_band") {
        check_keys(j, {"kind", "lower", "upper"}, field);
        p.kind = SubpopulationPredicate::Kind::MeanRatingBand;
        p.lower = get_as<double>(require(j, "lower", field), field + ".lower");
        p.upper = get_as<double>(require(j, "upper", field), field + ".upper");
    } else {
        fail(field + ".kind",
             "must be one of feature_equals, activity_band, mean_rating_band");
    }
    return p;
}

json predicate_to_json(const SubpopulationPredicate& p) {
    json j;
    switch (p.kind) {
        case SubpopulationPredicate::Kind::FeatureEquals:
            j["kind"] = "feature_equals";
            j["side"] = p.side == Side::User ? "user" : "item";
            j["feature"] = p.feature;
            j["value"] = p.value;
            break;
        case SubpopulationPredicate::Kind::ActivityBand:
            j["kind"] = "activity_band";
            j["lower_quantile"] = p.lower;
            j["upper_quantile"] = p.upper;
            break;
        case SubpopulationPredicate::Kind::MeanRatingBand:
            j["kind"] = "mean_rating_band";
            j["lower"] = p.lower;
            j["upper"] = p.upper;
            break;
    }
    return j;
}

}  // namespace

RobustnessConfig RobustnessConfig::parse(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(j,
               {"dataset", "split", "models", "metrics", "subpopulation", "shift",
                "transformation", "attack", "sparsity", "seed", "threads", "output"},
               "config");

    RobustnessConfig c;

    const json& ds = require(j, "dataset", "config");
    check_keys(ds, {"kind", "path", "interactions", "user_features", "item_features", "schema"},
               "dataset");
    c.dataset.kind = get_as<std::string>(require(ds, "kind", "dataset"), "dataset.kind");
    if (c.dataset.kind == "movielens") {
        c.dataset.path = get_as<std::string>(require(ds, "path", "dataset"), "dataset.path");
    } else if (c.dataset.kind == "generic") {
        c.dataset.interactions = get_as<std::string>(require(ds, "interactions", "dataset"),
                                                     "dataset.interactions");
        c.dataset.schema =
            get_as<std::string>(require(ds, "schema", "dataset"), "dataset.schema");
        if (ds.contains("user_features"))
            c.dataset.user_features =
                get_as<std::string>(ds.at("user_features"), "dataset.user_features");
        if (ds.contains("item_features"))
            c.dataset.item_features =
                get_as<std::string>(ds.at("item_features"), "dataset.item_features");
    } else {
        fail("dataset.kind", "must be 'movielens' or 'generic'");
    }

    if (j.contains("split")) {
        const json& sp = j.at("split");
        check_keys(sp, {"ratios", "seed"}, "split");
        if (sp.contains("ratios")) {
            const auto r = get_as<std::vector<double>>(sp.at("ratios"), "split.ratios");
            if (r.size() != 3) fail("split.ratios", "must hold exactly three ratios");
            c.split.ratios = {r[0], r[1], r[2]};
        }
        if (sp.contains("seed"))
            c.split.seed = get_as<std::uint64_t>(sp.at("seed"), "split.seed");
    }

    const json& models = require(j, "models", "config");
    if (!models.is_array() || models.empty()) fail("models", "must be a non-empty array");
    for (std::size_t m = 0; m < models.size(); ++m) {
        const std::string field = "models[" + std::to_string(m) + "]";
        const json& mj = models.at(m);
        if (!mj.is_object()) fail(field, "must be an object");
        ModelSpec spec;
        spec.name = get_as<std::string>(require(mj, "name", field), field + ".name");
        const auto known = known_model_names();
        if (std::find(known.begin(), known.end(), spec.name) == known.end()) {
            std::string names;
            for (const auto& n : known) names += (names.empty() ? "" : ", ") + n;
            fail(field + ".name", "unknown model '" + spec.name + "' (known: " + names + ")");
        }
        spec.hyper = mj;
        spec.hyper.erase("name");
        if (mj.contains("metrics")) {
            spec.metrics =
                get_as<std::vector<std::string>>(mj.at("metrics"), field + ".metrics");
            spec.hyper.erase("metrics");
        }
        c.models.push_back(std::move(spec));
    }

    if (j.contains("metrics")) {
        const json& me = j.at("metrics");
        check_keys(me, {"names", "k", "positive_threshold"}, "metrics");
        if (me.contains("names"))
            c.metrics.names = get_as<std::vector<std::string>>(me.at("names"), "metrics.names");
        if (me.contains("k")) c.metrics.k = get_as<int>(me.at("k"), "metrics.k");
        if (me.contains("positive_threshold"))
            c.metrics.positive_threshold =
                get_as<double>(me.at("positive_threshold"), "metrics.positive_threshold");
    }
    if (c.metrics.k < 1) fail("metrics.k", "must be >= 1");
    const auto known_metrics = known_metric_names();
    for (const auto& name : c.metrics.names)
        if (std::find(known_metrics.begin(), known_metrics.end(), name) == known_metrics.end())
            fail("metrics.names", "unknown metric '" + name + "'");
    for (const auto& m : c.models)
        if (m.metrics)
            for (const auto& name : *m.metrics)
                if (std::find(known_metrics.begin(), known_metrics.end(), name) ==
                    known_metrics.end())
                    fail("models.metrics", "unknown metric '" + name + "'");

    if (j.contains("subpopulation"))
        c.subpopulation = parse_predicate(j.at("subpopulation"), "subpopulation");

    if (j.contains("shift")) {
        const json& sh = j.at("shift");
        check_keys(sh, {"side", "feature", "target_marginals"}, "shift");
        ShiftTarget t;
        if (sh.contains("side")) t.side = parse_side(sh.at("side"), "shift.side");
        t.feature = get_as<std::string>(require(sh, "feature", "shift"), "shift.feature");
        const json& tm = require(sh, "target_marginals", "shift");
        if (!tm.is_object()) fail("shift.target_marginals", "must be an object");
        for (const auto& [value, p] : tm.items())
            t.target_marginals[value] = get_as<double>(p, "shift.target_marginals");
        c.shift = std::move(t);
    }

    if (j.contains("transformation")) {
        const json& tr = j.at("transformation");
        check_keys(tr, {"side", "feature", "mode", "delta", "affected_fraction"},
                   "transformation");
        TransformSpec t;
        if (tr.contains("side")) t.side = parse_side(tr.at("side"), "transformation.side");
        t.feature = get_as<std::string>(require(tr, "feature", "transformation"),
                                        "transformation.feature");
        const auto mode = get_as<std::string>(require(tr, "mode", "transformation"),
                                              "transformation.mode");
        if (mode == "random")
            t.mode = TransformMode::Random;
        else if (mode == "structured")
            t.mode = TransformMode::Structured;
        else
            fail("transformation.mode", "must be 'random' or 'structured'");
        if (tr.contains("delta"))
            t.delta = get_as<double>(tr.at("delta"), "transformation.delta");
        if (tr.contains("affected_fraction"))
            t.affected_fraction =
                get_as<double>(tr.at("affected_fraction"), "transformation.affected_fraction");
        if (t.mode == TransformMode::Structured && !(t.delta > 0.0))
            fail("transformation.delta", "must be > 0 in structured mode");
        if (!(t.affected_fraction >= 0.0 && t.affected_fraction <= 1.0))
            fail("transformation.affected_fraction", "must lie in [0, 1]");
        c.transformation = std::move(t);
    }

    if (j.contains("attack")) {
        const json& at = j.at("attack");
        check_keys(at, {"fraction"}, "attack");
        AttackSpec a;
        a.fraction = get_as<double>(require(at, "fraction", "attack"), "attack.fraction");
        if (!(a.fraction >= 0.0 && a.fraction <= 1.0))
            fail("attack.fraction", "must lie in [0, 1]");
        c.attack = a;
    }

    if (j.contains("sparsity")) {
        const json& sp = j.at("sparsity");
        check_keys(sp, {"fraction", "user_filter"}, "sparsity");
        SparsitySpec s;
        s.fraction = get_as<double>(require(sp, "fraction", "sparsity"), "sparsity.fraction");
        if (!(s.fraction >= 0.0 && s.fraction <= 1.0))
            fail("sparsity.fraction", "must lie in [0, 1]");
        if (sp.contains("user_filter"))
            s.user_filter = parse_predicate(sp.at("user_filter"), "sparsity.user_filter");
        c.sparsity = std::move(s);
    }

    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j.at("seed"), "seed");
    if (j.contains("threads")) c.threads = get_as<int>(j.at("threads"), "threads");

    if (j.contains("output")) {
        const json& out = j.at("output");
        check_keys(out, {"directory", "formats", "chart"}, "output");
        if (out.contains("directory"))
            c.output.directory = get_as<std::string>(out.at("directory"), "output.directory");
        if (out.contains("formats")) {
            const auto formats =
                get_as<std::vector<std::string>>(out.at("formats"), "output.formats");
            c.output.write_json = false;
            c.output.write_csv = false;
            for (const auto& f : formats) {
                if (f == "json")
                    c.output.write_json = true;
                else if (f == "csv")
                    c.output.write_csv = true;
                else
                    fail("output.formats", "unknown format '" + f + "'");
            }
        }
        if (out.contains("chart"))
            c.output.chart = get_as<bool>(out.at("chart"), "output.chart");
    }

    if (c.robustness_section_count() > 1)
        throw ConfigError(
            "config: at most one robustness section may be present "
            "(subpopulation | shift | transformation | attack | sparsity)");

    return c;
}

RobustnessConfig RobustnessConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);  // allow comments
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return parse(j);
}

json RobustnessConfig::to_json() const {
    json j;
    j["dataset"]["kind"] = dataset.kind;
    if (dataset.kind == "movielens") {
        j["dataset"]["path"] = dataset.path.string();
    } else {
        j["dataset"]["interactions"] = dataset.interactions.string();
        j["dataset"]["schema"] = dataset.schema.string();
        if (dataset.user_features)
            j["dataset"]["user_features"] = dataset.user_features->string();
        if (dataset.item_features)
            j["dataset"]["item_features"] = dataset.item_features->string();
    }
    j["split"]["ratios"] = split.ratios;
    if (split.seed) j["split"]["seed"] = *split.seed;
    j["models"] = json::array();
    for (const auto& m : models) {
        json mj = m.hyper;
        mj["name"] = m.name;
        if (m.metrics) mj["metrics"] = *m.metrics;
        j["models"].push_back(std::move(mj));
    }
    j["metrics"]["names"] = metrics.names;
    j["metrics"]["k"] = metrics.k;
    j["metrics"]["positive_threshold"] = metrics.positive_threshold;
    if (subpopulation) j["subpopulation"] = predicate_to_json(*subpopulation);
    if (shift) {
        j["shift"]["side"] = shift->side == Side::User ? "user" : "item";
        j["shift"]["feature"] = shift->feature;
        j["shift"]["target_marginals"] = shift->target_marginals;
    }
    if (transformation) {
        j["transformation"]["side"] = transformation->side == Side::User ? "user" : "item";
        j["transformation"]["feature"] = transformation->feature;
        j["transformation"]["mode"] =
            transformation->mode == TransformMode::Random ? "random" : "structured";
        if (transformation->mode == TransformMode::Structured)
            j["transformation"]["delta"] = transformation->delta;
        j["transformation"]["affected_fraction"] = transformation->affected_fraction;
    }
    if (attack) j["attack"]["fraction"] = attack->fraction;
    if (sparsity) {
        j["sparsity"]["fraction"] = sparsity->fraction;
        if (sparsity->user_filter)
            j["sparsity"]["user_filter"] = predicate_to_json(*sparsity->user_filter);
    }
    j["seed"] = seed;
    j["threads"] = threads;
    j["output"]["directory"] = output.directory.string();
    json formats = json::array();
    if (output.write_json) formats.push_back("json");
    if (output.write_csv) formats.push_back("csv");
    j["output"]["formats"] = std::move(formats);
    j["output"]["chart"] = output.chart;
    return j;
}

int RobustnessConfig::robustness_section_count() const {
    int n = 0;
    n += subpopulation.has_value();
    n += shift.has_value();
    n += transformation.has_value();
    n += attack.has_value();
    n += sparsity.has_value();
    return n;
}

std::optional<std::string> RobustnessConfig::robustness_kind() const {
    if (subpopulation) return "subpopulation";
    if (shift) return "shift";
    if (transformation) return "transformation";
    if (attack) return "attack";
    if (sparsity) return "sparsity";
    return std::nullopt;
}

Dataset load_dataset(const DatasetSpec& spec) {
    if (spec.kind == "movielens") return load_movielens(spec.path);
    if (spec.kind == "generic")
        return load_generic(spec.interactions, spec.user_features, spec.item_features,
                            spec.schema);
    throw ConfigError("dataset.kind: must be 'movielens' or 'generic'");
}

}  // namespace recrobust
