#include "recrobust/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "recrobust/rng.hpp"

namespace recrobust {

namespace {

const FeatureTable& side_table(const Dataset& dataset, Side side) {
    return side == Side::User ? dataset.user_features : dataset.item_features;
}

const std::string& side_entity(const Interaction& x, Side side) {
    return side == Side::User ? x.user_id : x.item_id;
}

std::pair<std::size_t, const FeatureSchema*> require_feature(const Dataset& dataset, Side side,
                                                             const std::string& feature) {
    const FeatureTable& table = side_table(dataset, side);
    auto idx = table.feature_index(feature);
    if (!idx)
        throw ConfigError("unknown " + std::string(side == Side::User ? "user" : "item") +
                          " feature '" + feature + "'");
    return {*idx, &table.schema[*idx]};
}

bool feature_value_equals(const FeatureValue& v, const FeatureSchema& schema,
                          const std::string& wanted) {
    if (schema.kind == FeatureKind::Categorical) return std::get<std::string>(v) == wanted;
    std::size_t pos = 0;
    double w = 0.0;
    try {
        w = std::stod(wanted, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != wanted.size())
        throw ConfigError("predicate value '" + wanted + "' is not numeric but feature '" +
                          schema.name + "' is");
    return std::get<double>(v) == w;
}

// Users inside the half-open quantile band [lower, upper) of the activity
// ranking. Ranks are (count asc, id asc) over users with train history.
std::set<std::string> users_in_activity_band(const Dataset& dataset,
                                             std::span<const std::size_t> train_indices,
                                             double lower, double upper) {
    auto counts = user_activity(dataset, train_indices);
    std::vector<std::pair<std::size_t, std::string>> ranked;
    ranked.reserve(counts.size());
    for (const auto& [id, c] : counts) ranked.emplace_back(c, id);
    std::sort(ranked.begin(), ranked.end());
    std::set<std::string> keep;
    const double m = static_cast<double>(ranked.size());
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        double pos = static_cast<double>(r) / m;
        if (pos >= lower && pos < upper) keep.insert(ranked[r].second);
    }
    return keep;
}

std::set<std::string> users_in_mean_rating_band(const Dataset& dataset,
                                                std::span<const std::size_t> train_indices,
                                                double lower, double upper) {
    auto means = user_mean_rating(dataset, train_indices);
    std::set<std::string> keep;
    for (const auto& [id, mean] : means)
        if (mean >= lower && mean <= upper) keep.insert(id);
    return keep;
}

}  // namespace

void SubpopulationPredicate::validate(const Dataset& dataset) const {
    switch (kind) {
        case Kind::FeatureEquals:
            require_feature(dataset, side, feature);
            break;
        case Kind::ActivityBand:
            if (!(lower >= 0.0 && lower <= upper && upper <= 1.0))
                throw ConfigError("activity band requires 0 <= lower <= upper <= 1");
            break;
        case Kind::MeanRatingBand:
            if (!(lower <= upper))
                throw ConfigError("mean rating band requires lower <= upper");
            break;
    }
}

std::vector<std::size_t> slice_subpopulation(const Dataset& dataset,
                                             std::span<const std::size_t> test_indices,
                                             std::span<const std::size_t> train_indices,
                                             const SubpopulationPredicate& predicate) {
    predicate.validate(dataset);
    std::vector<std::size_t> out;

    if (predicate.kind == SubpopulationPredicate::Kind::FeatureEquals) {
        auto [fidx, schema] = require_feature(dataset, predicate.side, predicate.feature);
        const FeatureTable& table = side_table(dataset, predicate.side);
        for (std::size_t idx : test_indices) {
            const auto& id = side_entity(dataset.interactions[idx], predicate.side);
            const FeatureValue* v = table.find(id, fidx);
            if (v && feature_value_equals(*v, *schema, predicate.value)) out.push_back(idx);
        }
        return out;
    }

    // Band predicates are user-side; users without train history never match.
    std::set<std::string> keep =
        predicate.kind == SubpopulationPredicate::Kind::ActivityBand
            ? users_in_activity_band(dataset, train_indices, predicate.lower, predicate.upper)
            : users_in_mean_rating_band(dataset, train_indices, predicate.lower, predicate.upper);
    for (std::size_t idx : test_indices)
        if (keep.count(dataset.interactions[idx].user_id)) out.push_back(idx);
    return out;
}

void ShiftTarget::validate(const Dataset& dataset) const {
    auto [fidx, schema] = require_feature(dataset, side, feature);
    (void)fidx;
    if (schema->kind != FeatureKind::Categorical)
        throw ConfigError("distribution shift requires a categorical feature, '" + feature +
                          "' is numeric");
    if (target_marginals.empty()) throw ConfigError("shift target_marginals is empty");
    double sum = 0.0;
    for (const auto& [value, p] : target_marginals) {
        if (p < 0.0) throw ConfigError("shift proportion for '" + value + "' is negative");
        if (std::find(schema->domain.begin(), schema->domain.end(), value) ==
            schema->domain.end())
            throw ConfigError("shift value '" + value + "' not in the domain of '" + feature +
                              "'");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("shift proportions must sum to 1, got " + format_double(sum));
}

std::vector<std::size_t> shift_distribution(const Dataset& dataset,
                                            std::span<const std::size_t> test_indices,
                                            const ShiftTarget& target,
                                            std::uint64_t seed) {
    target.validate(dataset);
    auto [fidx, schema] = require_feature(dataset, target.side, target.feature);
    (void)schema;
    const FeatureTable& table = side_table(dataset, target.side);

    // Candidate positions per target value, in test order.
    std::map<std::string, std::vector<std::size_t>> strata;  // value -> positions
    for (std::size_t pos = 0; pos < test_indices.size(); ++pos) {
        const auto& id = side_entity(dataset.interactions[test_indices[pos]], target.side);
        const FeatureValue* v = table.find(id, fidx);
        if (!v) continue;
        const std::string& value = std::get<std::string>(*v);
        if (target.target_marginals.count(value)) strata[value].push_back(pos);
    }

    // Maximal size: n = min over positive-proportion values of
    // floor(available / t).
    std::size_t n = 0;
    bool first = true;
    for (const auto& [value, t] : target.target_marginals) {
        if (t <= 0.0) continue;
        const std::size_t available = strata.count(value) ? strata.at(value).size() : 0;
        if (available == 0)
            throw ConfigError("shift stratum '" + value +
                              "' has a positive target proportion but no test interactions");
        const std::size_t cap =
            static_cast<std::size_t>(std::floor(static_cast<double>(available) / t + 1e-9));
        n = first ? cap : std::min(n, cap);
        first = false;
    }
    if (first) throw ConfigError("shift target has no positive proportions");

    // Apportion n across values by largest remainder; floor first, then hand
    // the leftover slots to the largest fractional parts (ties by value).
    std::vector<std::pair<std::string, double>> targets(target.target_marginals.begin(),
                                                        target.target_marginals.end());
    std::map<std::string, std::size_t> take;
    std::size_t assigned = 0;
    std::vector<std::pair<double, std::string>> remainders;
    for (const auto& [value, t] : targets) {
        if (t <= 0.0) continue;
        double exact = static_cast<double>(n) * t;
        std::size_t base = static_cast<std::size_t>(std::floor(exact + 1e-12));
        take[value] = base;
        assigned += base;
        remainders.emplace_back(exact - static_cast<double>(base), value);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n && i < remainders.size(); ++i) {
        ++take[remainders[i].second];
        ++assigned;
    }

    // Uniform without-replacement draw inside each stratum, consumed in
    // sorted value order so the result depends only on the seed.
    Rng rng(seed);
    std::vector<std::size_t> keep_positions;
    keep_positions.reserve(n);
    for (const auto& [value, count] : take) {
        const auto& candidates = strata.at(value);
        for (std::size_t sel : sample_indices(candidates.size(), count, rng))
            keep_positions.push_back(candidates[sel]);
    }
    std::sort(keep_positions.begin(), keep_positions.end());

    std::vector<std::size_t> out;
    out.reserve(keep_positions.size());
    for (std::size_t pos : keep_positions) out.push_back(test_indices[pos]);
    return out;
}

void TransformSpec::validate(const Dataset& dataset) const {
    auto [fidx, schema] = require_feature(dataset, side, feature);
    (void)fidx;
    if (!(affected_fraction >= 0.0 && affected_fraction <= 1.0))
        throw ConfigError("affected_fraction must lie in [0, 1]");
    if (mode == TransformMode::Structured) {
        if (schema->kind != FeatureKind::Numeric)
            throw ConfigError("structured transform requires a numeric feature, '" + feature +
                              "' is categorical");
        if (!(delta > 0.0)) throw ConfigError("structured transform requires delta > 0");
    } else if (schema->kind == FeatureKind::Categorical && schema->domain.size() < 2) {
        throw ConfigError("random transform of '" + feature +
                          "' impossible: the domain has a single value");
    }
}

namespace {

// Entities of the spec side appearing in the test indices, sorted, together
// with the seeded choice of exactly round(affected_fraction * |eligible|).
std::vector<std::string> pick_affected(const Dataset& dataset,
                                       std::span<const std::size_t> test_indices,
                                       const TransformSpec& spec, Rng& rng) {
    std::set<std::string> eligible_set;
    for (std::size_t idx : test_indices)
        eligible_set.insert(side_entity(dataset.interactions[idx], spec.side));
    std::vector<std::string> eligible(eligible_set.begin(), eligible_set.end());
    const std::size_t m = round_count(spec.affected_fraction, eligible.size());
    std::vector<std::string> affected;
    affected.reserve(m);
    for (std::size_t sel : sample_indices(eligible.size(), m, rng))
        affected.push_back(eligible[sel]);
    return affected;  // sorted because sample_indices sorts
}

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double finalize_numeric(double drawn, const FeatureSchema& schema) {
    double v = clip(drawn, schema.min, schema.max);
    if (schema.integer_valued) v = clip(std::round(v), schema.min, schema.max);
    return v;
}

}  // namespace

FeatureTable transform_feature_structured(const Dataset& dataset,
                                          std::span<const std::size_t> test_indices,
                                          const TransformSpec& spec,
                                          std::uint64_t seed) {
    if (spec.mode != TransformMode::Structured)
        throw ConfigError("transform_feature_structured called with a non-structured spec");
    spec.validate(dataset);
    auto [fidx, schema] = require_feature(dataset, spec.side, spec.feature);

    FeatureTable out = side_table(dataset, spec.side);
    Rng rng(seed);
    for (const auto& id : pick_affected(dataset, test_indices, spec, rng)) {
        auto it = out.rows.find(id);
        if (it == out.rows.end()) continue;  // entity without a feature row
        const double v = std::get<double>(it->second[fidx]);
        const double lo = std::min(v * (1.0 - spec.delta), v * (1.0 + spec.delta));
        const double hi = std::max(v * (1.0 - spec.delta), v * (1.0 + spec.delta));
        it->second[fidx] = finalize_numeric(rng.uniform(lo, hi), *schema);
    }
    return out;
}

FeatureTable transform_feature_random(const Dataset& dataset,
                                      std::span<const std::size_t> test_indices,
                                      const TransformSpec& spec,
                                      std::uint64_t seed) {
    if (spec.mode != TransformMode::Random)
        throw ConfigError("transform_feature_random called with a non-random spec");
    spec.validate(dataset);
    auto [fidx, schema] = require_feature(dataset, spec.side, spec.feature);

    FeatureTable out = side_table(dataset, spec.side);
    Rng rng(seed);
    for (const auto& id : pick_affected(dataset, test_indices, spec, rng)) {
        auto it = out.rows.find(id);
        if (it == out.rows.end()) continue;
        if (schema->kind == FeatureKind::Categorical) {
            const std::string original = std::get<std::string>(it->second[fidx]);
            // uniform over domain \ {original}
            std::vector<const std::string*> pool;
            pool.reserve(schema->domain.size());
            for (const auto& d : schema->domain)
                if (d != original) pool.push_back(&d);
            it->second[fidx] = *pool[static_cast<std::size_t>(rng.below(pool.size()))];
        } else {
            it->second[fidx] = finalize_numeric(rng.uniform(schema->min, schema->max), *schema);
        }
    }
    return out;
}

void AttackSpec::validate(const Dataset& dataset) const {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("attack fraction must lie in [0, 1]");
    if (fraction > 0.0) {
        const auto& scale = dataset.rating_scale;
        if (scale.discrete() ? scale.values.size() < 2 : !(scale.min < scale.max))
            throw ConfigError("attack impossible: the rating scale has a single value");
    }
}

std::vector<Interaction> attack_ratings(const Dataset& dataset,
                                        std::span<const std::size_t> train_indices,
                                        const AttackSpec& spec,
                                        std::uint64_t seed) {
    spec.validate(dataset);
    std::vector<Interaction> out = dataset.interactions;
    const std::size_t m = round_count(spec.fraction, train_indices.size());
    if (m == 0) return out;

    Rng rng(seed);
    const auto& scale = dataset.rating_scale;
    for (std::size_t sel : sample_indices(train_indices.size(), m, rng)) {
        Interaction& x = out[train_indices[sel]];
        if (scale.discrete()) {
            std::vector<double> pool;
            pool.reserve(scale.values.size());
            for (double v : scale.values)
                if (v != x.rating) pool.push_back(v);
            x.rating = pool[static_cast<std::size_t>(rng.below(pool.size()))];
        } else {
            double drawn = x.rating;
            while (drawn == x.rating) drawn = rng.uniform(scale.min, scale.max);
            x.rating = drawn;
        }
    }
    return out;
}

void SparsitySpec::validate(const Dataset& dataset) const {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("sparsity fraction must lie in [0, 1]");
    if (user_filter) {
        if (user_filter->kind == SubpopulationPredicate::Kind::FeatureEquals &&
            user_filter->side != Side::User)
            throw ConfigError("sparsity user_filter must be a user-side predicate");
        user_filter->validate(dataset);
    }
}

std::vector<std::size_t> sparsify(const Dataset& dataset,
                                  std::span<const std::size_t> train_indices,
                                  const SparsitySpec& spec,
                                  std::uint64_t seed) {
    spec.validate(dataset);

    std::map<std::string, std::vector<std::size_t>> per_user;  // positions in train order
    for (std::size_t pos = 0; pos < train_indices.size(); ++pos)
        per_user[dataset.interactions[train_indices[pos]].user_id].push_back(pos);

    std::set<std::string> filtered;
    bool use_filter = spec.user_filter.has_value();
    if (use_filter) {
        switch (spec.user_filter->kind) {
            case SubpopulationPredicate::Kind::FeatureEquals: {
                auto [fidx, schema] =
                    require_feature(dataset, Side::User, spec.user_filter->feature);
                for (const auto& [id, _] : per_user) {
                    const FeatureValue* v = dataset.user_features.find(id, fidx);
                    if (v && feature_value_equals(*v, *schema, spec.user_filter->value))
                        filtered.insert(id);
                }
                break;
            }
            case SubpopulationPredicate::Kind::ActivityBand:
                filtered = users_in_activity_band(dataset, train_indices,
                                                  spec.user_filter->lower,
                                                  spec.user_filter->upper);
                break;
            case SubpopulationPredicate::Kind::MeanRatingBand:
                filtered = users_in_mean_rating_band(dataset, train_indices,
                                                     spec.user_filter->lower,
                                                     spec.user_filter->upper);
                break;
        }
    }

    Rng rng(seed);
    std::vector<bool> removed(train_indices.size(), false);
    for (const auto& [id, positions] : per_user) {
        if (use_filter && !filtered.count(id)) continue;
        const std::size_t m = floor_count(spec.fraction, positions.size());
        for (std::size_t sel : sample_indices(positions.size(), m, rng))
            removed[positions[sel]] = true;
    }

    std::vector<std::size_t> out;
    out.reserve(train_indices.size());
    for (std::size_t pos = 0; pos < train_indices.size(); ++pos)
        if (!removed[pos]) out.push_back(train_indices[pos]);
    return out;
}

}  // namespace recrobust
