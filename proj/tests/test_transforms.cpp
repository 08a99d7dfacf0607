#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "recrobust/rng.hpp"
#include "recrobust/transforms.hpp"
#include "support.hpp"

using namespace recrobust;
using testsupport::ml100k;

namespace {

Split ml_split() { return split_ratio(ml100k(), {0.8, 0.1, 0.1}, 42); }

bool is_subset_in_order(const std::vector<std::size_t>& subset,
                        std::span<const std::size_t> super) {
    std::size_t p = 0;
    for (std::size_t idx : subset) {
        while (p < super.size() && super[p] != idx) ++p;
        if (p == super.size()) return false;
        ++p;
    }
    return true;
}

const FeatureValue& feature_of(const Dataset& ds, Side side, const std::string& id,
                               const std::string& name) {
    const FeatureTable& t = side == Side::User ? ds.user_features : ds.item_features;
    return *t.find(id, *t.feature_index(name));
}

}  // namespace

TEST_SUITE("slice_subpopulation") {

TEST_CASE("gender slice keeps exactly the matching users") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    SubpopulationPredicate p;
    p.kind = SubpopulationPredicate::Kind::FeatureEquals;
    p.feature = "gender";
    p.value = "F";
    const auto sliced = slice_subpopulation(ds, split.test, split.train, p);
    CHECK(!sliced.empty());
    CHECK(sliced.size() < split.test.size());
    for (std::size_t idx : sliced)
        CHECK(std::get<std::string>(
                  feature_of(ds, Side::User, ds.interactions[idx].user_id, "gender")) == "F");
    CHECK(is_subset_in_order(sliced, split.test));

    // complement covers the rest
    p.value = "M";
    const auto male = slice_subpopulation(ds, split.test, split.train, p);
    CHECK(male.size() + sliced.size() == split.test.size());
}

TEST_CASE("an all-covering band is the identity") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    SubpopulationPredicate p;
    p.kind = SubpopulationPredicate::Kind::ActivityBand;
    p.lower = 0.0;
    p.upper = 1.0;
    const auto sliced = slice_subpopulation(ds, split.test, split.train, p);
    CHECK(sliced == std::vector<std::size_t>(split.test.begin(), split.test.end()));
}

TEST_CASE("activity band picks the least-active half of a toy table") {
    // train counts a:1 b:2 c:3 d:4
    Dataset ds;
    ds.rating_scale = RatingScale{1, 5, {1, 2, 3, 4, 5}};
    const char* users[] = {"a", "b", "b", "c", "c", "c", "d", "d", "d", "d"};
    for (std::size_t k = 0; k < 10; ++k)
        ds.interactions.push_back(Interaction{users[k], "i" + std::to_string(k), 3.0, {}});
    // one test interaction per user
    for (const char* u : {"a", "b", "c", "d"})
        ds.interactions.push_back(Interaction{u, std::string("t_") + u, 4.0, {}});
    ds.validate();
    std::vector<std::size_t> train{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<std::size_t> test{10, 11, 12, 13};

    SubpopulationPredicate p;
    p.kind = SubpopulationPredicate::Kind::ActivityBand;
    p.lower = 0.0;
    p.upper = 0.5;
    const auto sliced = slice_subpopulation(ds, test, train, p);
    std::set<std::string> kept;
    for (std::size_t idx : sliced) kept.insert(ds.interactions[idx].user_id);
    CHECK(kept == std::set<std::string>{"a", "b"});

    p.lower = 0.5;
    p.upper = 1.0;
    const auto upper = slice_subpopulation(ds, test, train, p);
    kept.clear();
    for (std::size_t idx : upper) kept.insert(ds.interactions[idx].user_id);
    CHECK(kept == std::set<std::string>{"c", "d"});
}

TEST_CASE("mean rating band keeps users by train mean") {
    // u0 mean 5.0, u1 mean 2.0 on train
    Dataset ds = testsupport::toy_dataset({{5, 5, 0, 4}, {2, 2, 0, 4}});
    std::vector<std::size_t> train{0, 1, 3, 4};  // u0:5,5  u1:2,2
    std::vector<std::size_t> test{2, 5};
    SubpopulationPredicate p;
    p.kind = SubpopulationPredicate::Kind::MeanRatingBand;
    p.lower = 4.0;
    p.upper = 5.0;
    const auto sliced = slice_subpopulation(ds, test, train, p);
    REQUIRE(sliced.size() == 1);
    CHECK(ds.interactions[sliced[0]].user_id == "u0");
}

TEST_CASE("unknown feature raises, empty result does not") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    SubpopulationPredicate p;
    p.kind = SubpopulationPredicate::Kind::FeatureEquals;
    p.feature = "nope";
    p.value = "x";
    CHECK_THROWS_AS(slice_subpopulation(ds, split.test, split.train, p), ConfigError);

    // a value outside the observed domain just matches nobody
    p.feature = "occupation";
    p.value = "astronaut";
    CHECK(slice_subpopulation(ds, split.test, split.train, p).empty());

    SubpopulationPredicate empty_band;
    empty_band.kind = SubpopulationPredicate::Kind::MeanRatingBand;
    empty_band.lower = -10.0;
    empty_band.upper = -9.0;
    CHECK(slice_subpopulation(ds, split.test, split.train, empty_band).empty());
}

}  // TEST_SUITE

TEST_SUITE("shift_distribution") {

ShiftTarget gender_target(double m, double f) {
    ShiftTarget t;
    t.feature = "gender";
    t.target_marginals = {{"M", m}, {"F", f}};
    return t;
}

TEST_CASE("50/50 gender shift balances within one interaction") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    const auto shifted = shift_distribution(ds, split.test, gender_target(0.5, 0.5), 9);
    CHECK(is_subset_in_order(shifted, split.test));
    std::size_t m = 0, f = 0;
    for (std::size_t idx : shifted) {
        const auto& g = std::get<std::string>(
            feature_of(ds, Side::User, ds.interactions[idx].user_id, "gender"));
        (g == "M" ? m : f) += 1;
    }
    CHECK(m + f == shifted.size());
    CHECK((m > f ? m - f : f - m) <= 1);
}

TEST_CASE("resampling to the empirical marginal loses almost nothing") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    std::size_t m = 0;
    for (std::size_t idx : split.test)
        if (std::get<std::string>(
                feature_of(ds, Side::User, ds.interactions[idx].user_id, "gender")) == "M")
            ++m;
    const double pm = static_cast<double>(m) / split.test.size();
    const auto kept = shift_distribution(ds, split.test, gender_target(pm, 1.0 - pm), 9);
    CHECK(kept.size() >= split.test.size() * 99 / 100);
}

TEST_CASE("toy maximal solution: 8M/2F at 50/50 keeps exactly 2+2") {
    Dataset ds = testsupport::toy_feature_dataset({"M", "M", "M", "M", "M", "M", "M", "M",
                                                   "F", "F"},
                                                  "gender", {"M", "F"}, 10);
    auto test = testsupport::all_indices(ds);
    ShiftTarget t;
    t.feature = "gender";
    t.target_marginals = {{"M", 0.5}, {"F", 0.5}};
    const auto kept = shift_distribution(ds, test, t, 3);
    REQUIRE(kept.size() == 4);
    std::size_t m = 0;
    for (std::size_t idx : kept) {
        const auto& g =
            std::get<std::string>(feature_of(ds, Side::User, ds.interactions[idx].user_id,
                                             "gender"));
        if (g == "M") ++m;
    }
    CHECK(m == 2);
}

TEST_CASE("a positive-proportion stratum without candidates raises") {
    Dataset ds = testsupport::toy_feature_dataset({"M", "M"}, "gender", {"M", "F"}, 4);
    auto test = testsupport::all_indices(ds);
    ShiftTarget t;
    t.feature = "gender";
    t.target_marginals = {{"M", 0.5}, {"F", 0.5}};
    CHECK_THROWS_AS(shift_distribution(ds, test, t, 1), ConfigError);
}

TEST_CASE("achieved marginals are within 1/n and the size is maximal") {
    Rng rng(77);
    const std::vector<std::string> domain{"A", "B", "C"};
    for (int rep = 0; rep < 60; ++rep) {
        // random toy population over a 3-value feature
        std::vector<std::string> values;
        const std::size_t n_users = 3 + rng.below(9);
        for (std::size_t u = 0; u < n_users; ++u)
            values.push_back(domain[rng.below(3)]);
        Dataset ds = testsupport::toy_feature_dataset(values, "f", domain,
                                                      12 + rng.below(30));
        auto test = testsupport::all_indices(ds);

        // random target over the values that actually occur
        std::set<std::string> present;
        for (std::size_t idx : test)
            present.insert(std::get<std::string>(
                feature_of(ds, Side::User, ds.interactions[idx].user_id, "f")));
        std::map<std::string, double> target;
        double left = 1.0;
        std::size_t placed = 0;
        for (const auto& v : present) {
            ++placed;
            if (placed == present.size()) {
                target[v] = left;
            } else {
                const double p = left * (0.2 + 0.6 * rng.unit());
                target[v] = p;
                left -= p;
            }
        }
        ShiftTarget t;
        t.feature = "f";
        t.target_marginals = target;

        const auto kept = shift_distribution(ds, test, t, rng.next());
        REQUIRE(!kept.empty());
        CHECK(is_subset_in_order(kept, test));

        std::map<std::string, std::size_t> got, avail;
        for (std::size_t idx : test)
            ++avail[std::get<std::string>(
                feature_of(ds, Side::User, ds.interactions[idx].user_id, "f"))];
        for (std::size_t idx : kept)
            ++got[std::get<std::string>(
                feature_of(ds, Side::User, ds.interactions[idx].user_id, "f"))];

        const double n = static_cast<double>(kept.size());
        for (const auto& [v, p] : target) {
            const double achieved = static_cast<double>(got[v]) / n;
            CHECK(std::abs(achieved - p) <= 1.0 / n + 1e-12);
        }
        // ceiling argument: one more row would overflow some stratum
        bool blocked = false;
        for (const auto& [v, p] : target) {
            if (p <= 0.0) continue;
            if ((n + 1.0) * p > static_cast<double>(avail[v]) + 1e-9) blocked = true;
        }
        CHECK(blocked);
    }
}

TEST_CASE("shift is seed-deterministic and seed-sensitive") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    const auto a = shift_distribution(ds, split.test, gender_target(0.5, 0.5), 9);
    const auto b = shift_distribution(ds, split.test, gender_target(0.5, 0.5), 9);
    const auto c = shift_distribution(ds, split.test, gender_target(0.5, 0.5), 10);
    CHECK(a == b);
    CHECK(a != c);
}

}  // TEST_SUITE

TEST_SUITE("transform_feature") {

TransformSpec age_spec(double delta, double fraction) {
    TransformSpec s;
    s.side = Side::User;
    s.feature = "age";
    s.mode = TransformMode::Structured;
    s.delta = delta;
    s.affected_fraction = fraction;
    return s;
}

TEST_CASE("structured age transform stays within the relative bound") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    const FeatureTable perturbed =
        transform_feature_structured(ds, split.test, age_spec(0.1, 1.0), 5);

    const std::size_t fidx = *ds.user_features.feature_index("age");
    std::size_t changed = 0;
    std::set<std::string> eligible;
    for (std::size_t idx : split.test) eligible.insert(ds.interactions[idx].user_id);

    for (const auto& [id, row] : ds.user_features.rows) {
        const double before = std::get<double>(row[fidx]);
        const double after = std::get<double>(perturbed.rows.at(id)[fidx]);
        if (!eligible.count(id)) {
            CHECK(after == before);
            continue;
        }
        if (after != before) ++changed;
        CHECK(std::abs(after - before) <= 0.1 * before + 0.5);
        CHECK(after >= 7.0);
        CHECK(after <= 73.0);
        CHECK(after == std::floor(after));
        // untouched columns stay bit-identical
        for (std::size_t c = 0; c < row.size(); ++c)
            if (c != fidx) CHECK(perturbed.rows.at(id)[c] == row[c]);
    }
    // affected_fraction 1.0 marks every eligible user, though a draw can
    // round back to the original value
    CHECK(changed > eligible.size() / 2);
}

TEST_CASE("boundary clipping: age 7 with delta 0.1 lands on 7 or 8") {
    Dataset ds;
    ds.rating_scale = RatingScale{1, 5, {1, 2, 3, 4, 5}};
    ds.user_features.schema = {FeatureSchema{"age", FeatureKind::Numeric, {}, 7, 73, true}};
    ds.user_features.rows.emplace("u0", FeatureRow{7.0});
    ds.interactions.push_back(Interaction{"u0", "i0", 5.0, {}});
    ds.validate();
    std::vector<std::size_t> test{0};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto perturbed = transform_feature_structured(ds, test, age_spec(0.1, 1.0), seed);
        const double v = std::get<double>(perturbed.rows.at("u0")[0]);
        CHECK((v == 7.0 || v == 8.0));
    }
}

TEST_CASE("age 40 with delta 0.1 stays within [36, 44]") {
    Dataset ds;
    ds.rating_scale = RatingScale{1, 5, {1, 2, 3, 4, 5}};
    ds.user_features.schema = {FeatureSchema{"age", FeatureKind::Numeric, {}, 7, 73, true}};
    ds.user_features.rows.emplace("u0", FeatureRow{40.0});
    ds.interactions.push_back(Interaction{"u0", "i0", 5.0, {}});
    ds.validate();
    std::vector<std::size_t> test{0};
    std::set<double> seen;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto perturbed = transform_feature_structured(ds, test, age_spec(0.1, 1.0), seed);
        const double v = std::get<double>(perturbed.rows.at("u0")[0]);
        CHECK(v >= 36.0);
        CHECK(v <= 44.0);
        CHECK(v == std::floor(v));
        seen.insert(v);
    }
    CHECK(seen.size() > 5);  // actually spreads over the interval
}

TEST_CASE("affected_fraction 0 leaves the table bit-identical") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    const auto perturbed = transform_feature_structured(ds, split.test, age_spec(0.1, 0.0), 5);
    CHECK(perturbed == ds.user_features);

    TransformSpec r;
    r.feature = "gender";
    r.mode = TransformMode::Random;
    r.affected_fraction = 0.0;
    CHECK(transform_feature_random(ds, split.test, r, 5) == ds.user_features);
}

TEST_CASE("structured mode rejects categorical features") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    TransformSpec s;
    s.feature = "gender";
    s.mode = TransformMode::Structured;
    s.delta = 0.1;
    CHECK_THROWS_AS(transform_feature_structured(ds, split.test, s, 1), ConfigError);
}

TEST_CASE("random transform flips a two-value domain and respects exclusion") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    TransformSpec s;
    s.feature = "gender";
    s.mode = TransformMode::Random;
    s.affected_fraction = 1.0;
    const auto perturbed = transform_feature_random(ds, split.test, s, 5);

    const std::size_t fidx = *ds.user_features.feature_index("gender");
    std::set<std::string> eligible;
    for (std::size_t idx : split.test) eligible.insert(ds.interactions[idx].user_id);
    std::size_t changed = 0;
    for (const auto& [id, row] : ds.user_features.rows) {
        const auto& before = std::get<std::string>(row[fidx]);
        const auto& after = std::get<std::string>(perturbed.rows.at(id)[fidx]);
        if (eligible.count(id)) {
            CHECK(after != before);  // two-value domain: forced flip
            ++changed;
        } else {
            CHECK(after == before);
        }
    }
    CHECK(changed == eligible.size());
}

TEST_CASE("random occupation lands in the domain minus the original") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    TransformSpec s;
    s.feature = "occupation";
    s.mode = TransformMode::Random;
    s.affected_fraction = 1.0;
    const auto perturbed = transform_feature_random(ds, split.test, s, 11);
    const std::size_t fidx = *ds.user_features.feature_index("occupation");
    const auto& domain = ds.user_features.schema[fidx].domain;
    std::set<std::string> eligible;
    for (std::size_t idx : split.test) eligible.insert(ds.interactions[idx].user_id);
    for (const auto& id : eligible) {
        const auto& before = std::get<std::string>(ds.user_features.rows.at(id)[fidx]);
        const auto& after = std::get<std::string>(perturbed.rows.at(id)[fidx]);
        CHECK(after != before);
        CHECK(std::find(domain.begin(), domain.end(), after) != domain.end());
    }
}

TEST_CASE("affected count is exact for fractional affected_fraction") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    TransformSpec s;
    s.feature = "occupation";
    s.mode = TransformMode::Random;
    s.affected_fraction = 0.25;
    const auto perturbed = transform_feature_random(ds, split.test, s, 11);
    const std::size_t fidx = *ds.user_features.feature_index("occupation");
    std::set<std::string> eligible;
    for (std::size_t idx : split.test) eligible.insert(ds.interactions[idx].user_id);
    std::size_t changed = 0;
    for (const auto& [id, row] : ds.user_features.rows)
        if (std::get<std::string>(row[fidx]) !=
            std::get<std::string>(perturbed.rows.at(id)[fidx]))
            ++changed;
    CHECK(changed == round_count(0.25, eligible.size()));
}

TEST_CASE("single-value domains cannot be randomly corrupted") {
    Dataset ds = testsupport::toy_feature_dataset({"A", "A"}, "f", {"A"}, 4);
    TransformSpec s;
    s.feature = "f";
    s.mode = TransformMode::Random;
    auto test = testsupport::all_indices(ds);
    CHECK_THROWS_AS(transform_feature_random(ds, test, s, 1), ConfigError);
}

TEST_CASE("transforms are seed-deterministic and seed-sensitive") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    const auto a = transform_feature_structured(ds, split.test, age_spec(0.1, 1.0), 5);
    const auto b = transform_feature_structured(ds, split.test, age_spec(0.1, 1.0), 5);
    const auto c = transform_feature_structured(ds, split.test, age_spec(0.1, 1.0), 6);
    CHECK(a == b);
    CHECK(a != c);
}

}  // TEST_SUITE

TEST_SUITE("attack_ratings") {

TEST_CASE("attack corrupts exactly the requested count, train side only") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    AttackSpec spec{0.10};
    const auto attacked = attack_ratings(ds, split.train, spec, 21);
    REQUIRE(attacked.size() == ds.interactions.size());

    std::size_t changed = 0;
    std::set<std::size_t> train_set(split.train.begin(), split.train.end());
    for (std::size_t i = 0; i < attacked.size(); ++i) {
        const auto& before = ds.interactions[i];
        const auto& after = attacked[i];
        CHECK(after.user_id == before.user_id);
        CHECK(after.item_id == before.item_id);
        CHECK(after.timestamp == before.timestamp);
        if (after.rating != before.rating) {
            ++changed;
            CHECK(train_set.count(i) == 1);  // validation/test untouched
            CHECK(ds.rating_scale.contains(after.rating));
        }
    }
    CHECK(changed == 8000);  // round(0.10 * 80000)
}

TEST_CASE("fraction 0 is the identity") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    const auto attacked = attack_ratings(ds, split.train, AttackSpec{0.0}, 21);
    CHECK(attacked == ds.interactions);
}

TEST_CASE("replacement excludes the original rating") {
    Dataset ds = testsupport::toy_dataset(
        {{3, 3, 3, 3}, {3, 3, 3, 3}, {3, 3, 3, 3}});
    auto train = testsupport::all_indices(ds);
    const auto attacked = attack_ratings(ds, train, AttackSpec{1.0}, 4);
    for (const auto& x : attacked) {
        CHECK(x.rating != 3.0);
        CHECK((x.rating == 1.0 || x.rating == 2.0 || x.rating == 4.0 || x.rating == 5.0));
    }
}

TEST_CASE("single-value rating scales cannot be attacked") {
    Dataset ds = testsupport::toy_dataset({{1, 1}}, RatingScale{1, 1, {1}});
    auto train = testsupport::all_indices(ds);
    CHECK_THROWS_AS(attack_ratings(ds, train, AttackSpec{0.5}, 1), ConfigError);
    CHECK_NOTHROW(attack_ratings(ds, train, AttackSpec{0.0}, 1));
}

TEST_CASE("attack is seed-deterministic and seed-sensitive") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    const auto a = attack_ratings(ds, split.train, AttackSpec{0.1}, 21);
    const auto b = attack_ratings(ds, split.train, AttackSpec{0.1}, 21);
    const auto c = attack_ratings(ds, split.train, AttackSpec{0.1}, 22);
    CHECK(a == b);
    CHECK(a != c);
}

}  // TEST_SUITE

TEST_SUITE("sparsify") {

TEST_CASE("per-user floor rule on toy counts") {
    // u0 has 4 train interactions, u1 has 3
    Dataset ds = testsupport::toy_dataset({{5, 4, 3, 2}, {1, 2, 3, 0}});
    auto train = testsupport::all_indices(ds);
    SparsitySpec spec;
    spec.fraction = 0.25;
    const auto kept = sparsify(ds, train, spec, 3);
    auto counts = user_activity(ds, kept);
    CHECK(counts.at("u0") == 3);  // removed exactly floor(1.0) = 1
    CHECK(counts.at("u1") == 3);  // floor(0.75) = 0 removed
    CHECK(is_subset_in_order(kept, train));
}

TEST_CASE("removal totals match the independent per-user floor sum") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    SparsitySpec spec;
    spec.fraction = 0.25;
    const auto kept = sparsify(ds, split.train, spec, 13);

    const auto before = user_activity(ds, split.train);
    std::size_t expected_removed = 0;
    for (const auto& [_, n] : before) expected_removed += floor_count(0.25, n);
    CHECK(split.train.size() - kept.size() == expected_removed);

    const auto after = user_activity(ds, kept);
    for (const auto& [user, n] : before)
        CHECK(n - (after.count(user) ? after.at(user) : 0) == floor_count(0.25, n));
}

TEST_CASE("user filter shields non-matching users") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    SparsitySpec spec;
    spec.fraction = 0.5;
    SubpopulationPredicate filter;
    filter.kind = SubpopulationPredicate::Kind::FeatureEquals;
    filter.feature = "gender";
    filter.value = "F";
    spec.user_filter = filter;
    const auto kept = sparsify(ds, split.train, spec, 13);

    const auto before = user_activity(ds, split.train);
    const auto after = user_activity(ds, kept);
    const std::size_t gidx = *ds.user_features.feature_index("gender");
    for (const auto& [user, n] : before) {
        const auto& g = std::get<std::string>(*ds.user_features.find(user, gidx));
        const std::size_t still = after.count(user) ? after.at(user) : 0;
        if (g == "F")
            CHECK(n - still == floor_count(0.5, n));
        else
            CHECK(still == n);
    }
}

TEST_CASE("sparsify is seed-deterministic and seed-sensitive") {
    const Dataset& ds = ml100k();
    const Split split = ml_split();
    SparsitySpec spec;
    spec.fraction = 0.25;
    CHECK(sparsify(ds, split.train, spec, 13) == sparsify(ds, split.train, spec, 13));
    CHECK(sparsify(ds, split.train, spec, 13) != sparsify(ds, split.train, spec, 14));
}

}  // TEST_SUITE
