#include "recrobust/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "recrobust/common.hpp"
#include "recrobust/rng.hpp"

namespace recrobust::datagen {

namespace {

const char* kOccupations[21] = {
    "administrator", "artist",     "doctor",     "educator",  "engineer", "entertainment",
    "executive",     "healthcare", "homemaker",  "lawyer",    "librarian", "marketing",
    "none",          "other",      "programmer", "retired",   "salesman",  "scientist",
    "student",       "technician", "writer"};

// Largest-remainder apportionment of `total` across weights.
std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total) {
    double sum = 0.0;
    for (double w : weights) sum += w;
    std::vector<std::size_t> out(weights.size(), 0);
    if (sum <= 0.0 || total == 0) {
        for (std::size_t i = 0; total > 0; i = (i + 1) % out.size(), --total) ++out[i];
        return out;
    }
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = static_cast<double>(total) * weights[i] / sum;
        out[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += out[i];
        rem.emplace_back(exact - std::floor(exact), i);
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++out[rem[i % rem.size()].second];
    return out;
}

}  // namespace

void write_ml100k(const std::filesystem::path& dir, const Ml100kOptions& options) {
    if (options.n_users < 4 || options.n_items < 25 ||
        options.n_interactions < options.n_users * 20)
        throw Error("write_ml100k: corpus too small (need >= 20 interactions per user)");

    std::filesystem::create_directories(dir);
    Rng rng(options.seed);

    const std::size_t n_users = options.n_users;
    const std::size_t n_items = options.n_items;

    // gender assignment: male users in proportion to the interaction share,
    // scattered over the id range
    const std::size_t n_male = round_count(options.male_interaction_share, n_users);
    std::vector<bool> male(n_users, false);
    {
        std::vector<std::size_t> ids(n_users);
        for (std::size_t i = 0; i < n_users; ++i) ids[i] = i;
        rng.shuffle(ids);
        for (std::size_t i = 0; i < n_male; ++i) male[ids[i]] = true;
    }

    std::vector<int> ages(n_users);
    for (auto& a : ages) a = 7 + static_cast<int>(rng.below(67));  // [7, 73]
    ages[0] = 7;    // pin the observed bounds
    ages[1] = 73;

    std::vector<std::string> occupations(n_users), zips(n_users);
    for (std::size_t u = 0; u < n_users; ++u) {
        occupations[u] = kOccupations[rng.below(21)];
        zips[u] = std::to_string(10000 + rng.below(90000));
    }

    // per-user interaction counts: 20 each, remainder split inside each
    // gender group by skewed weights so totals hit the target marginal
    const std::size_t male_total = round_count(options.male_interaction_share,
                                               options.n_interactions);
    const std::size_t female_total = options.n_interactions - male_total;
    std::vector<std::size_t> counts(n_users, 20);
    for (bool group_male : {true, false}) {
        std::vector<std::size_t> members;
        for (std::size_t u = 0; u < n_users; ++u)
            if (male[u] == group_male) members.push_back(u);
        const std::size_t group_total = group_male ? male_total : female_total;
        if (members.empty()) {
            if (group_total > 0) throw Error("write_ml100k: empty gender group with quota");
            continue;
        }
        const std::size_t rem = group_total - 20 * members.size();
        std::vector<double> weights(members.size());
        for (auto& w : weights) {
            const double x = rng.unit();
            w = x * x;  // a few heavy users, many light ones
        }
        const auto extra = apportion(weights, rem);
        for (std::size_t i = 0; i < members.size(); ++i) counts[members[i]] += extra[i];
    }
    // cap at the item universe and push overflow to users with headroom
    std::size_t overflow = 0;
    for (auto& c : counts)
        if (c > n_items) {
            overflow += c - n_items;
            c = n_items;
        }
    for (std::size_t u = 0; overflow > 0; u = (u + 1) % n_users) {
        if (counts[u] < n_items) {
            ++counts[u];
            --overflow;
        }
    }

    // item popularity: smooth power-law weights, cumulative for sampling
    std::vector<double> cum(n_items);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_items; ++i) {
        acc += 1.0 / static_cast<double>(i + 10);
        cum[i] = acc;
    }

    auto draw_item = [&]() {
        const double x = rng.unit() * cum.back();
        return static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), x) - cum.begin());
    };

    // genre flags drawn up front so item quality can depend on them
    std::vector<std::array<int, 19>> genre_flags(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        auto& flags = genre_flags[i];
        flags.fill(0);
        flags[1 + rng.below(18)] = 1;
        if (rng.unit() < 0.35) flags[1 + rng.below(18)] = 1;
        if (rng.unit() < 0.10) flags[1 + rng.below(18)] = 1;
        if (i < 19) flags[i] = 1;  // every genre column sees at least one 1
    }

    // ratings carry structure the models can pick up: popular items trend
    // better, genres shift quality, users differ in generosity
    double genre_effect[19];
    for (auto& g : genre_effect) g = rng.uniform(-0.35, 0.35);
    std::vector<double> item_quality(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        double q = 3.9 - 1.3 * static_cast<double>(i) / static_cast<double>(n_items);
        int n_genres = 0;
        double g_sum = 0.0;
        for (int g = 0; g < 19; ++g)
            if (genre_flags[i][g]) {
                g_sum += genre_effect[g];
                ++n_genres;
            }
        if (n_genres) q += g_sum / n_genres;
        item_quality[i] = q;
    }
    std::vector<double> user_generosity(n_users);
    for (auto& b : user_generosity) b = rng.uniform(-0.6, 0.6);

    auto draw_rating = [&](std::size_t u, std::size_t i) {
        const double raw = item_quality[i] + user_generosity[u] + rng.uniform(-1.3, 1.3);
        const double r = std::max(1.0, std::min(5.0, std::round(raw)));
        return static_cast<int>(r);
    };

    // u.data
    {
        std::ofstream out(dir / "u.data");
        if (!out) throw Error("write_ml100k: cannot write u.data");
        std::set<std::size_t> seen;
        for (std::size_t u = 0; u < n_users; ++u) {
            seen.clear();
            while (seen.size() < counts[u]) {
                std::size_t item = draw_item();
                if (seen.count(item)) {
                    // densely rated user: fall back to the next free item
                    int tries = 0;
                    while (seen.count(item) && ++tries < 64) item = draw_item();
                    while (seen.count(item)) item = (item + 1) % n_items;
                }
                seen.insert(item);
                out << (u + 1) << '\t' << (item + 1) << '\t' << draw_rating(u, item) << '\t'
                    << 874000000 + rng.below(20000000) << '\n';
            }
        }
    }

    // u.user: id | age | gender | occupation | zip
    {
        std::ofstream out(dir / "u.user");
        if (!out) throw Error("write_ml100k: cannot write u.user");
        for (std::size_t u = 0; u < n_users; ++u)
            out << (u + 1) << '|' << ages[u] << '|' << (male[u] ? 'M' : 'F') << '|'
                << occupations[u] << '|' << zips[u] << '\n';
    }

    // u.item: id | title | release | video release | url | 19 genre flags
    {
        std::ofstream out(dir / "u.item");
        if (!out) throw Error("write_ml100k: cannot write u.item");
        for (std::size_t i = 0; i < n_items; ++i) {
            out << (i + 1) << "|Movie " << (i + 1) << " (199" << (i % 8) << ")|01-Jan-199"
                << (i % 8) << "||http://example.com/movies/" << (i + 1) << '|';
            for (int g = 0; g < 19; ++g) out << genre_flags[i][g] << (g + 1 < 19 ? "|" : "");
            out << '\n';
        }
    }
}

}  // namespace recrobust::datagen
