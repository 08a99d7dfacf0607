#include "recrobust/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "recrobust/rng.hpp"

namespace recrobust {

using nlohmann::json;

// ---------------------------------------------------------------- schema

void FeatureSchema::validate() const {
    if (name.empty()) throw DataError("feature schema with empty name");
    if (kind == FeatureKind::Categorical) {
        if (domain.empty())
            throw DataError("categorical feature '" + name + "' has an empty domain");
        std::set<std::string> seen(domain.begin(), domain.end());
        if (seen.size() != domain.size())
            throw DataError("categorical feature '" + name + "' has duplicate domain values");
    } else {
        if (!(min <= max))
            throw DataError("numeric feature '" + name + "' has min > max");
    }
}

bool FeatureSchema::value_ok(const FeatureValue& v) const {
    if (kind == FeatureKind::Categorical) {
        const auto* s = std::get_if<std::string>(&v);
        if (!s) return false;
        return std::find(domain.begin(), domain.end(), *s) != domain.end();
    }
    const auto* d = std::get_if<double>(&v);
    if (!d) return false;
    if (!(*d >= min && *d <= max)) return false;
    if (integer_valued && *d != std::floor(*d)) return false;
    return true;
}

bool RatingScale::contains(double r) const {
    if (discrete())
        return std::find(values.begin(), values.end(), r) != values.end();
    return r >= min && r <= max;
}

std::optional<std::size_t> FeatureTable::feature_index(std::string_view name) const {
    for (std::size_t i = 0; i < schema.size(); ++i)
        if (schema[i].name == name) return i;
    return std::nullopt;
}

const FeatureValue* FeatureTable::find(const std::string& id, std::size_t feature) const {
    auto it = rows.find(id);
    if (it == rows.end() || feature >= it->second.size()) return nullptr;
    return &it->second[feature];
}

void FeatureTable::validate() const {
    for (const auto& s : schema) s.validate();
    for (const auto& [id, row] : rows) {
        if (row.size() != schema.size())
            throw DataError("feature row for '" + id + "' has " + std::to_string(row.size()) +
                            " values, schema declares " + std::to_string(schema.size()));
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!schema[i].value_ok(row[i]))
                throw DataError("value of feature '" + schema[i].name + "' for entity '" + id +
                                "' violates its schema");
        }
    }
}

// ---------------------------------------------------------------- dataset

void Dataset::validate() const {
    user_features.validate();
    item_features.validate();
    if (rating_scale.discrete()) {
        for (double v : rating_scale.values)
            if (!(v >= rating_scale.min && v <= rating_scale.max))
                throw DataError("rating scale value outside [min, max]");
    }
    if (!(rating_scale.min <= rating_scale.max))
        throw DataError("rating scale has min > max");
    const bool check_users = !user_features.empty();
    const bool check_items = !item_features.empty();
    for (std::size_t i = 0; i < interactions.size(); ++i) {
        const auto& x = interactions[i];
        if (!rating_scale.contains(x.rating))
            throw DataError("interaction " + std::to_string(i) + " rating " +
                            format_double(x.rating) + " outside the rating scale");
        if (check_users && !user_features.rows.count(x.user_id))
            throw DataError("interaction " + std::to_string(i) + " references unknown user '" +
                            x.user_id + "'");
        if (check_items && !item_features.rows.count(x.item_id))
            throw DataError("interaction " + std::to_string(i) + " references unknown item '" +
                            x.item_id + "'");
    }
}

namespace {

std::vector<std::string> ids_from(const FeatureTable& table,
                                  const std::vector<Interaction>& interactions,
                                  bool user_side) {
    std::vector<std::string> out;
    if (!table.empty()) {
        out.reserve(table.rows.size());
        for (const auto& [id, _] : table.rows) out.push_back(id);
        return out;  // map iteration is already sorted
    }
    std::set<std::string> distinct;
    for (const auto& x : interactions) distinct.insert(user_side ? x.user_id : x.item_id);
    out.assign(distinct.begin(), distinct.end());
    return out;
}

}  // namespace

std::vector<std::string> Dataset::all_user_ids() const {
    return ids_from(user_features, interactions, true);
}

std::vector<std::string> Dataset::all_item_ids() const {
    return ids_from(item_features, interactions, false);
}

namespace {

void hash_feature_value(Fnv1a& h, const FeatureValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) {
        h.update_u64(0);
        h.update(*s);
    } else {
        h.update_u64(1);
        h.update_double(std::get<double>(v));
    }
}

void hash_table(Fnv1a& h, const FeatureTable& t) {
    h.update_u64(t.schema.size());
    for (const auto& s : t.schema) {
        h.update(s.name);
        h.update_u64(s.kind == FeatureKind::Categorical ? 0 : 1);
        for (const auto& d : s.domain) h.update(d);
        h.update_double(s.min);
        h.update_double(s.max);
        h.update_u64(s.integer_valued ? 1 : 0);
    }
    h.update_u64(t.rows.size());
    for (const auto& [id, row] : t.rows) {
        h.update(id);
        for (const auto& v : row) hash_feature_value(h, v);
    }
}

}  // namespace

std::uint64_t Dataset::fingerprint() const {
    Fnv1a h;
    h.update_u64(interactions.size());
    for (const auto& x : interactions) {
        h.update(x.user_id);
        h.update(x.item_id);
        h.update_double(x.rating);
        h.update_u64(x.timestamp ? static_cast<std::uint64_t>(*x.timestamp) + 1 : 0);
    }
    hash_table(h, user_features);
    hash_table(h, item_features);
    h.update_double(rating_scale.min);
    h.update_double(rating_scale.max);
    for (double v : rating_scale.values) h.update_double(v);
    return h.digest();
}

// ---------------------------------------------------------------- parsing helpers

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": cannot parse number '" + s + "'");
    }
}

long long parse_int(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": cannot parse integer '" + s + "'");
    }
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

// ---------------------------------------------------------------- ML-100k

namespace {

const char* kGenreNames[19] = {
    "unknown",  "Action",    "Adventure", "Animation", "Children's", "Comedy", "Crime",
    "Documentary", "Drama",  "Fantasy",   "Film-Noir", "Horror",     "Musical", "Mystery",
    "Romance",  "Sci-Fi",    "Thriller",  "War",       "Western"};

}  // namespace

Dataset load_movielens(const std::filesystem::path& root) {
    const auto data_path = root / "u.data";
    const auto user_path = root / "u.user";
    const auto item_path = root / "u.item";
    for (const auto& p : {data_path, user_path, item_path})
        if (!std::filesystem::exists(p))
            throw DataError("missing MovieLens file '" + p.string() + "'");

    Dataset ds;
    ds.rating_scale = RatingScale{1.0, 5.0, {1.0, 2.0, 3.0, 4.0, 5.0}};

    // u.user: id | age | gender | occupation | zip
    std::map<std::string, std::tuple<double, std::string, std::string, std::string>> users;
    std::set<std::string> occupations, zips;
    double age_min = 0.0, age_max = 0.0;
    {
        auto in = open_or_throw(user_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = strip_cr(line);
            if (line.empty()) continue;
            auto f = split_line(line, '|');
            const std::string where = "u.user line " + std::to_string(line_no);
            if (f.size() != 5) throw DataError(where + ": expected 5 fields, got " +
                                               std::to_string(f.size()));
            double age = static_cast<double>(parse_int(f[1], where));
            if (f[2] != "M" && f[2] != "F")
                throw DataError(where + ": gender must be M or F, got '" + f[2] + "'");
            if (!users.emplace(f[0], std::make_tuple(age, f[2], f[3], f[4])).second)
                throw DataError(where + ": duplicate user id '" + f[0] + "'");
            occupations.insert(f[3]);
            zips.insert(f[4]);
            if (users.size() == 1) age_min = age_max = age;
            age_min = std::min(age_min, age);
            age_max = std::max(age_max, age);
        }
        if (users.empty()) throw DataError("u.user is empty");
    }

    ds.user_features.schema = {
        FeatureSchema{"age", FeatureKind::Numeric, {}, age_min, age_max, true},
        FeatureSchema{"gender", FeatureKind::Categorical, {"M", "F"}, 0, 0, false},
        FeatureSchema{"occupation", FeatureKind::Categorical,
                      {occupations.begin(), occupations.end()}, 0, 0, false},
        FeatureSchema{"zip", FeatureKind::Categorical, {zips.begin(), zips.end()}, 0, 0, false},
    };
    for (const auto& [id, u] : users) {
        ds.user_features.rows.emplace(
            id, FeatureRow{std::get<0>(u), std::get<1>(u), std::get<2>(u), std::get<3>(u)});
    }

    // u.item: id | title | release | video release | url | 19 genre flags
    {
        auto in = open_or_throw(item_path);
        ds.item_features.schema.reserve(19);
        for (const char* g : kGenreNames)
            ds.item_features.schema.push_back(
                FeatureSchema{g, FeatureKind::Numeric, {}, 0.0, 1.0, true});
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = strip_cr(line);
            if (line.empty()) continue;
            auto f = split_line(line, '|');
            const std::string where = "u.item line " + std::to_string(line_no);
            if (f.size() != 24)
                throw DataError(where + ": expected 24 fields, got " + std::to_string(f.size()));
            FeatureRow row;
            row.reserve(19);
            for (int g = 0; g < 19; ++g) {
                const std::string& flag = f[5 + g];
                if (flag != "0" && flag != "1")
                    throw DataError(where + ": genre flag must be 0 or 1, got '" + flag + "'");
                row.push_back(flag == "1" ? 1.0 : 0.0);
            }
            if (!ds.item_features.rows.emplace(f[0], std::move(row)).second)
                throw DataError(where + ": duplicate item id '" + f[0] + "'");
        }
        if (ds.item_features.rows.empty()) throw DataError("u.item is empty");
    }

    // u.data: user \t item \t rating \t timestamp
    {
        auto in = open_or_throw(data_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = strip_cr(line);
            if (line.empty()) continue;
            auto f = split_line(line, '\t');
            const std::string where = "u.data line " + std::to_string(line_no);
            if (f.size() != 4)
                throw DataError(where + ": expected 4 fields, got " + std::to_string(f.size()));
            Interaction x;
            x.user_id = f[0];
            x.item_id = f[1];
            x.rating = static_cast<double>(parse_int(f[2], where));
            x.timestamp = parse_int(f[3], where);
            if (!ds.rating_scale.contains(x.rating))
                throw DataError(where + ": rating '" + f[2] + "' outside {1..5}");
            if (!ds.user_features.rows.count(x.user_id))
                throw DataError(where + ": unknown user id '" + x.user_id + "'");
            if (!ds.item_features.rows.count(x.item_id))
                throw DataError(where + ": unknown item id '" + x.item_id + "'");
            ds.interactions.push_back(std::move(x));
        }
    }

    ds.validate();
    return ds;
}

// ---------------------------------------------------------------- generic format

namespace {

FeatureSchema schema_from_json(const std::string& name, const json& j) {
    FeatureSchema s;
    s.name = name;
    const std::string kind = j.value("kind", "");
    if (kind == "categorical") {
        s.kind = FeatureKind::Categorical;
        if (!j.contains("domain"))
            throw DataError("schema: feature '" + name + "' missing 'domain'");
        for (const auto& v : j.at("domain")) s.domain.push_back(v.get<std::string>());
    } else if (kind == "numeric") {
        s.kind = FeatureKind::Numeric;
        s.min = j.value("min", 0.0);
        s.max = j.value("max", 0.0);
        s.integer_valued = j.value("integer", false);
    } else {
        throw DataError("schema: feature '" + name + "' has unknown kind '" + kind + "'");
    }
    s.validate();
    return s;
}

json schema_to_json(const FeatureSchema& s) {
    json j;
    if (s.kind == FeatureKind::Categorical) {
        j["kind"] = "categorical";
        j["domain"] = s.domain;
    } else {
        j["kind"] = "numeric";
        j["min"] = s.min;
        j["max"] = s.max;
        j["integer"] = s.integer_valued;
    }
    return j;
}

// Feature CSVs: first column is the entity id, remaining columns must be
// declared in the side's schema. The stored schema order follows the header.
FeatureTable load_feature_csv(const std::filesystem::path& path,
                              const std::map<std::string, FeatureSchema>& declared,
                              const std::string& side) {
    FeatureTable table;
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
    auto header = split_line(strip_cr(line), ',');
    if (header.size() < 2)
        throw DataError(path.string() + ": header must name an id column and features");
    for (std::size_t c = 1; c < header.size(); ++c) {
        auto it = declared.find(header[c]);
        if (it == declared.end())
            throw DataError(path.string() + ": feature '" + header[c] +
                            "' not declared in the schema for side '" + side + "'");
        table.schema.push_back(it->second);
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto f = split_line(line, ',');
        const std::string where = path.string() + " row " + std::to_string(line_no);
        if (f.size() != header.size())
            throw DataError(where + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(f.size()));
        FeatureRow row;
        row.reserve(table.schema.size());
        for (std::size_t c = 0; c < table.schema.size(); ++c) {
            const FeatureSchema& s = table.schema[c];
            FeatureValue v;
            if (s.kind == FeatureKind::Categorical)
                v = f[c + 1];
            else
                v = parse_double(f[c + 1], where);
            if (!s.value_ok(v))
                throw DataError(where + ": value '" + f[c + 1] + "' of feature '" + s.name +
                                "' violates the declared schema");
            row.push_back(std::move(v));
        }
        if (!table.rows.emplace(f[0], std::move(row)).second)
            throw DataError(where + ": duplicate id '" + f[0] + "'");
    }
    return table;
}

std::map<std::string, FeatureSchema> declared_features(const json& schema, const char* side) {
    std::map<std::string, FeatureSchema> out;
    if (!schema.contains("features") || !schema.at("features").contains(side)) return out;
    for (const auto& [name, body] : schema.at("features").at(side).items())
        out.emplace(name, schema_from_json(name, body));
    return out;
}

}  // namespace

Dataset load_generic(const std::filesystem::path& interactions_path,
                     const std::optional<std::filesystem::path>& user_features_path,
                     const std::optional<std::filesystem::path>& item_features_path,
                     const std::filesystem::path& schema_path) {
    json schema;
    {
        auto in = open_or_throw(schema_path);
        try {
            schema = json::parse(in);
        } catch (const json::exception& e) {
            throw DataError(schema_path.string() + ": " + e.what());
        }
    }

    Dataset ds;
    if (schema.contains("rating")) {
        const auto& r = schema.at("rating");
        ds.rating_scale.min = r.value("min", 1.0);
        ds.rating_scale.max = r.value("max", 5.0);
        ds.rating_scale.values.clear();
        if (r.contains("values"))
            for (const auto& v : r.at("values")) ds.rating_scale.values.push_back(v.get<double>());
    }

    if (user_features_path)
        ds.user_features = load_feature_csv(*user_features_path,
                                            declared_features(schema, "user"), "user");
    if (item_features_path)
        ds.item_features = load_feature_csv(*item_features_path,
                                            declared_features(schema, "item"), "item");

    {
        auto in = open_or_throw(interactions_path);
        std::string line;
        if (!std::getline(in, line))
            throw DataError(interactions_path.string() + ": missing header row");
        auto header = split_line(strip_cr(line), ',');
        bool has_ts = header.size() == 4 && header[3] == "timestamp";
        if (!(header.size() == 3 || has_ts) || header[0] != "user_id" ||
            header[1] != "item_id" || header[2] != "rating")
            throw DataError(interactions_path.string() +
                            ": header must be user_id,item_id,rating[,timestamp]");
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            line = strip_cr(line);
            if (line.empty()) continue;
            auto f = split_line(line, ',');
            const std::string where =
                interactions_path.string() + " row " + std::to_string(line_no);
            if (f.size() != header.size())
                throw DataError(where + ": expected " + std::to_string(header.size()) +
                                " fields, got " + std::to_string(f.size()));
            Interaction x;
            x.user_id = f[0];
            x.item_id = f[1];
            x.rating = parse_double(f[2], where);
            if (has_ts && !f[3].empty()) x.timestamp = parse_int(f[3], where);
            if (!ds.rating_scale.contains(x.rating))
                throw DataError(where + ": rating '" + f[2] + "' outside the declared scale");
            ds.interactions.push_back(std::move(x));
        }
    }

    ds.validate();
    return ds;
}

void save_generic(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    auto write_features = [&](const FeatureTable& t, const std::filesystem::path& p) {
        std::ofstream out(p);
        if (!out) throw DataError("cannot write '" + p.string() + "'");
        out << "id";
        for (const auto& s : t.schema) out << ',' << s.name;
        out << '\n';
        for (const auto& [id, row] : t.rows) {
            out << id;
            for (const auto& v : row) {
                out << ',';
                if (const auto* s = std::get_if<std::string>(&v))
                    out << *s;
                else
                    out << format_double(std::get<double>(v));
            }
            out << '\n';
        }
    };

    json schema;
    schema["rating"]["min"] = dataset.rating_scale.min;
    schema["rating"]["max"] = dataset.rating_scale.max;
    if (dataset.rating_scale.discrete()) schema["rating"]["values"] = dataset.rating_scale.values;
    for (const auto& s : dataset.user_features.schema)
        schema["features"]["user"][s.name] = schema_to_json(s);
    for (const auto& s : dataset.item_features.schema)
        schema["features"]["item"][s.name] = schema_to_json(s);
    {
        std::ofstream out(dir / "schema.json");
        if (!out) throw DataError("cannot write schema.json");
        out << schema.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "interactions.csv");
        if (!out) throw DataError("cannot write interactions.csv");
        out << "user_id,item_id,rating,timestamp\n";
        for (const auto& x : dataset.interactions) {
            out << x.user_id << ',' << x.item_id << ',' << format_double(x.rating) << ',';
            if (x.timestamp) out << *x.timestamp;
            out << '\n';
        }
    }
    if (!dataset.user_features.empty())
        write_features(dataset.user_features, dir / "user_features.csv");
    if (!dataset.item_features.empty())
        write_features(dataset.item_features, dir / "item_features.csv");
}

// ---------------------------------------------------------------- split

Split split_ratio(const Dataset& dataset, std::array<double, 3> ratios, std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1, got " + format_double(sum));
    for (double r : ratios)
        if (r < 0.0) throw ConfigError("split ratios must be nonnegative");

    const std::size_t n = dataset.interactions.size();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(perm);

    Split split;
    split.seed = seed;
    split.ratios = ratios;
    const std::size_t n_train = floor_count(ratios[0], n);
    const std::size_t n_valid = std::min(floor_count(ratios[1], n), n - n_train);
    split.train.assign(perm.begin(), perm.begin() + n_train);
    split.valid.assign(perm.begin() + n_train, perm.begin() + n_train + n_valid);
    split.test.assign(perm.begin() + n_train + n_valid, perm.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.valid.begin(), split.valid.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::map<std::string, std::size_t> user_activity(const Dataset& dataset,
                                                 std::span<const std::size_t> indices) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t idx : indices) {
        if (idx >= dataset.interactions.size())
            throw ConfigError("interaction index " + std::to_string(idx) + " out of range");
        ++counts[dataset.interactions[idx].user_id];
    }
    return counts;
}

std::map<std::string, double> user_mean_rating(const Dataset& dataset,
                                               std::span<const std::size_t> indices) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (std::size_t idx : indices) {
        if (idx >= dataset.interactions.size())
            throw ConfigError("interaction index " + std::to_string(idx) + " out of range");
        const auto& x = dataset.interactions[idx];
        auto& [sum, count] = acc[x.user_id];
        sum += x.rating;
        ++count;
    }
    std::map<std::string, double> means;
    for (const auto& [id, sc] : acc) means[id] = sc.first / static_cast<double>(sc.second);
    return means;
}

}  // namespace recrobust
