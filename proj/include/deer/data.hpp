#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deer/evidential.hpp"
#include "deer/rng.hpp"
#include "deer/special_math.hpp"

namespace deer {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AnnotatedItem {
    std::string id;
    std::vector<double> features;
    std::map<std::string, LabelSet> labels;
};

// Items plus the shared attribute list (sorted, defines the head order) and
// the common feature width. Construction validates the shared-schema
// invariants.
struct Dataset {
    std::vector<std::string> attributes;
    std::size_t feature_dim = 0;
    std::vector<AnnotatedItem> items;
};

inline Dataset make_dataset(std::vector<AnnotatedItem> items) {
    if (items.empty()) throw DataError("no records");
    Dataset d;
    d.feature_dim = items.front().features.size();
    for (const auto& [name, labels] : items.front().labels)
        d.attributes.push_back(name);
    std::sort(d.attributes.begin(), d.attributes.end());
    for (const auto& item : items) {
        if (item.features.size() != d.feature_dim)
            throw DataError("item '" + item.id + "': inconsistent feature width");
        if (item.labels.size() != d.attributes.size())
            throw DataError("item '" + item.id + "': attribute set mismatch");
        for (const auto& name : d.attributes)
            if (item.labels.find(name) == item.labels.end())
                throw DataError("item '" + item.id + "': unknown attribute set (missing '" +
                                name + "')");
    }
    d.items = std::move(items);
    return d;
}

// ---------------------------------------------------------------------------
// Synthetic generator. Labels for each item/attribute are i.i.d. Gaussian
// draws around a smooth nonlinear mean with input-dependent variance, so the
// ground truth behind every annotator disagreement is known exactly.

struct GenerateConfig {
    std::size_t n_items = 5000;
    std::size_t feature_dim = 8;
    std::vector<std::string> attributes = {"valence", "arousal", "dominance"};
    std::size_t m_min = 3;  // annotators per item, inclusive range
    std::size_t m_max = 7;
    std::uint64_t seed = 1;
    double noise_base = 0.1;   // s0: variance floor
    double noise_slope = 0.6;  // s1: heteroscedastic amplitude, 0 = constant
};

struct TruthEntry {
    double mean = 0.0;
    double var = 0.0;
};

// item id -> attribute -> (true mean, true variance)
using TruthTable = std::map<std::string, std::map<std::string, TruthEntry>>;

namespace detail {

inline double true_mean(const std::vector<double>& x, std::size_t attr_index) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double phase = 0.31 + 1.7 * static_cast<double>(attr_index) +
                             0.57 * static_cast<double>(j);
        s += std::sin(3.14159265358979323846 * x[j] + phase);
    }
    return 1.2 * s / std::sqrt(static_cast<double>(x.size()));
}

inline double true_var(const std::vector<double>& x, std::size_t attr_index,
                       double s0, double s1) {
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double w = 1.5 * std::sin(1.3 + 2.1 * static_cast<double>(attr_index) +
                                        0.83 * static_cast<double>(j));
        dot += w * x[j];
    }
    return s0 + s1 * sigmoid(dot);
}

}  // namespace detail

inline std::pair<Dataset, TruthTable> generate(const GenerateConfig& cfg) {
    if (cfg.n_items < 1 || cfg.feature_dim < 1 || cfg.attributes.empty())
        throw std::invalid_argument("generate: n_items, dim, attributes must be nonempty");
    if (cfg.m_min < 1 || cfg.m_max > 20 || cfg.m_min > cfg.m_max)
        throw std::invalid_argument("generate: m_range must satisfy 1 <= lo <= hi <= 20");
    if (!(cfg.noise_base > 0.0) || cfg.noise_slope < 0.0)
        throw std::invalid_argument("generate: noise_base must be > 0, noise_slope >= 0");

    std::vector<std::string> attrs = cfg.attributes;
    std::sort(attrs.begin(), attrs.end());

    Rng rng(cfg.seed);
    std::vector<AnnotatedItem> items;
    items.reserve(cfg.n_items);
    TruthTable truth;
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
        AnnotatedItem item;
        char buf[32];
        std::snprintf(buf, sizeof buf, "item-%06zu", i);
        item.id = buf;
        item.features.resize(cfg.feature_dim);
        for (auto& f : item.features) f = rng.uniform(-1.0, 1.0);
        const std::size_t m =
            cfg.m_min + static_cast<std::size_t>(
                            rng.uniform_index(cfg.m_max - cfg.m_min + 1));
        auto& truth_row = truth[item.id];
        for (std::size_t a = 0; a < attrs.size(); ++a) {
            const double mu = detail::true_mean(item.features, a);
            const double var = detail::true_var(item.features, a, cfg.noise_base,
                                                cfg.noise_slope);
            truth_row[attrs[a]] = {mu, var};
            std::vector<double> values(m);
            const double sd = std::sqrt(var);
            for (auto& v : values) v = rng.normal(mu, sd);
            item.labels.emplace(attrs[a], LabelSet(std::move(values)));
        }
        items.push_back(std::move(item));
    }
    return {make_dataset(std::move(items)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Line-delimited record files: one JSON object per line with fields
// id (string), features (number array), labels (attribute -> number array).

inline void save(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (const auto& item : data.items) {
        nlohmann::json rec;
        rec["id"] = item.id;
        rec["features"] = item.features;
        nlohmann::json labels = nlohmann::json::object();
        for (const auto& [name, ls] : item.labels) labels[name] = ls.values();
        rec["labels"] = labels;
        out << rec.dump() << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

inline Dataset load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<AnnotatedItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": malformed record: " + e.what());
        }
        try {
            AnnotatedItem item;
            item.id = rec.at("id").get<std::string>();
            item.features = rec.at("features").get<std::vector<double>>();
            for (const auto& [name, values] : rec.at("labels").items()) {
                auto v = values.get<std::vector<double>>();
                if (v.empty())
                    throw DataError("empty label list for attribute '" + name + "'");
                item.labels.emplace(name, LabelSet(std::move(v)));
            }
            if (item.labels.empty()) throw DataError("record has no labels");
            items.push_back(std::move(item));
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": malformed record: " + e.what());
        }
    }
    if (items.empty()) throw DataError(path + ": no records");
    return make_dataset(std::move(items));
}

inline void save_truth(const TruthTable& truth, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (const auto& [id, row] : truth) {
        nlohmann::json rec;
        rec["id"] = id;
        nlohmann::json t = nlohmann::json::object();
        for (const auto& [name, entry] : row)
            t[name] = {{"mean", entry.mean}, {"var", entry.var}};
        rec["truth"] = t;
        out << rec.dump() << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

inline TruthTable load_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    TruthTable truth;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            nlohmann::json rec = nlohmann::json::parse(line);
            auto& row = truth[rec.at("id").get<std::string>()];
            for (const auto& [name, entry] : rec.at("truth").items())
                row[name] = {entry.at("mean").get<double>(),
                             entry.at("var").get<double>()};
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": malformed record: " + e.what());
        }
    }
    if (truth.empty()) throw DataError(path + ": no records");
    return truth;
}

// ---------------------------------------------------------------------------
// Deterministic disjoint split covering all items; sizes match fractions to
// within one item.

struct SplitResult {
    Dataset train;
    Dataset validation;
    Dataset test;
};

inline SplitResult split(const Dataset& data, double train_frac, double val_frac,
                         double test_frac, std::uint64_t seed) {
    if (train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0)
        throw std::invalid_argument("split: fractions must be nonnegative");
    if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw std::invalid_argument("split: fractions must sum to 1");

    std::vector<std::size_t> order(data.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const double n = static_cast<double>(order.size());
    const std::size_t cut1 =
        static_cast<std::size_t>(std::llround(train_frac * n));
    const std::size_t cut2 = static_cast<std::size_t>(
        std::llround((train_frac + val_frac) * n));

    auto take = [&](std::size_t lo, std::size_t hi) {
        std::vector<AnnotatedItem> part;
        part.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) part.push_back(data.items[order[i]]);
        Dataset d;
        d.attributes = data.attributes;
        d.feature_dim = data.feature_dim;
        d.items = std::move(part);
        return d;
    };
    return {take(0, cut1), take(cut1, cut2), take(cut2, order.size())};
}

}  // namespace deer
