#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgib/hypergraph.hpp"
#include "hgib/hypergraph_io.hpp"
#include "hgib/matrix.hpp"
#include "hgib/rng.hpp"

namespace hgib {

struct SplitMasks {
    std::vector<std::uint8_t> train, val, test;
};

// Node-classification dataset: a graph or hypergraph structure, dense node
// features, integer labels and disjoint train/val/test masks.
struct LabeledDataset {
    std::string name;
    std::optional<Graph> graph;
    std::optional<Hypergraph> hypergraph;
    Matrix features;  // n x d_feat
    std::vector<int> labels;
    std::vector<std::uint8_t> train_mask, val_mask, test_mask;
    int n_classes = 0;

    int n() const { return features.rows; }
    int d_feat() const { return features.cols; }
    bool is_graph() const { return graph.has_value(); }

    // Graph-native datasets convert by connecting each node with its one-hop
    // neighborhood; hypergraph-native datasets pass through.
    Hypergraph to_hypergraph() const {
        if (hypergraph) return *hypergraph;
        return graph_to_hypergraph(*graph);
    }

    void validate() const {
        if (!graph.has_value() && !hypergraph.has_value())
            throw ValidationError("dataset: missing structure");
        if (graph.has_value() && hypergraph.has_value())
            throw ValidationError("dataset: both graph and hypergraph present");
        const int nv = graph ? graph->n_vertices() : hypergraph->n_vertices();
        if (nv != n()) throw ValidationError("dataset: structure size != feature rows");
        if (static_cast<int>(labels.size()) != n())
            throw ValidationError("dataset: labels length != n");
        if (n_classes < 2) throw ValidationError("dataset: need at least 2 classes");
        if (static_cast<int>(train_mask.size()) != n() || static_cast<int>(val_mask.size()) != n() ||
            static_cast<int>(test_mask.size()) != n())
            throw ValidationError("dataset: mask length != n");
        for (int i = 0; i < n(); ++i) {
            const int overlap = (train_mask[i] ? 1 : 0) + (val_mask[i] ? 1 : 0) + (test_mask[i] ? 1 : 0);
            if (overlap > 1) throw ValidationError("dataset: masks overlap at node " + std::to_string(i));
            if (overlap > 0 && (labels[i] < 0 || labels[i] >= n_classes))
                throw ValidationError("dataset: masked node " + std::to_string(i) + " has invalid label");
        }
        if (!features.all_finite()) throw ValidationError("dataset: non-finite feature");
    }
};

// ---------------------------------------------------------------------------
// JSON dataset format
// ---------------------------------------------------------------------------
// {"name": str, "features": [[float]], "labels": [int],
//  "structure": {"type": "graph"|"hypergraph", ...},
//  "splits": {"train": [int], "val": [int], "test": [int]}}   (splits optional)

inline nlohmann::json dataset_to_json(const LabeledDataset& ds) {
    nlohmann::json j;
    j["name"] = ds.name;
    auto feats = nlohmann::json::array();
    for (int i = 0; i < ds.features.rows; ++i) {
        auto row = nlohmann::json::array();
        for (int k = 0; k < ds.features.cols; ++k) row.push_back(ds.features(i, k));
        feats.push_back(row);
    }
    j["features"] = feats;
    j["labels"] = ds.labels;
    if (ds.graph) {
        nlohmann::json s;
        s["type"] = "graph";
        s["n_vertices"] = ds.graph->n_vertices();
        auto edges = nlohmann::json::array();
        for (const auto& [u, v] : ds.graph->edges()) edges.push_back(nlohmann::json::array({u, v}));
        s["edges"] = edges;
        j["structure"] = s;
    } else {
        nlohmann::json s = hypergraph_to_json(*ds.hypergraph);
        s["type"] = "hypergraph";
        j["structure"] = s;
    }
    auto idx = [](const std::vector<std::uint8_t>& mask) {
        auto a = nlohmann::json::array();
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) a.push_back(i);
        return a;
    };
    j["splits"] = {{"train", idx(ds.train_mask)}, {"val", idx(ds.val_mask)}, {"test", idx(ds.test_mask)}};
    return j;
}

inline LabeledDataset dataset_from_json(const nlohmann::json& j) {
    LabeledDataset ds;
    try {
        ds.name = j.value("name", "unnamed");
        const auto& feats = j.at("features");
        const int n = static_cast<int>(feats.size());
        if (n == 0) throw ValidationError("dataset: empty features");
        const int d = static_cast<int>(feats[0].size());
        ds.features = Matrix(n, d);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(feats[i].size()) != d)
                throw ValidationError("dataset: ragged feature rows");
            for (int k = 0; k < d; ++k) ds.features(i, k) = feats[i][k].get<double>();
        }
        // Arbitrary label alphabets are remapped to contiguous ids by first
        // appearance of the sorted distinct values.
        std::vector<int> raw = j.at("labels").get<std::vector<int>>();
        if (static_cast<int>(raw.size()) != n) throw ValidationError("dataset: labels length != n");
        std::vector<int> alphabet = raw;
        std::sort(alphabet.begin(), alphabet.end());
        alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
        ds.labels.resize(n);
        for (int i = 0; i < n; ++i)
            ds.labels[i] = static_cast<int>(
                std::lower_bound(alphabet.begin(), alphabet.end(), raw[i]) - alphabet.begin());
        ds.n_classes = static_cast<int>(alphabet.size());

        const auto& s = j.at("structure");
        const std::string type = s.at("type").get<std::string>();
        if (type == "graph") {
            std::vector<std::pair<int, int>> edges;
            for (const auto& e : s.at("edges")) edges.emplace_back(e[0].get<int>(), e[1].get<int>());
            ds.graph = Graph(s.value("n_vertices", n), std::move(edges));
        } else if (type == "hypergraph") {
            nlohmann::json hj = s;
            if (!hj.contains("n_vertices")) hj["n_vertices"] = n;
            ds.hypergraph = hypergraph_from_json(hj);
        } else {
            throw ValidationError("dataset: unknown structure type '" + type + "'");
        }

        ds.train_mask.assign(n, 0);
        ds.val_mask.assign(n, 0);
        ds.test_mask.assign(n, 0);
        if (j.contains("splits")) {
            const auto& sp = j["splits"];
            auto fill = [n](const nlohmann::json& arr, std::vector<std::uint8_t>& mask) {
                for (const auto& x : arr) {
                    const int i = x.get<int>();
                    if (i < 0 || i >= n) throw ValidationError("dataset: split index out of range");
                    mask[i] = 1;
                }
            };
            if (sp.contains("train")) fill(sp["train"], ds.train_mask);
            if (sp.contains("val")) fill(sp["val"], ds.val_mask);
            if (sp.contains("test")) fill(sp["test"], ds.test_mask);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("dataset json: ") + ex.what());
    }
    ds.validate();
    return ds;
}

inline LabeledDataset load_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("dataset json: ") + ex.what());
    }
    return dataset_from_json(j);
}

inline void save_dataset(const LabeledDataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << dataset_to_json(ds).dump() << "\n";
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

// Class-balanced training mask (per_class_train nodes from every class),
// validation mask sampled uniformly from the remainder, test = rest.
inline SplitMasks make_split(const std::vector<int>& labels, int per_class_train, int val_size,
                             Rng& rng) {
    const int n = static_cast<int>(labels.size());
    const int c = n ? *std::max_element(labels.begin(), labels.end()) + 1 : 0;
    SplitMasks masks;
    masks.train.assign(n, 0);
    masks.val.assign(n, 0);
    masks.test.assign(n, 0);
    std::vector<std::vector<int>> by_class(c);
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0) throw ValidationError("make_split: negative label");
        by_class[labels[i]].push_back(i);
    }
    for (int k = 0; k < c; ++k) {
        if (static_cast<int>(by_class[k].size()) < per_class_train)
            throw ValidationError("make_split: class " + std::to_string(k) + " too small (" +
                                  std::to_string(by_class[k].size()) + " < " +
                                  std::to_string(per_class_train) + ")");
        auto pick = rng.sample_without_replacement(by_class[k].size(), per_class_train);
        for (std::size_t idx : pick) masks.train[by_class[k][idx]] = 1;
    }
    std::vector<int> rest;
    for (int i = 0; i < n; ++i)
        if (!masks.train[i]) rest.push_back(i);
    if (val_size > static_cast<int>(rest.size()))
        throw ValidationError("make_split: val_size exceeds remaining nodes");
    auto pick = rng.sample_without_replacement(rest.size(), val_size);
    for (std::size_t idx : pick) masks.val[rest[idx]] = 1;
    for (int i = 0; i < n; ++i)
        if (!masks.train[i] && !masks.val[i]) masks.test[i] = 1;
    return masks;
}

// ---------------------------------------------------------------------------
// Synthetic planted-partition hypergraph
// ---------------------------------------------------------------------------

// Calibrated so that a features-only linear classifier scores in the 60-75%
// band on the 3x40, d=16 configuration: the structure must carry signal.
inline constexpr double kPlantedDefaultSigma = 2.5;

// Gaussian class-mean features plus class-pure hyperedges. Class means are
// random unit vectors; per-coordinate noise is noise_sigma/sqrt(d_feat), so
// noise_sigma is the expected noise norm relative to the unit mean. Each
// clean hyperedge covers a random subset (size 4..8) of one class. The split
// is balanced: max(2, n_per_class/5) training nodes per class and
// max(n_classes, n/4) validation nodes.
inline LabeledDataset synth_planted(int n_per_class, int n_classes, int d_feat, int edges_per_class,
                                    double noise_sigma, Rng& rng) {
    if (n_per_class < 1 || n_classes < 1 || d_feat < 1 || edges_per_class < 0)
        throw DomainError("synth_planted: sizes must be positive");
    const int n = n_per_class * n_classes;
    LabeledDataset ds;
    ds.name = "synth_planted";
    ds.n_classes = std::max(n_classes, 2);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) ds.labels[i] = i / n_per_class;

    std::vector<Matrix> means;
    for (int k = 0; k < n_classes; ++k) {
        Matrix mu(1, d_feat);
        double norm2 = 0.0;
        for (int j = 0; j < d_feat; ++j) {
            mu(0, j) = rng.normal();
            norm2 += mu(0, j) * mu(0, j);
        }
        const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
        for (int j = 0; j < d_feat; ++j) mu(0, j) *= inv;
        means.push_back(mu);
    }
    ds.features = Matrix(n, d_feat);
    const double coord_sigma = noise_sigma / std::sqrt(static_cast<double>(d_feat));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d_feat; ++j)
            ds.features(i, j) = means[ds.labels[i]](0, j) + coord_sigma * rng.normal();

    std::vector<IncidenceEntry> entries;
    int e = 0;
    for (int k = 0; k < n_classes; ++k)
        for (int t = 0; t < edges_per_class; ++t) {
            const int lo = 4, hi = 8;
            int size = lo + static_cast<int>(rng.uniform_int(hi - lo + 1));
            size = std::min(size, n_per_class);
            auto pick = rng.sample_without_replacement(n_per_class, size);
            for (std::size_t idx : pick)
                entries.push_back({k * n_per_class + static_cast<int>(idx), e, 1.0});
            ++e;
        }
    ds.hypergraph = Hypergraph(n, e, std::move(entries));

    const int per_class_train = std::max(2, n_per_class / 5);
    const int val_size = std::max(n_classes, n / 4);
    SplitMasks masks = make_split(ds.labels, per_class_train, val_size, rng);
    ds.train_mask = std::move(masks.train);
    ds.val_mask = std::move(masks.val);
    ds.test_mask = std::move(masks.test);
    ds.validate();
    return ds;
}

}  // namespace hgib
