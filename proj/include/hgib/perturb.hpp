#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "hgib/data_io.hpp"
#include "hgib/hypergraph.hpp"
#include "hgib/rng.hpp"

namespace hgib {

enum class PerturbKind { clean, delete_edges, add_edges, delete_hyperedges, add_hyperedges };

struct PerturbSpec {
    PerturbKind kind = PerturbKind::clean;
    double ratio = 0.0;
    std::uint64_t seed = 0;
};

inline std::string to_string(PerturbKind k) {
    switch (k) {
        case PerturbKind::clean: return "clean";
        case PerturbKind::delete_edges: return "delete_edges";
        case PerturbKind::add_edges: return "add_edges";
        case PerturbKind::delete_hyperedges: return "delete_hyperedges";
        case PerturbKind::add_hyperedges: return "add_hyperedges";
    }
    return "?";
}

inline PerturbKind perturb_kind_from_string(const std::string& s) {
    if (s == "clean") return PerturbKind::clean;
    if (s == "delete_edges") return PerturbKind::delete_edges;
    if (s == "add_edges") return PerturbKind::add_edges;
    if (s == "delete_hyperedges") return PerturbKind::delete_hyperedges;
    if (s == "add_hyperedges") return PerturbKind::add_hyperedges;
    throw ValidationError("unknown perturbation kind '" + s + "'");
}

// "KIND:RATIO", e.g. "delete_hyperedges:0.5".
inline PerturbSpec parse_perturb_spec(const std::string& s, std::uint64_t seed = 0) {
    PerturbSpec spec;
    spec.seed = seed;
    const auto colon = s.find(':');
    spec.kind = perturb_kind_from_string(s.substr(0, colon));
    if (spec.kind == PerturbKind::clean) return spec;
    if (colon == std::string::npos)
        throw ValidationError("perturbation '" + s + "' needs a ratio, e.g. " + s + ":0.5");
    spec.ratio = std::stod(s.substr(colon + 1));
    if (!(spec.ratio > 0.0 && spec.ratio < 1.0))
        throw DomainError("perturbation ratio must be in (0,1)");
    return spec;
}

// Removes floor(ratio*m) uniformly chosen hyperedge columns; the surviving
// columns keep their weights bit-exactly.
inline Hypergraph delete_hyperedges(const Hypergraph& h, double ratio, Rng& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("delete_hyperedges: ratio outside (0,1)");
    const int m = h.n_hyperedges();
    const int k = static_cast<int>(ratio * m);
    std::vector<std::uint8_t> dropped(m, 0);
    for (std::size_t idx : rng.sample_without_replacement(m, k)) dropped[idx] = 1;
    std::vector<int> new_index(m, -1);
    int kept = 0;
    for (int e = 0; e < m; ++e)
        if (!dropped[e]) new_index[e] = kept++;
    std::vector<IncidenceEntry> entries;
    for (const auto& t : h.entries())
        if (!dropped[t.e]) entries.push_back({t.v, new_index[t.e], t.w});
    return Hypergraph(h.n_vertices(), kept, std::move(entries));
}

// Removes floor(ratio*m) uniformly chosen edges.
inline Graph delete_edges(const Graph& g, double ratio, Rng& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("delete_edges: ratio outside (0,1)");
    const int m = g.n_edges();
    const int k = static_cast<int>(ratio * m);
    std::vector<std::uint8_t> dropped(m, 0);
    for (std::size_t idx : rng.sample_without_replacement(m, k)) dropped[idx] = 1;
    std::vector<std::pair<int, int>> edges;
    for (int e = 0; e < m; ++e)
        if (!dropped[e]) edges.push_back(g.edges()[e]);
    return Graph(g.n_vertices(), std::move(edges));
}

// Adds floor(ratio*m) uniformly chosen currently-unconnected unordered pairs.
inline Graph add_edges(const Graph& g, double ratio, Rng& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("add_edges: ratio outside (0,1)");
    const int n = g.n_vertices();
    const long long all_pairs = static_cast<long long>(n) * (n - 1) / 2;
    const long long candidates = all_pairs - g.n_edges();
    const int k = static_cast<int>(ratio * g.n_edges());
    if (k > candidates)
        throw ValidationError("add_edges: only " + std::to_string(candidates) +
                              " unconnected pairs available, need " + std::to_string(k));
    std::vector<std::pair<int, int>> edges = g.edges();
    if (all_pairs <= 2'000'000) {
        std::vector<std::pair<int, int>> missing;
        missing.reserve(static_cast<std::size_t>(candidates));
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (!g.has_edge(u, v)) missing.emplace_back(u, v);
        for (std::size_t idx : rng.sample_without_replacement(missing.size(), k))
            edges.push_back(missing[idx]);
    } else {
        std::set<std::pair<int, int>> added;
        while (static_cast<int>(added.size()) < k) {
            int u = static_cast<int>(rng.uniform_int(n));
            int v = static_cast<int>(rng.uniform_int(n));
            if (u == v) continue;
            if (u > v) std::swap(u, v);
            if (g.has_edge(u, v) || added.count({u, v})) continue;
            added.insert({u, v});
        }
        for (const auto& e : added) edges.push_back(e);
    }
    return Graph(n, std::move(edges));
}

// Appends floor(ratio*m) noise hyperedges, each containing exactly one
// uniformly chosen node per class with weight 1. Original columns are kept
// bit-exactly.
inline Hypergraph add_hyperedges(const Hypergraph& h, const std::vector<int>& labels, double ratio,
                                 Rng& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("add_hyperedges: ratio outside (0,1)");
    if (static_cast<int>(labels.size()) != h.n_vertices())
        throw ValidationError("add_hyperedges: labels length != n_vertices");
    const int c = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<int>> by_class(c);
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
        if (labels[i] < 0) throw ValidationError("add_hyperedges: negative label");
        by_class[labels[i]].push_back(i);
    }
    for (int k = 0; k < c; ++k)
        if (by_class[k].empty())
            throw ValidationError("add_hyperedges: class " + std::to_string(k) + " is empty");
    const int m = h.n_hyperedges();
    const int k_new = static_cast<int>(ratio * m);
    std::vector<IncidenceEntry> entries = h.entries();
    for (int t = 0; t < k_new; ++t)
        for (int cls = 0; cls < c; ++cls) {
            const int node = by_class[cls][rng.uniform_int(by_class[cls].size())];
            entries.push_back({node, m + t, 1.0});
        }
    return Hypergraph(h.n_vertices(), m + k_new, std::move(entries));
}

// Applies a perturbation to a dataset, graph-native datasets perturbed as
// graphs and hypergraph-native ones as hypergraphs. Delete requests alias
// across the two structure types; add requests must match the native type.
inline LabeledDataset apply_perturbation(const LabeledDataset& ds, const PerturbSpec& spec) {
    if (spec.kind == PerturbKind::clean) return ds;
    LabeledDataset out = ds;
    Rng rng(spec.seed);
    if (ds.is_graph()) {
        switch (spec.kind) {
            case PerturbKind::delete_edges:
            case PerturbKind::delete_hyperedges:
                out.graph = delete_edges(*ds.graph, spec.ratio, rng);
                break;
            case PerturbKind::add_edges:
                out.graph = add_edges(*ds.graph, spec.ratio, rng);
                break;
            case PerturbKind::add_hyperedges:
                throw ValidationError("add_hyperedges requires a hypergraph-native dataset");
            default: break;
        }
    } else {
        switch (spec.kind) {
            case PerturbKind::delete_edges:
            case PerturbKind::delete_hyperedges:
                out.hypergraph = delete_hyperedges(*ds.hypergraph, spec.ratio, rng);
                break;
            case PerturbKind::add_hyperedges:
                out.hypergraph = add_hyperedges(*ds.hypergraph, ds.labels, spec.ratio, rng);
                break;
            case PerturbKind::add_edges:
                throw ValidationError("add_edges requires a graph-native dataset");
            default: break;
        }
    }
    return out;
}

}  // namespace hgib
