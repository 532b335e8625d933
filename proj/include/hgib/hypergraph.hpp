#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "hgib/errors.hpp"
#include "hgib/matrix.hpp"

namespace hgib {

// One stored incidence weight: vertex `v` participates in hyperedge `e` with
// weight `w` in [0,1]. Zero weights are suppressed.
struct IncidenceEntry {
    int v = 0;
    int e = 0;
    double w = 0.0;
};

struct DegreeVectors {
    std::vector<double> vertex_degrees;
    std::vector<double> hyperedge_degrees;
};

// Hypergraph with hyperedge-dependent vertex weights. Stored as a
// coordinate list ordered by (hyperedge, vertex); semantically a dense
// n_vertices x n_hyperedges real matrix with entries in [0,1].
// Immutable after construction.
class Hypergraph {
public:
    Hypergraph(int n_vertices, int n_hyperedges, std::vector<IncidenceEntry> entries)
        : n_(n_vertices), m_(n_hyperedges), entries_(std::move(entries)) {
        if (n_ < 1) throw ValidationError("Hypergraph: n_vertices must be >= 1");
        if (m_ < 0) throw ValidationError("Hypergraph: n_hyperedges must be >= 0");
        for (const auto& t : entries_) {
            if (t.v < 0 || t.v >= n_ || t.e < 0 || t.e >= m_)
                throw ValidationError("Hypergraph: incidence entry out of bounds");
            if (!(t.w >= 0.0 && t.w <= 1.0))
                throw DomainError("Hypergraph: incidence weight outside [0,1]");
        }
        entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                      [](const IncidenceEntry& t) { return t.w == 0.0; }),
                       entries_.end());
        std::sort(entries_.begin(), entries_.end(), [](const IncidenceEntry& a, const IncidenceEntry& b) {
            return a.e != b.e ? a.e < b.e : a.v < b.v;
        });
        for (std::size_t i = 1; i < entries_.size(); ++i)
            if (entries_[i].v == entries_[i - 1].v && entries_[i].e == entries_[i - 1].e)
                throw ValidationError("Hypergraph: duplicate incidence entry");
    }

    static Hypergraph from_dense(const Matrix& h) {
        std::vector<IncidenceEntry> entries;
        for (int i = 0; i < h.rows; ++i)
            for (int j = 0; j < h.cols; ++j)
                if (h(i, j) != 0.0) entries.push_back({i, j, h(i, j)});
        return Hypergraph(h.rows, h.cols, std::move(entries));
    }

    int n_vertices() const { return n_; }
    int n_hyperedges() const { return m_; }
    const std::vector<IncidenceEntry>& entries() const { return entries_; }

    Matrix dense() const {
        Matrix h(n_, m_);
        for (const auto& t : entries_) h(t.v, t.e) = t.w;
        return h;
    }

    bool operator==(const Hypergraph& o) const {
        if (n_ != o.n_ || m_ != o.m_ || entries_.size() != o.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].v != o.entries_[i].v || entries_[i].e != o.entries_[i].e ||
                entries_[i].w != o.entries_[i].w)
                return false;
        return true;
    }

private:
    int n_;
    int m_;
    std::vector<IncidenceEntry> entries_;
};

// Simple undirected graph: used as the input form of citation datasets
// before conversion to a hypergraph. Edges are unordered pairs (u < v),
// no self-loops, no duplicates.
class Graph {
public:
    Graph(int n_vertices, std::vector<std::pair<int, int>> edges)
        : n_(n_vertices), edges_(std::move(edges)) {
        if (n_ < 1) throw ValidationError("Graph: n_vertices must be >= 1");
        for (auto& e : edges_) {
            if (e.first > e.second) std::swap(e.first, e.second);
            if (e.first == e.second) throw ValidationError("Graph: self-loop");
            if (e.first < 0 || e.second >= n_) throw ValidationError("Graph: endpoint out of range");
        }
        std::sort(edges_.begin(), edges_.end());
        for (std::size_t i = 1; i < edges_.size(); ++i)
            if (edges_[i] == edges_[i - 1]) throw ValidationError("Graph: duplicate edge");
    }

    int n_vertices() const { return n_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    int n_edges() const { return static_cast<int>(edges_.size()); }

    bool has_edge(int u, int v) const {
        if (u > v) std::swap(u, v);
        return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(u, v));
    }

    bool operator==(const Graph& o) const { return n_ == o.n_ && edges_ == o.edges_; }

private:
    int n_;
    std::vector<std::pair<int, int>> edges_;
};

inline DegreeVectors degrees(const Hypergraph& h) {
    DegreeVectors d;
    d.vertex_degrees.assign(h.n_vertices(), 0.0);
    d.hyperedge_degrees.assign(h.n_hyperedges(), 0.0);
    for (const auto& t : h.entries()) {
        d.vertex_degrees[t.v] += t.w;
        d.hyperedge_degrees[t.e] += t.w;
    }
    return d;
}

// Zero degrees invert to zero so isolated rows/columns propagate zeros.
inline double safe_inv(double x) { return x != 0.0 ? 1.0 / x : 0.0; }
inline double safe_inv_sqrt(double x) { return x > 0.0 ? 1.0 / std::sqrt(x) : 0.0; }

// Normalized hypergraph Laplacian  I - Dv^{-1/2} H De^{-1} H^T Dv^{-1/2}.
// The smoothing part is assembled as B B^T with B = Dv^{-1/2} H De^{-1/2},
// each off-diagonal pair written once, so the result is symmetric exactly.
inline Matrix laplacian(const Hypergraph& h, bool reject_degenerate = false) {
    const int n = h.n_vertices();
    const DegreeVectors d = degrees(h);
    if (reject_degenerate) {
        for (double x : d.vertex_degrees)
            if (x == 0.0) throw DegenerateStructureError("laplacian: zero vertex degree");
        for (double x : d.hyperedge_degrees)
            if (x == 0.0) throw DegenerateStructureError("laplacian: zero hyperedge degree");
    }
    Matrix b(n, h.n_hyperedges());
    for (const auto& t : h.entries())
        b(t.v, t.e) = safe_inv_sqrt(d.vertex_degrees[t.v]) * t.w * safe_inv_sqrt(d.hyperedge_degrees[t.e]);
    Matrix out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int e = 0; e < b.cols; ++e) s += b(i, e) * b(j, e);
            out(i, j) = -s;
            out(j, i) = -s;
        }
        out(i, i) += 1.0;
    }
    return out;
}

// Two vertices become adjacent iff they share a hyperedge with positive
// weights. Multi-hyperedge co-membership collapses to one simple edge.
inline Graph clique_expansion(const Hypergraph& h) {
    std::vector<std::vector<int>> members(h.n_hyperedges());
    for (const auto& t : h.entries())
        if (t.w > 0.0) members[t.e].push_back(t.v);
    std::vector<std::pair<int, int>> edges;
    for (const auto& mem : members)
        for (std::size_t a = 0; a < mem.size(); ++a)
            for (std::size_t b = a + 1; b < mem.size(); ++b)
                edges.emplace_back(mem[a], mem[b]);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return Graph(h.n_vertices(), std::move(edges));
}

// One hyperedge per vertex: e_v = {v} union neighbors(v), all weights 1.
inline Hypergraph graph_to_hypergraph(const Graph& g) {
    const int n = g.n_vertices();
    std::vector<IncidenceEntry> entries;
    for (int v = 0; v < n; ++v) entries.push_back({v, v, 1.0});
    for (const auto& [u, v] : g.edges()) {
        entries.push_back({u, v, 1.0});
        entries.push_back({v, u, 1.0});
    }
    return Hypergraph(n, n, std::move(entries));
}

}  // namespace hgib
