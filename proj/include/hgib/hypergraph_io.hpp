#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hgib/hypergraph.hpp"

namespace hgib {

// Hypergraph JSON:
//   {"n_vertices": int,
//    "hyperedges": [{"members": [int], "weights": [float] (optional, default 1.0)}]}
inline nlohmann::json hypergraph_to_json(const Hypergraph& h) {
    nlohmann::json j;
    j["n_vertices"] = h.n_vertices();
    auto edges = nlohmann::json::array();
    std::vector<std::vector<const IncidenceEntry*>> by_edge(h.n_hyperedges());
    for (const auto& t : h.entries()) by_edge[t.e].push_back(&t);
    for (const auto& mem : by_edge) {
        nlohmann::json e;
        auto members = nlohmann::json::array();
        auto weights = nlohmann::json::array();
        bool unit = true;
        for (const auto* t : mem) {
            members.push_back(t->v);
            weights.push_back(t->w);
            if (t->w != 1.0) unit = false;
        }
        e["members"] = members;
        if (!unit) e["weights"] = weights;
        edges.push_back(e);
    }
    j["hyperedges"] = edges;
    return j;
}

inline Hypergraph hypergraph_from_json(const nlohmann::json& j) {
    try {
        const int n = j.at("n_vertices").get<int>();
        std::vector<IncidenceEntry> entries;
        int e = 0;
        for (const auto& edge : j.at("hyperedges")) {
            const auto& members = edge.at("members");
            std::vector<double> weights(members.size(), 1.0);
            if (edge.contains("weights")) {
                if (edge["weights"].size() != members.size())
                    throw ValidationError("hypergraph: weights length != members length");
                for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = edge["weights"][i].get<double>();
            }
            for (std::size_t i = 0; i < members.size(); ++i)
                entries.push_back({members[i].get<int>(), e, weights[i]});
            ++e;
        }
        return Hypergraph(n, e, std::move(entries));
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("hypergraph json: ") + ex.what());
    }
}

inline void save_hypergraph(const Hypergraph& h, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << hypergraph_to_json(h).dump(2) << "\n";
}

inline Hypergraph load_hypergraph(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("hypergraph json: ") + ex.what());
    }
    return hypergraph_from_json(j);
}

// Graph edge list: one "u v" pair per line, 0-indexed. Vertex count is
// max endpoint + 1 unless a leading "# n_vertices N" comment pins it.
inline void save_graph(const Graph& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << "# n_vertices " << g.n_vertices() << "\n";
    for (const auto& [u, v] : g.edges()) f << u << " " << v << "\n";
}

inline Graph load_graph(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    std::vector<std::pair<int, int>> edges;
    int n = 0;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string key;
            ss >> key;
            if (key == "n_vertices") ss >> n;
            continue;
        }
        std::istringstream ss(line);
        int u, v;
        if (!(ss >> u >> v)) throw ParseError("graph edge list: bad line '" + line + "'");
        edges.emplace_back(u, v);
        n = std::max(n, std::max(u, v) + 1);
    }
    return Graph(std::max(n, 1), std::move(edges));
}

}  // namespace hgib
