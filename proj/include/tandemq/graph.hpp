#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandemq/common.hpp"

namespace tandemq {

// Undirected graph with labeled edges and labeled loops. Vertices are subsets
// of {1..d} stored as bitmasks (bit k-1 <-> element k). L-regular means every
// vertex carries exactly one incidence (edge or loop) per label in L.
struct labeled_graph {
    int label_lo = 2;
    int label_hi = 1; // empty label set when label_hi < label_lo
    std::vector<uint32_t> vertices;
    std::map<std::pair<int, int>, int> edges; // (u,v) with u<v -> label
    std::vector<std::set<int>> loops;         // per vertex

    int num_vertices() const { return (int)vertices.size(); }

    int find_vertex(uint32_t mask) const {
        for (int i = 0; i < num_vertices(); ++i)
            if (vertices[i] == mask) return i;
        return -1;
    }

    void add_edge(int u, int v, int label) {
        if (u > v) std::swap(u, v);
        edges[{u, v}] = label;
    }

    // Edge label between u and v, or 0 if they are not adjacent.
    int edge_label(int u, int v) const {
        if (u > v) std::swap(u, v);
        auto it = edges.find({u, v});
        return it == edges.end() ? 0 : it->second;
    }

    // The unique neighbor along `label`, or -1 when the incidence is a loop.
    int partner(int v, int label) const;

    bool is_regular(std::string* why = nullptr) const;
    void require_regular() const;

    nlohmann::json to_json() const;
    static labeled_graph from_json(const nlohmann::json& j);
};

std::vector<int> mask_elements(uint32_t mask);
uint32_t mask_of(const std::vector<int>& elems);

} // namespace tandemq
