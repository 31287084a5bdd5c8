#include "tandemq/graph.hpp"

namespace tandemq {

std::vector<int> mask_elements(uint32_t mask) {
    std::vector<int> e;
    for (int k = 1; mask; ++k, mask >>= 1)
        if (mask & 1u) e.push_back(k);
    return e;
}

uint32_t mask_of(const std::vector<int>& elems) {
    uint32_t m = 0;
    for (int k : elems) m |= 1u << (k - 1);
    return m;
}

int labeled_graph::partner(int v, int label) const {
    for (const auto& [key, l] : edges) {
        if (l != label) continue;
        if (key.first == v) return key.second;
        if (key.second == v) return key.first;
    }
    return -1;
}

bool labeled_graph::is_regular(std::string* why) const {
    if ((int)loops.size() != num_vertices()) {
        if (why) *why = "loop table size does not match vertex count";
        return false;
    }
    for (const auto& [key, l] : edges) {
        if (key.first < 0 || key.second >= num_vertices() || key.first >= key.second) {
            if (why) *why = "edge endpoints out of range";
            return false;
        }
        if (l < label_lo || l > label_hi) {
            if (why) *why = "edge label " + std::to_string(l) + " outside label range";
            return false;
        }
    }
    for (int v = 0; v < num_vertices(); ++v) {
        for (int l = label_lo; l <= label_hi; ++l) {
            int count = loops[v].count(l) ? 1 : 0;
            for (const auto& [key, lab] : edges)
                if (lab == l && (key.first == v || key.second == v)) ++count;
            if (count != 1) {
                if (why)
                    *why = "vertex " + std::to_string(v) + " has " + std::to_string(count) +
                           " incidences for label " + std::to_string(l);
                return false;
            }
        }
        for (int l : loops[v])
            if (l < label_lo || l > label_hi) {
                if (why) *why = "loop label " + std::to_string(l) + " outside label range";
                return false;
            }
    }
    return true;
}

void labeled_graph::require_regular() const {
    std::string why;
    if (!is_regular(&why)) throw validation_error("graph is not label-regular: " + why);
}

nlohmann::json labeled_graph::to_json() const {
    nlohmann::json j;
    j["label_range"] = {label_lo, label_hi};
    auto verts = nlohmann::json::array();
    for (uint32_t m : vertices) verts.push_back(mask_elements(m));
    j["vertices"] = verts;
    auto es = nlohmann::json::array();
    for (const auto& [key, l] : edges) es.push_back({key.first, key.second, l});
    j["edges"] = es;
    nlohmann::json lp = nlohmann::json::object();
    for (int v = 0; v < num_vertices(); ++v) {
        if (loops[v].empty()) continue;
        lp[std::to_string(v)] = loops[v];
    }
    j["loops"] = lp;
    return j;
}

labeled_graph labeled_graph::from_json(const nlohmann::json& j) {
    labeled_graph g;
    if (j.contains("label_range")) {
        g.label_lo = j["label_range"][0].get<int>();
        g.label_hi = j["label_range"][1].get<int>();
    }
    for (const auto& v : j.at("vertices")) g.vertices.push_back(mask_of(v.get<std::vector<int>>()));
    g.loops.assign(g.vertices.size(), {});
    for (const auto& e : j.at("edges")) g.add_edge(e[0].get<int>(), e[1].get<int>(), e[2].get<int>());
    if (j.contains("loops"))
        for (const auto& [k, labels] : j.at("loops").items())
            for (const auto& l : labels) g.loops[std::stoi(k)].insert(l.get<int>());
    return g;
}

} // namespace tandemq
