#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>

#include "tandemq/graph.hpp"
#include "tandemq/loglinear.hpp"

namespace tandemq {

// Per-vertex assignment for a harmonic system: a common beta, one alpha
// vector (indexed 2..d) and one nonzero coefficient per vertex of the graph,
// in vertex order.
template <class T>
struct harmonic_solution {
    T beta{0};
    std::vector<std::vector<T>> alpha;
    std::vector<T> c;
};

struct condition_report {
    std::string name;
    bool pass = true;
    double worst = 0.0; // residual magnitude (min gap for the distinctness condition)
    std::string witness;
};

struct verification_report {
    bool regular = false;
    std::array<condition_report, 5> conditions;
    bool pass() const {
        if (!regular) return false;
        for (const auto& c : conditions)
            if (!c.pass) return false;
        return true;
    }
    double worst_residual() const {
        double w = 0;
        for (size_t i = 0; i < conditions.size(); ++i)
            if (i != 1) w = std::max(w, conditions[i].worst); // condition 2 reports a gap, not a residual
        return w;
    }
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["regular"] = regular;
        j["pass"] = pass();
        auto arr = nlohmann::json::array();
        for (const auto& c : conditions)
            arr.push_back({{"name", c.name}, {"pass", c.pass}, {"worst", c.worst}, {"witness", c.witness}});
        j["conditions"] = arr;
        return j;
    }
};

namespace detail {

// pass/fail for a residual: exact zero in rational mode, <= tol in float mode.
template <class T>
bool residual_ok(const T& r, double tol) {
    if constexpr (is_rational_v<T>)
        return r == T(0);
    else
        return std::abs(r) <= tol;
}

template <class T>
void track_worst(condition_report& cr, const T& residual, double tol, const std::string& witness) {
    double mag = std::abs(to_double(residual));
    if (mag >= cr.worst) {
        cr.worst = mag;
        cr.witness = witness;
    }
    if (!residual_ok(residual, tol)) cr.pass = false;
}

} // namespace detail

// Checks the five defining conditions of a harmonic system:
//   1. every (beta, alpha_v) lies on the characteristic surface (p = 1)
//   2. the alpha vectors are pairwise distinct
//   3. edge endpoints are conjugate in the edge label
//   4. coefficient ratios along edges match -C(l,.,alpha_v)/C(l,.,alpha_u)
//   5. loop labels put the vertex on the matching boundary surface (p_l = 1)
// Residuals are exact (tol ignored, must vanish) in rational mode.
template <class T>
verification_report verify_system(const jackson_routing<T>& rt, const labeled_graph& g,
                                  const harmonic_solution<T>& sol, double tol = 1e-10) {
    verification_report rep;
    rep.conditions[0].name = "surface_membership";
    rep.conditions[1].name = "alpha_distinct";
    rep.conditions[2].name = "edge_conjugacy";
    rep.conditions[3].name = "coefficient_ratios";
    rep.conditions[4].name = "loop_surfaces";

    g.require_regular();
    rep.regular = true;
    const int nv = g.num_vertices();
    if ((int)sol.alpha.size() != nv || (int)sol.c.size() != nv)
        throw validation_error("solution size does not match graph vertex count");
    for (int v = 0; v < nv; ++v)
        if (sol.c[v] == T(0)) throw validation_error("coefficients must be nonzero");

    // 1. surface membership
    for (int v = 0; v < nv; ++v) {
        T res = char_poly_general(rt, sol.beta, sol.alpha[v]) - T(1);
        detail::track_worst(rep.conditions[0], res, tol, "vertex " + std::to_string(v));
    }

    // 2. pairwise distinctness; worst field reports the smallest gap
    {
        condition_report& cr = rep.conditions[1];
        cr.worst = std::numeric_limits<double>::infinity();
        for (int u = 0; u < nv; ++u)
            for (int v = u + 1; v < nv; ++v) {
                T gap{0};
                for (size_t k = 0; k < sol.alpha[u].size(); ++k)
                    gap = std::max(gap, abs_val(T(sol.alpha[u][k] - sol.alpha[v][k])));
                bool same = is_rational_v<T> ? gap == T(0) : to_double(gap) <= tol;
                double mag = to_double(gap);
                if (mag <= cr.worst) {
                    cr.worst = mag;
                    cr.witness = "vertices " + std::to_string(u) + "," + std::to_string(v);
                }
                if (same) cr.pass = false;
            }
        if (nv < 2) cr.worst = 0;
    }

    // 3 + 4. per edge: off-label equality, conjugacy product, coefficient ratio
    for (const auto& [key, label] : g.edges) {
        const int u = key.first, v = key.second;
        const auto& au = sol.alpha[u];
        const auto& av = sol.alpha[v];
        std::string wit = "edge " + std::to_string(u) + "-" + std::to_string(v) + " label " +
                          std::to_string(label);
        for (size_t k = 0; k < au.size(); ++k) {
            if ((int)k == label - 2) continue;
            detail::track_worst(rep.conditions[2], T(au[k] - av[k]), tol, wit + " (off-label coordinate)");
        }
        auto [num, den] = conjugacy_num_den(rt, label, sol.beta, au);
        T lhs = au[label - 2] * av[label - 2] * den;
        T scale = std::max(abs_val(num), abs_val(lhs));
        T res = lhs - num;
        if (scale > T(0)) res /= scale;
        detail::track_worst(rep.conditions[2], res, tol, wit + " (product)");

        T cu = c_general(rt, label, sol.beta, au);
        T cv = c_general(rt, label, sol.beta, av);
        T r4 = sol.c[u] * cu + sol.c[v] * cv;
        T s4 = std::max(abs_val(T(sol.c[u] * cu)), abs_val(T(sol.c[v] * cv)));
        if (s4 > T(0)) r4 /= s4;
        detail::track_worst(rep.conditions[3], r4, tol, wit);
    }

    // 5. loop labels
    for (int v = 0; v < nv; ++v)
        for (int l : g.loops[v]) {
            T res = char_poly_general(rt, {l}, sol.beta, sol.alpha[v]) - T(1);
            detail::track_worst(rep.conditions[4], res, tol,
                                "vertex " + std::to_string(v) + " loop " + std::to_string(l));
        }

    return rep;
}

// h_G(y) = sum_v c_v [(beta, alpha_v), y]
template <class T>
T eval_hg(const harmonic_solution<T>& sol, const labeled_graph& g, const state& y) {
    accumulator<T> acc;
    for (int v = 0; v < g.num_vertices(); ++v) acc.add(sol.c[v] * eval_point(sol.beta, sol.alpha[v], y));
    return acc.value();
}

// E_y[h(Y_1)] - h(y) under the y-walk of the routing: increments v_{i,j} with
// probability p(i,j), coordinate 1 reflected and unconstrained, coordinates
// 2..d constrained at zero.
template <class T, class F>
T harmonic_residual(const jackson_routing<T>& rt, F&& h, const state& y) {
    accumulator<T> acc;
    for (int i = 0; i <= rt.d; ++i)
        for (int j = 0; j <= rt.d; ++j) {
            if (i == j || rt.p[i][j] == T(0)) continue;
            state z = y;
            if (i == 1)
                z[0] += 1;
            else if (i >= 2)
                z[i - 1] -= 1;
            if (j == 1)
                z[0] -= 1;
            else if (j >= 2)
                z[j - 1] += 1;
            bool feasible = true;
            for (size_t k = 1; k < z.size(); ++k)
                if (z[k] < 0) feasible = false;
            acc.add(rt.p[i][j] * h(feasible ? z : y));
        }
    return acc.value() - h(y);
}

// D_a applied to h at y: jumps out of stations in `a` are frozen, everything
// else is applied unconstrained (h must be defined on all of Z^d).
template <class T, class F>
T d_operator(const jackson_routing<T>& rt, const std::vector<int>& a, F&& h, const state& y) {
    std::vector<char> in_a(rt.d + 1, 0);
    for (int i : a) in_a[i] = 1;
    accumulator<T> acc;
    for (int i = 0; i <= rt.d; ++i) {
        if (in_a[i]) {
            acc.add(rt.mu(i) * h(y));
            continue;
        }
        for (int j = 0; j <= rt.d; ++j) {
            if (i == j || rt.p[i][j] == T(0)) continue;
            state z = y;
            if (i == 1)
                z[0] += 1;
            else if (i >= 2)
                z[i - 1] -= 1;
            if (j == 1)
                z[0] -= 1;
            else if (j >= 2)
                z[j - 1] += 1;
            acc.add(rt.p[i][j] * h(z));
        }
    }
    return acc.value() - h(y);
}

// Sufficient condition for h_G to be recoverable from its boundary values:
// |beta| < 1 and every |alpha(i)| <= 1.
template <class T>
bool db_determined_gate(const harmonic_solution<T>& sol) {
    if (!(abs_val(sol.beta) < T(1))) return false;
    for (const auto& av : sol.alpha)
        for (const T& a : av)
            if (abs_val(a) > T(1)) return false;
    return true;
}

// Simple extension check for routing matrices p1 (d1 stations) and p2
// (d2 > d1 stations): fold flows from old stations into new ones onto the
// outside column, require the folded matrix to be a positive multiple of p1
// and the new stations to have no flow back into the old ones.
template <class T>
struct extension_check_result {
    bool ok = false;
    std::vector<std::vector<T>> p_prime; // (d1+1) x (d1+1)
    T scale{0};
    std::string why;
};

template <class T>
extension_check_result<T> simple_extension_check(const jackson_routing<T>& p1,
                                                 const jackson_routing<T>& p2, double tol = 0.0) {
    if (!(p2.d > p1.d && p1.d >= 1)) throw validation_error("simple extension needs d2 > d1 >= 1");
    const int d1 = p1.d, d2 = p2.d;
    extension_check_result<T> res;
    res.p_prime.assign(d1 + 1, std::vector<T>(d1 + 1, T(0)));
    for (int i = 0; i <= d1; ++i)
        for (int j = 1; j <= d1; ++j)
            if (i != j) res.p_prime[i][j] = p2.p[i][j];
    for (int i = 1; i <= d1; ++i) {
        res.p_prime[i][0] = p2.p[i][0];
        for (int j = d1 + 1; j <= d2; ++j) res.p_prime[i][0] += p2.p[i][j];
    }
    T scale{0};
    for (int i = 0; i <= d1; ++i)
        for (int j = 0; j <= d1; ++j) scale += res.p_prime[i][j];
    res.scale = scale;
    if (scale == T(0)) {
        res.why = "folded matrix is zero";
        return res;
    }
    auto close = [&](const T& a, const T& b) {
        if constexpr (is_rational_v<T>)
            return a == b;
        else
            return std::abs(to_double(a - b)) <= tol;
    };
    for (int i = d1 + 1; i <= d2; ++i)
        for (int j = 1; j <= d1; ++j)
            if (!close(p2.p[i][j], T(0))) {
                res.why = "new station " + std::to_string(i) + " feeds back into station " +
                          std::to_string(j);
                return res;
            }
    for (int i = 0; i <= d1; ++i)
        for (int j = 0; j <= d1; ++j)
            if (!close(res.p_prime[i][j], T(scale * p1.p[i][j]))) {
                res.why = "folded entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") is not scale * p1";
                return res;
            }
    res.ok = true;
    return res;
}

// Extends an L-regular graph to a larger label set by adding one loop per new
// label on every vertex.
inline labeled_graph extend_graph(const labeled_graph& g, int new_label_hi) {
    if (new_label_hi < g.label_hi) throw validation_error("extend_graph: label set must grow");
    labeled_graph e = g;
    e.label_hi = new_label_hi;
    for (auto& lp : e.loops)
        for (int l = g.label_hi + 1; l <= new_label_hi; ++l) lp.insert(l);
    return e;
}

// Lifts a solution of a d1-dimensional system to the extension: new alpha
// coordinates all take the value beta, coefficients are unchanged.
template <class T>
harmonic_solution<T> extend_solution(const harmonic_solution<T>& sol, int d1, int d2) {
    if (d2 < d1) throw validation_error("extend_solution: d2 must be >= d1");
    harmonic_solution<T> e;
    e.beta = sol.beta;
    e.c = sol.c;
    for (const auto& av : sol.alpha) {
        std::vector<T> a2 = av;
        a2.resize(d2 - 1, sol.beta);
        e.alpha.push_back(std::move(a2));
    }
    return e;
}

} // namespace tandemq
