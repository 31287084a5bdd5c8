#pragma once

#include "tandemq/harmonic.hpp"

namespace tandemq {

// Regular graph family for tandem walks. Vertices of graph (d, D) are the
// sets a ∪ {d} with a ⊂ {1..d-1}; for a label l in {2..D} a vertex containing
// l toggles element l-1 along its l-edge, every other label is a loop.
// Vertex i corresponds to the subset with bitmask i | (1 << (d-1)).
inline labeled_graph build_g(int d, int D) {
    if (!(1 <= d && d <= D)) throw validation_error("build_g: need 1 <= d <= D");
    if (D > 24) throw validation_error("build_g: dimension too large for subset enumeration");
    labeled_graph g;
    g.label_lo = 2;
    g.label_hi = D;
    const uint32_t dbit = 1u << (d - 1);
    const uint32_t na = 1u << (d - 1); // subsets of {1..d-1}
    for (uint32_t a = 0; a < na; ++a) g.vertices.push_back(a | dbit);
    g.loops.assign(na, {});
    for (uint32_t a = 0; a < na; ++a) {
        const uint32_t mask = a | dbit;
        for (int l = 2; l <= D; ++l) {
            if (l <= d && (mask >> (l - 1)) & 1u) {
                uint32_t pa = a ^ (1u << (l - 2));
                if (a < pa) g.add_edge((int)a, (int)pa, l);
            } else {
                g.loops[a].insert(l);
            }
        }
    }
    return g;
}

// Splits the vertex set of graph (D, D) into the lone vertex {D} and, for
// each k < D, the block of vertices whose second-largest element is k (a copy
// of graph (k, D)). Returned as vertex-index lists, the {D} block first.
inline std::vector<std::vector<int>> decompose_embedding(int D) {
    if (D < 2) throw validation_error("decompose_embedding: need D >= 2");
    std::vector<std::vector<int>> parts(D);
    const uint32_t na = 1u << (D - 1);
    for (uint32_t a = 0; a < na; ++a) {
        if (a == 0) {
            parts[0].push_back(0);
            continue;
        }
        int k = 31 - __builtin_clz(a) + 1; // largest element of a = second largest of the vertex
        parts[k].push_back((int)a);
    }
    return parts;
}

// Closed-form solution attached to a sorted subset a of {1..D}:
//   c*_a    = (-1)^{|a|-1} prod_{j<|a|} prod_{l=a(j)+1}^{a(j+1)} (mu_l - lambda)/(mu_l - mu_{a(j)})
//   alpha*_a(l) = 1 for l <= a(1); rho_{a(j)} for a(j) < l <= a(j+1); rho_{a(|a|)} beyond
//   beta*_a = rho_{a(|a|)}
template <class T>
T cstar(const std::vector<int>& a, const network_params<T>& np) {
    if (a.empty()) throw validation_error("cstar: subset must be nonempty");
    T v = (a.size() % 2 == 0) ? T(-1) : T(1);
    for (size_t j = 0; j + 1 < a.size(); ++j) {
        for (int l = a[j] + 1; l <= a[j + 1]; ++l) {
            T den = np.mu[l - 1] - np.mu[a[j] - 1];
            if (den == T(0))
                throw validation_error("cstar: service rates must be pairwise distinct");
            v *= (np.mu[l - 1] - np.lambda) / den;
        }
    }
    return v;
}

template <class T>
std::vector<T> alphastar(const std::vector<int>& a, const network_params<T>& np, int D) {
    if (a.empty()) throw validation_error("alphastar: subset must be nonempty");
    std::vector<T> al(D - 1);
    for (int l = 2; l <= D; ++l) {
        size_t j = 0;
        while (j < a.size() && a[j] < l) ++j;
        // j = number of elements of a strictly below l
        al[l - 2] = (j == 0) ? T(1) : np.rho(a[j - 1]);
    }
    return al;
}

template <class T>
T betastar(const std::vector<int>& a, const network_params<T>& np) {
    return np.rho(a.back());
}

// The solution of the harmonic system on build_g(d, D), vertex order aligned.
template <class T>
harmonic_solution<T> tandem_solution(int d, int D, const network_params<T>& np) {
    if (np.d != D) throw validation_error("tandem_solution: params dimension must equal D");
    if (!np.mu_distinct()) throw validation_error("tandem_solution: service rates must be pairwise distinct");
    harmonic_solution<T> sol;
    sol.beta = np.rho(d);
    const uint32_t na = 1u << (d - 1);
    const uint32_t dbit = 1u << (d - 1);
    for (uint32_t a = 0; a < na; ++a) {
        std::vector<int> set = mask_elements(a | dbit);
        sol.c.push_back(cstar(set, np));
        sol.alpha.push_back(alphastar(set, np, D));
    }
    return sol;
}

namespace detail {
// Subsets of {1..d-1} in binary-reflected Gray order; the fixed summation
// order keeps the float-mode result deterministic.
inline uint32_t gray(uint32_t k) { return k ^ (k >> 1); }
} // namespace detail

// Outer weight of block d in the full formula: prod_{l=d+1}^{D} (mu_l - lambda)/(mu_l - mu_d).
template <class T>
T outer_weight(int d, const network_params<T>& np) {
    T w(1);
    for (int l = d + 1; l <= np.d; ++l) {
        T den = np.mu[l - 1] - np.mu[d - 1];
        if (den == T(0)) throw validation_error("outer_weight: service rates must be pairwise distinct");
        w *= (np.mu[l - 1] - np.lambda) / den;
    }
    return w;
}

// h*_d(y) = sum over a ⊂ {1..d-1} of c*_{a∪{d}} [(rho_d, alpha*_{a∪{d}}), y]
template <class T>
T eval_hstar(int d, const network_params<T>& np, const state& y) {
    const int D = np.d;
    if (!(1 <= d && d <= D)) throw validation_error("eval_hstar: need 1 <= d <= D");
    const T beta = np.rho(d);
    const uint32_t na = 1u << (d - 1);
    const uint32_t dbit = 1u << (d - 1);
    accumulator<T> acc;
    for (uint32_t k = 0; k < na; ++k) {
        std::vector<int> set = mask_elements(detail::gray(k) | dbit);
        acc.add(cstar(set, np) * eval_point(beta, alphastar(set, np, D), y));
    }
    return acc.value();
}

// One row of the optional per-term breakdown emitted by the CLI.
struct term_row {
    int d = 0;
    std::vector<int> subset;
    double c = 0, beta = 0;
    std::vector<double> alpha;
    double value = 0;
};

// Weighted sum of the h*_d: a harmonic function of the y-walk on the whole
// lattice whose restriction to B is the escape probability. Terms are
// accumulated in a fixed order (d ascending, subsets in Gray order) with
// compensated summation in float mode.
template <class T>
T escape_formula(const network_params<T>& np, const state& y, std::vector<term_row>* breakdown = nullptr) {
    if ((int)y.size() != np.d) throw validation_error("state dimension mismatch");
    if (!np.mu_distinct())
        throw validation_error("closed form needs pairwise distinct service rates (d=3 equal rates has "
                               "its own formula)");
    accumulator<T> acc;
    for (int d = 1; d <= np.d; ++d) {
        const T w = outer_weight(d, np);
        const T beta = np.rho(d);
        const uint32_t na = 1u << (d - 1);
        const uint32_t dbit = 1u << (d - 1);
        for (uint32_t k = 0; k < na; ++k) {
            std::vector<int> set = mask_elements(detail::gray(k) | dbit);
            T c = cstar(set, np);
            T term = w * c * eval_point(beta, alphastar(set, np, np.d), y);
            acc.add(term);
            if (breakdown) {
                term_row row;
                row.d = d;
                row.subset = set;
                row.c = to_double(c);
                row.beta = to_double(beta);
                for (const T& al : alphastar(set, np, np.d)) row.alpha.push_back(to_double(al));
                row.value = to_double(term);
                breakdown->push_back(std::move(row));
            }
        }
    }
    return acc.value();
}

// Escape probability of the limit walk: P_y(tau < infinity) for y in B.
template <class T>
T prob_tau_finite(const network_params<T>& np, const state& y, std::vector<term_row>* breakdown = nullptr) {
    np.validate();
    if ((int)y.size() != np.d) throw validation_error("state dimension mismatch");
    if (!in_b(y)) throw validation_error("state is outside the region y(1) >= y(2)+...+y(d)");
    return escape_formula(np, y, breakdown);
}

// Number of log-linear terms in the full formula: sum_{d<=D} 2^{d-1} = 2^D - 1.
inline long long formula_term_count(int D) { return (1ll << D) - 1; }

// All-equal-rates closed form in three dimensions (the limit of the general
// formula as the service rates coalesce):
//   P = rho^w ( c0^2 w^2 rho^{y2+y3} / 2
//              + ( (c0^2/2 + y3 c0^2) rho^{y2} + c0 ) rho^{y3} w + 1 ),
// with w = y(1)-y(2)-y(3), c0 = (mu-lambda)/mu, rho = lambda/mu. The raw
// polynomial form is defined on the whole lattice; the checked wrapper below
// restricts it to B.
template <class T>
T equal_rates_formula_d3(const T& lambda, const T& mu, const state& y) {
    if (y.size() != 3) throw validation_error("equal-rates formula is for d = 3 only");
    if (!(lambda > T(0) && lambda < mu)) throw validation_error("need 0 < lambda < mu");
    const T rho = lambda / mu;
    const T c0 = (mu - lambda) / mu;
    const long long w = (long long)y[0] - y[1] - y[2];
    const T rw = pow_int(rho, w);
    const T r2 = pow_int(rho, (long long)y[1]);
    const T r3 = pow_int(rho, (long long)y[2]);
    T quad = c0 * c0 * T(w) * T(w) * r2 * r3 / T(2);
    T lin = ((c0 * c0 / T(2) + T(y[2]) * c0 * c0) * r2 + c0) * r3 * T(w);
    return rw * (quad + lin + T(1));
}

template <class T>
T prob_tau_finite_equal_rates_d3(const T& lambda, const T& mu, const state& y) {
    if (y.size() == 3 && !in_b(y))
        throw validation_error("state is outside the region y(1) >= y(2)+y(3)");
    return equal_rates_formula_d3(lambda, mu, y);
}

// Approximation of the finite-n overflow probability: evaluate the limit
// formula at the image of x under T_n.
template <class T>
T approx_prob_x(const network_params<T>& np, int n, const state& x) {
    if (sum_s(x) > n) throw validation_error("need sum(x) <= n");
    if (np.d == 3 && np.mu_all_equal())
        return prob_tau_finite_equal_rates_d3(np.lambda, np.mu[0], affine_map_tn(n, x));
    return prob_tau_finite(np, affine_map_tn(n, x));
}

} // namespace tandemq
