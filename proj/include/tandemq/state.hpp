#pragma once

#include <numeric>
#include <vector>

#include "tandemq/params.hpp"

namespace tandemq {

// Lattice states. x-coordinates live in Z_+^d; y-coordinates (the walk seen
// from the exit face) leave coordinate 1 unconstrained.
using state = std::vector<int>;

inline int sum_s(const state& x) { return std::accumulate(x.begin(), x.end(), 0); }

// y(1) >= y(2) + ... + y(d)
inline bool in_b(const state& y) {
    int s = 0;
    for (size_t j = 1; j < y.size(); ++j) s += y[j];
    return y[0] >= s;
}

inline bool on_boundary_b(const state& y) {
    int s = 0;
    for (size_t j = 1; j < y.size(); ++j) s += y[j];
    return y[0] == s;
}

// T_n: y(1) = n - x(1), other coordinates unchanged. Involution.
inline state affine_map_tn(int n, const state& x) {
    state y = x;
    y[0] = n - x[0];
    return y;
}

// Increments are indexed 0..d: 0 = arrival (e_1, prob lambda),
// k = 1..d-1 = transfer from station k (-e_k + e_{k+1}, prob mu_k),
// d = departure (-e_d, prob mu_d).
inline int num_increments(int d) { return d + 1; }

template <class T>
T increment_prob(const network_params<T>& p, int k) {
    return k == 0 ? p.lambda : p.mu[k - 1];
}

// x-walk: any jump that would leave Z_+^d is cancelled.
inline state step_x(const state& x, int k) {
    const int d = (int)x.size();
    state r = x;
    if (k == 0) {
        r[0] += 1;
    } else if (k < d) {
        if (r[k - 1] == 0) return x;
        r[k - 1] -= 1;
        r[k] += 1;
    } else {
        if (r[d - 1] == 0) return x;
        r[d - 1] -= 1;
    }
    return r;
}

// Same walk without the coordinate-1 constraint (it may go negative).
inline state step_xbar(const state& x, int k) {
    const int d = (int)x.size();
    state r = x;
    if (k == 0) {
        r[0] += 1;
    } else if (k == d) {
        if (d == 1) {
            r[0] -= 1;
        } else {
            if (r[d - 1] == 0) return x;
            r[d - 1] -= 1;
        }
    } else if (k == 1) {
        r[0] -= 1;
        r[1] += 1;
    } else {
        if (r[k - 1] == 0) return x;
        r[k - 1] -= 1;
        r[k] += 1;
    }
    return r;
}

// y-walk: increments are reflected in coordinate 1 (arrival becomes -e_1,
// transfer from station 1 becomes +e_1+e_2), and only coordinates 2..d are
// constrained.
inline state step_y(const state& y, int k) {
    const int d = (int)y.size();
    state r = y;
    if (k == 0) {
        r[0] -= 1;
    } else if (k == d) {
        // departure: -e_d for d >= 2, reflected to +e_1 when d == 1
        if (d == 1) {
            r[0] += 1;
        } else {
            if (r[d - 1] == 0) return y;
            r[d - 1] -= 1;
        }
    } else if (k == 1) {
        r[0] += 1;
        r[1] += 1;
    } else {
        if (r[k - 1] == 0) return y;
        r[k - 1] -= 1;
        r[k] += 1;
    }
    return r;
}

inline std::string state_to_string(const state& x) {
    std::string s;
    for (size_t i = 0; i < x.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(x[i]);
    }
    return s;
}

} // namespace tandemq
