#pragma once

#include <cmath>

#include "tandemq/loglinear.hpp"

namespace tandemq {

// Constants gamma_k used to combine the exponential layers h_{k,r} into a
// globally superharmonic function, for r strictly between rho and 1:
//   gamma_1 = 1,
//   gamma_k = (1/d) min_{j<k} gamma_j (lambda(1-1/r) + mu_j(1-r)) / (lambda(1/r-1)).
// gamma_pair[k] = gamma_{k-1}/(gamma_{k-1}+gamma_k) and big_gamma[j] is the
// running product of gamma_pair over 2..j (with big_gamma[0] = big_gamma[1] = 1).
template <class T>
struct superharmonic_params {
    T r{0};
    std::vector<T> gamma;      // gamma[k-1] = gamma_k, k = 1..d
    std::vector<T> gamma_pair; // gamma_pair[k] = gamma_{k-1,k}, k = 2..d
    std::vector<T> big_gamma;  // big_gamma[j] = Gamma_j, j = 0..d

    T sum_gamma() const {
        T s{0};
        for (const T& g : gamma) s += g;
        return s;
    }
};

template <class T>
void require_r_in_range(const network_params<T>& np, const T& r) {
    if (!(r > np.rho_max() && r < T(1)))
        throw validation_error("r must lie strictly between rho and 1");
}

template <class T>
superharmonic_params<T> gamma_constants(const network_params<T>& np, const T& r) {
    np.validate();
    require_r_in_range(np, r);
    superharmonic_params<T> sp;
    sp.r = r;
    sp.gamma.push_back(T(1));
    const T denom = np.lambda * (T(1) / r - T(1));
    for (int k = 2; k <= np.d; ++k) {
        T best = sp.gamma[0] * (np.lambda * (T(1) - T(1) / r) + np.mu[0] * (T(1) - r));
        for (int j = 2; j < k; ++j)
            best = std::min(best, T(sp.gamma[j - 1] * (np.lambda * (T(1) - T(1) / r) + np.mu[j - 1] * (T(1) - r))));
        sp.gamma.push_back(best / (T(np.d) * denom));
    }
    sp.gamma_pair.assign(np.d + 1, T(0));
    sp.big_gamma.assign(np.d + 1, T(1));
    for (int k = 2; k <= np.d; ++k) {
        sp.gamma_pair[k] = sp.gamma[k - 2] / (sp.gamma[k - 2] + sp.gamma[k - 1]);
        sp.big_gamma[k] = sp.big_gamma[k - 1] * sp.gamma_pair[k];
    }
    return sp;
}

// h_{k,r}(y) = r^(y(1) - y(2) - ... - y(k))
template <class T>
T eval_hkr(int k, const T& r, const state& y) {
    long long e = y[0];
    for (int j = 2; j <= k; ++j) e -= y[j - 1];
    return pow_int(r, e);
}

// One-step drift of h_{k,r} under the y-walk in closed form:
//   k = 1:   h (lambda(1/r-1) + mu_1(r-1))                    (everywhere)
//   k >= 2:  h (lambda(1/r-1) + mu_k(r-1) 1{y(k) > 0})
template <class T>
T hkr_residual_formula(const network_params<T>& np, int k, const T& r, const state& y) {
    T h = eval_hkr(k, r, y);
    T drift = np.lambda * (T(1) / r - T(1));
    if (k == 1)
        drift += np.mu[0] * (r - T(1));
    else if (y[k - 1] > 0)
        drift += np.mu[k - 1] * (r - T(1));
    return h * drift;
}

// h_{2,k,r} = sum_{j<=k} gamma_j h_{j,r}; superharmonic for the y-walk.
template <class T>
T eval_h2kr(const superharmonic_params<T>& sp, int k, const state& y) {
    accumulator<T> acc;
    for (int j = 1; j <= k; ++j) acc.add(sp.gamma[j - 1] * eval_hkr(j, sp.r, y));
    return acc.value();
}

// Same quantity in x-coordinates: h_{j,r}(T_n(x)) = r^(n - x(1) - ... - x(j)).
template <class T>
T eval_h2kr_x(const superharmonic_params<T>& sp, int k, int n, const state& x) {
    if (k == 0) return pow_int(sp.r, (long long)n);
    accumulator<T> acc;
    long long s = 0;
    for (int j = 1; j <= k; ++j) {
        s += x[j - 1];
        acc.add(sp.gamma[j - 1] * pow_int(sp.r, (long long)n - s));
    }
    return acc.value();
}

// Upper bound on the escape probability: P_y(tau < inf) <= h_{2,d,r}(y)/gamma_d.
template <class T>
T escape_probability_bound(const network_params<T>& np, const superharmonic_params<T>& sp, const state& y) {
    return eval_h2kr(sp, np.d, y) / sp.gamma[np.d - 1];
}

// Maximal stations: i is kept iff no later station has utilization >= rho_i.
// The last station always belongs to the set.
template <class T>
std::vector<int> maximal_set(const network_params<T>& np) {
    std::vector<int> m;
    T best{0};
    for (int i = np.d; i >= 1; --i) {
        if (i == np.d || np.rho(i) > best) {
            m.push_back(i);
            best = np.rho(i);
        }
    }
    std::reverse(m.begin(), m.end());
    return m;
}

// g_n(x) = max_i rho_i^(n - x(1) - ... - x(i)); the maximum is attained on
// the maximal set.
inline double gn(const network_params<double>& np, int n, const state& x) {
    double best = 0;
    long long s = 0;
    for (int i = 1; i <= np.d; ++i) {
        s += x[i - 1];
        best = std::max(best, std::pow(np.rho(i), (double)(n - s)));
    }
    return best;
}

inline double lower_bound_gn(const network_params<double>& np, int n, const state& x) {
    return gn(np, n, x) - std::pow(np.rho_max(), (double)n);
}

// Exponent profile of g_n: g_n(x) = rho^(n g(x/n)) requires the minimum of
// (1 - x(1) - ... - x(i)) log_rho rho_i over the maximal set (powers of a
// base below one swap max and min).
inline double rate_g(const network_params<double>& np, const std::vector<double>& x_scaled) {
    const double lr = std::log(np.rho_max());
    double best = std::numeric_limits<double>::infinity();
    double s = 0;
    std::vector<int> m = maximal_set(np);
    size_t mi = 0;
    for (int i = 1; i <= np.d && mi < m.size(); ++i) {
        s += x_scaled[i - 1];
        if (i == m[mi]) {
            best = std::min(best, (1.0 - s) * std::log(np.rho(i)) / lr);
            ++mi;
        }
    }
    return best;
}

// Membership in the closed region where the lower bound g_n - rho^n
// degenerates: all partial sums over the maximal set stay below the
// per-station thresholds 1 - log rho / log rho_i.
inline bool in_region_rrho(const network_params<double>& np, const std::vector<double>& x_scaled) {
    const double lr = std::log(np.rho_max());
    double s = 0;
    std::vector<int> m = maximal_set(np);
    size_t mi = 0;
    for (int i = 1; i <= np.d && mi < m.size(); ++i) {
        s += x_scaled[i - 1];
        if (i == m[mi]) {
            if (s > 1.0 - lr / std::log(np.rho(i))) return false;
            ++mi;
        }
    }
    return true;
}

// Exact-rational version: the threshold comparison
//   s <= 1 - log rho / log rho_i
// is equivalent (for s - 1 = p/q, q > 0) to rho_i^p rho^q >= 1.
inline bool in_region_rrho_exact(const network_params<rat>& np, const std::vector<rat>& x_scaled) {
    const rat rho = np.rho_max();
    std::vector<int> m = maximal_set(np);
    rat s{0};
    size_t mi = 0;
    for (int i = 1; i <= np.d && mi < m.size(); ++i) {
        s += x_scaled[i - 1];
        if (i == m[mi]) {
            rat diff = s - 1;
            auto p = boost::multiprecision::numerator(diff);
            auto q = boost::multiprecision::denominator(diff);
            rat lhs = pow_int(np.rho(i), p.template convert_to<long long>()) *
                      pow_int(rho, q.template convert_to<long long>());
            if (!(lhs >= rat(1))) return false;
            ++mi;
        }
    }
    return true;
}

// Membership in the region where the relative-error bound applies: some
// maximal station i has x(1)+...+x(i) >= 1 + n(1 - log rho / log rho_i).
// Exact in rational mode via rho_i^(s-1-n) rho^n <= 1.
template <class T>
bool in_rbar(const network_params<T>& np, int n, const state& x) {
    std::vector<int> m = maximal_set(np);
    long long s = 0;
    size_t mi = 0;
    for (int i = 1; i <= np.d && mi < m.size(); ++i) {
        s += x[i - 1];
        if (i == m[mi]) {
            if constexpr (is_rational_v<T>) {
                rat lhs = pow_int(np.rho(i), s - 1 - n) * pow_int(np.rho_max(), (long long)n);
                if (lhs <= rat(1)) return true;
            } else {
                double thr = 1.0 + n * (1.0 - std::log(np.rho_max()) / std::log(np.rho(i)));
                if ((double)s >= thr) return true;
            }
            ++mi;
        }
    }
    return false;
}

// rho^(n (1 - g(x/n) - eps)), the advertised relative-error decay on rbar.
inline double relative_error_bound(const network_params<double>& np, int n, const state& x, double eps) {
    std::vector<double> xs(x.begin(), x.end());
    for (double& v : xs) v /= n;
    return std::pow(np.rho_max(), n * (1.0 - rate_g(np, xs) - eps));
}

} // namespace tandemq
