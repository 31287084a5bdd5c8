#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "tandemq/state.hpp"

namespace tandemq {

// A term c * [(beta,alpha), y] with
//   [(beta,alpha), y] = beta^(y(1) - sum_{j>=2} y(j)) * prod_{j>=2} alpha(j)^y(j).
// alpha is indexed 2..d and stored as alpha[j-2]; everything here keeps that
// convention. Where an index d+1 appears, alpha(d+1) means beta.
template <class T>
struct loglinear_term {
    T c{1};
    T beta{1};
    std::vector<T> alpha; // alpha[j-2] = alpha(j), j = 2..d
};

template <class T>
T eval_point(const T& beta, const std::vector<T>& alpha, const state& y) {
    long long w = y[0];
    for (size_t j = 1; j < y.size(); ++j) w -= y[j];
    T v = pow_int(beta, w);
    for (size_t j = 1; j < y.size(); ++j) v *= pow_int(alpha[j - 1], y[j]);
    return v;
}

template <class T>
T eval_term(const loglinear_term<T>& t, const state& y) {
    T v = t.c * eval_point(t.beta, t.alpha, y);
    if constexpr (!is_rational_v<T>) {
        if (!std::isfinite(v))
            throw numeric_error("log-linear term overflows the linear domain; use eval_term_log");
    }
    return v;
}

// Log-domain evaluation: (sign, log|value|). Requires beta, alpha > 0.
struct log_value {
    int sign = 0;       // -1, 0, +1
    double log_abs = 0; // meaningful only when sign != 0
    double to_linear() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

inline log_value eval_term_log(const loglinear_term<double>& t, const state& y) {
    log_value r;
    if (t.c == 0.0) return r;
    r.sign = t.c > 0 ? 1 : -1;
    long long w = y[0];
    for (size_t j = 1; j < y.size(); ++j) w -= y[j];
    double acc = std::log(std::fabs(t.c)) + (double)w * std::log(t.beta);
    for (size_t j = 1; j < y.size(); ++j) acc += (double)y[j] * std::log(t.alpha[j - 1]);
    r.log_abs = acc;
    return r;
}

// Routing matrix of a Jackson network on stations 1..d; index 0 is the
// outside. p(i,j) is the probability of the increment moving one customer
// from i to j; row sums over i >= 1 give the service rates.
template <class T>
struct jackson_routing {
    int d = 0;
    std::vector<std::vector<T>> p; // (d+1) x (d+1)

    T mu(int i) const { // i in 1..d
        T s{0};
        for (int j = 0; j <= d; ++j) s += p[i][j];
        return s;
    }

    void validate() const {
        if (d < 1 || (int)p.size() != d + 1) throw validation_error("routing matrix must be (d+1)x(d+1)");
        T total{0};
        for (int i = 0; i <= d; ++i) {
            if ((int)p[i].size() != d + 1) throw validation_error("routing matrix must be square");
            if (!(p[i][i] == T(0))) throw validation_error("routing diagonal must be zero");
            for (int j = 0; j <= d; ++j) {
                if (p[i][j] < T(0)) throw validation_error("routing entries must be nonnegative");
                total += p[i][j];
            }
        }
        if constexpr (is_rational_v<T>) {
            if (total != T(1)) throw validation_error("routing entries must sum to 1 exactly");
        } else {
            if (std::abs(to_double(total) - 1.0) > 1e-12)
                throw validation_error("routing entries must sum to 1");
        }
    }

    static jackson_routing tandem(const network_params<T>& np) {
        jackson_routing r;
        r.d = np.d;
        r.p.assign(np.d + 1, std::vector<T>(np.d + 1, T(0)));
        r.p[0][1] = np.lambda;
        for (int i = 1; i < np.d; ++i) r.p[i][i + 1] = np.mu[i - 1];
        r.p[np.d][0] = np.mu[np.d - 1];
        return r;
    }
};

// [(beta,alpha), v_{i,j}] for the y-increment of a customer moving i -> j.
// With f(0) = 1, f(1) = 1/beta, f(k) = alpha(k)/beta the factor is f(j)/f(i).
template <class T>
T term_increment_factor(const T& beta, const std::vector<T>& alpha, int i, int j) {
    auto f = [&](int k) -> T {
        if (k == 0) return T(1);
        if (k == 1) return T(1) / beta;
        return alpha[k - 2] / beta;
    };
    return f(j) / f(i);
}

// Characteristic polynomial p_a(beta,alpha): jumps out of stations in `a` are
// frozen (contributing mu_i), everything else contributes its log-linear
// increment factor. The surface H_a is the level set p_a = 1.
template <class T>
T char_poly_general(const jackson_routing<T>& rt, const std::vector<int>& a, const T& beta,
                    const std::vector<T>& alpha) {
    if (beta == T(0)) throw numeric_error("characteristic polynomial: beta must be nonzero");
    for (const T& al : alpha)
        if (al == T(0)) throw numeric_error("characteristic polynomial: alpha entries must be nonzero");
    std::vector<char> in_a(rt.d + 1, 0);
    for (int i : a) in_a[i] = 1;
    accumulator<T> acc;
    for (int i = 0; i <= rt.d; ++i) {
        if (in_a[i]) {
            acc.add(rt.mu(i));
            continue;
        }
        for (int j = 0; j <= rt.d; ++j) {
            if (i == j || rt.p[i][j] == T(0)) continue;
            acc.add(rt.p[i][j] * term_increment_factor(beta, alpha, i, j));
        }
    }
    return acc.value();
}

template <class T>
T char_poly_general(const jackson_routing<T>& rt, const T& beta, const std::vector<T>& alpha) {
    return char_poly_general(rt, {}, beta, alpha);
}

// C(i,beta,alpha) = mu_i - sum_j p(i,j) [(beta,alpha),v_{i,j}]; vanishes
// exactly on H intersect H_i (it equals p_i - p there).
template <class T>
T c_general(const jackson_routing<T>& rt, int i, const T& beta, const std::vector<T>& alpha) {
    T s = rt.mu(i);
    for (int j = 0; j <= rt.d; ++j) {
        if (j == i || rt.p[i][j] == T(0)) continue;
        s -= rt.p[i][j] * term_increment_factor(beta, alpha, i, j);
    }
    return s;
}

// Tandem specializations: p = lambda/beta + mu_1 alpha(2)
//                            + sum_{j=2..d} mu_j alpha(j+1)/alpha(j),
// with alpha(d+1) = beta.
template <class T>
T alpha_at(const network_params<T>& np, const T& beta, const std::vector<T>& alpha, int j) {
    if (j == np.d + 1) return beta;
    return alpha[j - 2];
}

template <class T>
T char_poly_tandem(const network_params<T>& np, const T& beta, const std::vector<T>& alpha) {
    if (beta == T(0)) throw numeric_error("characteristic polynomial: beta must be nonzero");
    accumulator<T> acc;
    acc.add(np.lambda / beta);
    acc.add(np.mu[0] * alpha_at(np, beta, alpha, 2));
    for (int j = 2; j <= np.d; ++j) {
        const T& aj = alpha_at(np, beta, alpha, j);
        if (aj == T(0)) throw numeric_error("characteristic polynomial: alpha entries must be nonzero");
        acc.add(np.mu[j - 1] * alpha_at(np, beta, alpha, j + 1) / aj);
    }
    return acc.value();
}

// C(j,beta,alpha) = mu_j (1 - alpha(j+1)/alpha(j)) for j in 2..d.
template <class T>
T c_tandem(const network_params<T>& np, int j, const T& beta, const std::vector<T>& alpha) {
    return np.mu[j - 1] * (T(1) - alpha_at(np, beta, alpha, j + 1) / alpha_at(np, beta, alpha, j));
}

// Numerator/denominator of the conjugacy product: multiplying p = 1 by
// alpha(i) leaves a quadratic whose two roots r1, r2 satisfy
//   r1 r2 = sum_j p(i,j)[(b,a{i}),v_{i,j}] / sum_j p(j,i)[(b,a{i}),v_{j,i}]
// where a{i} is alpha with component i replaced by 1.
template <class T>
std::pair<T, T> conjugacy_num_den(const jackson_routing<T>& rt, int i, const T& beta,
                                  const std::vector<T>& alpha) {
    std::vector<T> abar = alpha;
    abar[i - 2] = T(1);
    T num{0}, den{0};
    for (int j = 0; j <= rt.d; ++j) {
        if (j == i) continue;
        if (rt.p[i][j] != T(0)) num += rt.p[i][j] * term_increment_factor(beta, abar, i, j);
        if (rt.p[j][i] != T(0)) den += rt.p[j][i] * term_increment_factor(beta, abar, j, i);
    }
    return {num, den};
}

template <class T>
T conjugate_product(const jackson_routing<T>& rt, int i, const T& beta, const std::vector<T>& alpha) {
    auto [num, den] = conjugacy_num_den(rt, i, beta, alpha);
    if (den == T(0)) throw numeric_error("conjugacy product: no flow into station " + std::to_string(i));
    return num / den;
}

// The i-conjugate partner of a surface point, by Vieta: the other root of the
// quadratic is product / alpha(i). Exact in rational mode.
template <class T>
std::vector<T> conjugate_partner(const jackson_routing<T>& rt, int i, const T& beta,
                                 const std::vector<T>& alpha) {
    std::vector<T> other = alpha;
    other[i - 2] = conjugate_product(rt, i, beta, alpha) / alpha[i - 2];
    return other;
}

// Both roots of the alpha(i)-quadratic through a surface point, ascending.
// Degenerate leading coefficients and complex roots are reported as errors;
// only real-valued points are in scope here.
inline std::pair<double, double> conjugate_point(const jackson_routing<double>& rt, int i, double beta,
                                                 const std::vector<double>& alpha) {
    std::vector<double> abar = alpha;
    abar[i - 2] = 1.0;
    auto [num, den] = conjugacy_num_den(rt, i, beta, alpha);
    // middle coefficient: all terms not involving alpha(i), minus the 1 from p = 1
    double mid = -1.0;
    for (int r = 0; r <= rt.d; ++r) {
        for (int j = 0; j <= rt.d; ++j) {
            if (r == j || rt.p[r][j] == 0.0 || r == i || j == i) continue;
            mid += rt.p[r][j] * term_increment_factor(beta, abar, r, j);
        }
    }
    const double a2 = den, a1 = mid, a0 = num;
    if (std::fabs(a2) < 1e-300) throw numeric_error("conjugate_point: degenerate quadratic");
    double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc < 0) throw numeric_error("conjugate_point: complex roots");
    double q = -0.5 * (a1 + (a1 >= 0 ? 1.0 : -1.0) * std::sqrt(disc));
    double r1, r2;
    if (q == 0.0) {
        r1 = 0.0;
        r2 = -a1 / a2;
    } else {
        r1 = q / a2;
        r2 = a0 / q;
    }
    if (r1 > r2) std::swap(r1, r2);
    return {r1, r2};
}

} // namespace tandemq
