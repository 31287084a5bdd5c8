#include "tandemq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <ostream>

#include "tandemq/tandem.hpp"

namespace tandemq {

std::size_t state_budget_default() {
    if (const char* env = std::getenv("TANDEMQ_MAX_STATES")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return (std::size_t)v;
    }
    return solve_options{}.max_states;
}

void solve_grid::build_tables() {
    // binom_[k][m] = C(m+k, k) = number of k-vectors with sum <= m
    binom_.assign(d + 1, std::vector<uint64_t>(n + 1, 1));
    for (int k = 1; k <= d; ++k)
        for (int m = 1; m <= n; ++m) binom_[k][m] = binom_[k][m - 1] + binom_[k - 1][m];
}

std::size_t solve_grid::rank(const state& x) const {
    // lexicographic rank via the hockey-stick identity:
    // sum_{v < x_j} C(rem - v + k, k) = C(rem+k+1, k+1) - C(rem-x_j+k+1, k+1)
    uint64_t r = 0;
    int rem = n;
    for (int j = 0; j < d; ++j) {
        const int k = d - 1 - j;
        if (x[j] > 0) r += binom_[k + 1][rem] - binom_[k + 1][rem - x[j]];
        rem -= x[j];
    }
    return (std::size_t)r;
}

namespace {

// Odometer over the simplex {sum x <= n} in lexicographic (= rank) order.
struct simplex_iter {
    int d, n;
    state x;
    int used = 0;
    bool done = false;
    simplex_iter(int d_, int n_) : d(d_), n(n_), x(d_, 0) {}
    void advance() {
        for (int j = d - 1; j >= 0; --j) {
            if (used < n) {
                ++x[j];
                ++used;
                return;
            }
            used -= x[j];
            x[j] = 0;
        }
        done = true;
    }
};

// rank of x with two coordinates shifted, without materializing the state
inline uint64_t rank_shifted(const std::vector<std::vector<uint64_t>>& B, int d, int n, const int* x,
                             int a, int da, int b, int db) {
    uint64_t r = 0;
    int rem = n;
    for (int j = 0; j < d; ++j) {
        int xj = x[j];
        if (j == a) xj += da;
        if (j == b) xj += db;
        const int k = d - 1 - j;
        if (xj > 0) r += B[k + 1][rem] - B[k + 1][rem - xj];
        rem -= xj;
    }
    return r;
}

} // namespace

solve_grid solve_exact(const network_params<double>& np, int n, const solve_options& opt) {
    np.validate();
    if (n < 1) throw validation_error("solve_exact: need n >= 1");
    solve_grid g;
    g.d = np.d;
    g.n = n;
    g.build_tables();
    const uint64_t count = g.binom_[np.d][n];
    if (count > opt.max_states)
        throw budget_error("solve_exact: " + std::to_string(count) + " states exceed the budget of " +
                           std::to_string(opt.max_states));
    g.values.assign(count, 0.0);

    const int d = np.d;
    std::vector<double> prob(d + 1);
    for (int k = 0; k <= d; ++k) prob[k] = increment_prob(np, k);

    // Interior states (0 < sum < n, not the origin) stored flat; Dirichlet
    // data is 1 on the outer boundary and 0 at the origin.
    std::vector<int> flat;      // d ints per interior state
    std::vector<uint64_t> idx;  // rank of each interior state
    {
        simplex_iter it(d, n);
        uint64_t r = 0;
        while (!it.done) {
            if (it.used == n)
                g.values[r] = 1.0;
            else if (r != 0) {
                flat.insert(flat.end(), it.x.begin(), it.x.end());
                idx.push_back(r);
            }
            ++r;
            it.advance();
        }
    }
    const std::size_t ni = idx.size();
    const auto& B = g.binom_;
    const std::vector<double>& val = g.values;

    auto expected = [&](const int* x, uint64_t r) {
        // E_x[h(X_1)]: arrival, transfers, departure; cancelled jumps keep x.
        double v = prob[0] * val[rank_shifted(B, d, n, x, 0, +1, -1, 0)];
        for (int k = 1; k < d; ++k) {
            if (x[k - 1] > 0)
                v += prob[k] * val[rank_shifted(B, d, n, x, k - 1, -1, k, +1)];
            else
                v += prob[k] * val[r];
        }
        if (x[d - 1] > 0)
            v += prob[d] * val[rank_shifted(B, d, n, x, d - 1, -1, -1, 0)];
        else
            v += prob[d] * val[r];
        return v;
    };

    auto update = [&](std::size_t i) {
        const int* x = &flat[i * d];
        const uint64_t r = idx[i];
        double old = g.values[r];
        double v = expected(x, r);
        double nv = old + opt.omega * (v - old);
        g.values[r] = nv;
        return std::abs(nv - old) / std::max(std::abs(nv), 1e-300);
    };

    // Sweep until the geometric tail estimate diff * theta/(1-theta) drops
    // below tol/2 (theta taken conservatively as the worst recent contraction
    // ratio), or the floating-point fixed point is reached (diff = 0 or no
    // improvement over a long stretch of sweeps).
    double prev_diff = 0, best = std::numeric_limits<double>::infinity();
    double ratios[5] = {1, 1, 1, 1, 1};
    int stall = 0;
    long sweeps = 0;
    for (; sweeps < opt.max_iterations; ++sweeps) {
        double diff = 0;
        if (sweeps % 2 == 0) {
            for (std::size_t i = 0; i < ni; ++i) diff = std::max(diff, update(i));
        } else {
            for (std::size_t i = ni; i-- > 0;) diff = std::max(diff, update(i));
        }
        if (diff == 0) {
            ++sweeps;
            break;
        }
        ratios[sweeps % 5] = prev_diff > 0 ? diff / prev_diff : 1.0;
        prev_diff = diff;
        double theta = *std::max_element(ratios, ratios + 5);
        theta = std::min(theta, 0.99999);
        if (sweeps >= 5 && diff * theta / (1.0 - theta) <= 0.5 * opt.tol) {
            ++sweeps;
            break;
        }
        if (diff < best) {
            best = diff;
            stall = 0;
        } else if (++stall >= 50) {
            ++sweeps;
            break;
        }
    }
    if (sweeps >= opt.max_iterations)
        throw numeric_error("solve_exact: no convergence within the iteration cap");
    g.iterations = sweeps;

    double res = 0;
    for (std::size_t i = 0; i < ni; ++i)
        res = std::max(res, std::abs(expected(&flat[i * d], idx[i]) - g.values[idx[i]]));
    g.residual = res;
    return g;
}

void solve_grid::write_csv(std::ostream& os) const {
    for (int j = 1; j <= d; ++j) os << "x" << j << ",";
    os << "value\n";
    simplex_iter it(d, n);
    std::size_t r = 0;
    while (!it.done) {
        for (int j = 0; j < d; ++j) os << it.x[j] << ",";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", values[r]);
        os << buf << "\n";
        ++r;
        it.advance();
    }
}

void solve_grid::write_binary(std::ostream& os) const {
    auto put_u32 = [&](uint32_t v) {
        unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                              (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
        os.write((const char*)b, 4);
    };
    put_u32((uint32_t)d);
    put_u32((uint32_t)n);
    for (double v : values) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((bits >> (8 * i)) & 0xff);
        os.write((const char*)b, 8);
    }
}

double gamblers_ruin(const network_params<double>& np, int n, int x) {
    if (np.d != 1) throw validation_error("gamblers_ruin: d must be 1");
    np.validate();
    if (x < 0 || x > n) throw validation_error("gamblers_ruin: need 0 <= x <= n");
    const double lr = std::log(np.mu[0] / np.lambda); // > 0 under stability
    const double num = -std::expm1(-x * lr);
    const double den = -std::expm1(-n * lr);
    return std::exp((double)(x - n) * lr) * num / den;
}

y_bracket solve_y_bracket(const network_params<double>& np, const state& y, int L,
                          const solve_options& opt) {
    np.validate();
    const int d = np.d;
    if ((int)y.size() != d) throw validation_error("solve_y_bracket: state dimension mismatch");
    if (!in_b(y)) throw validation_error("solve_y_bracket: y must satisfy y(1) >= sum of the rest");
    int w0 = y[0];
    for (int j = 1; j < d; ++j) w0 -= y[j];
    for (int j = 1; j < d; ++j)
        if (y[j] > L) throw validation_error("solve_y_bracket: truncation radius below the state");
    if (w0 > L) throw validation_error("solve_y_bracket: truncation radius below the state");
    if (w0 == 0) return {1.0, 1.0};

    // states indexed by (w, y(2)..y(d)), all coordinates in 0..L
    const std::size_t side = (std::size_t)L + 1;
    std::size_t total = 1;
    for (int j = 0; j < d; ++j) {
        if (total > opt.max_states / side) throw budget_error("solve_y_bracket: state budget exceeded");
        total *= side;
    }
    std::vector<double> prob(d + 1);
    for (int k = 0; k <= d; ++k) prob[k] = increment_prob(np, k);
    std::vector<std::size_t> stride(d); // stride[0] for w, stride[j] for y(j+1)
    stride[d - 1] = 1;
    for (int j = d - 2; j >= 0; --j) stride[j] = stride[j + 1] * side;

    // Seeding at the far value makes the sweep monotone (increasing for the
    // lower solve, decreasing for the upper), so any stopping point is still
    // a valid bracket; the tolerance only buys tightness.
    auto solve_with_far = [&](double far) {
        std::vector<double> val(total, far);
        std::vector<int> c(d); // c[0] = w, c[j] = y(j+1)
        auto pass = [&](bool forward) {
            double diff = 0;
            const std::size_t beg = forward ? 0 : total - 1;
            for (std::size_t step = 0; step < total; ++step) {
                const std::size_t idx = forward ? beg + step : beg - step;
                std::size_t rem = idx;
                for (int j = 0; j < d; ++j) {
                    c[j] = (int)(rem / stride[j]);
                    rem %= stride[j];
                }
                if (c[0] == 0) continue; // target set, value 1 handled in lookups
                double v = 0;
                for (int k = 0; k <= d; ++k) {
                    double hz;
                    if (k == 0) { // arrival: w -> w-1
                        hz = (c[0] == 1) ? 1.0 : val[idx - stride[0]];
                    } else if (k == d) { // departure: y(d)-1, w+1 (d=1: w+1)
                        if (d == 1)
                            hz = (c[0] == L) ? far : val[idx + stride[0]];
                        else if (c[d - 1] == 0)
                            hz = val[idx];
                        else
                            hz = (c[0] == L) ? far : val[idx - stride[d - 1] + stride[0]];
                    } else if (k == 1) { // station 1: y(2)+1
                        hz = (c[1] == L) ? far : val[idx + stride[1]];
                    } else { // station k: y(k)-1, y(k+1)+1
                        if (c[k - 1] == 0)
                            hz = val[idx];
                        else
                            hz = (c[k] == L) ? far : val[idx - stride[k - 1] + stride[k]];
                    }
                    v += prob[k] * hz;
                }
                diff = std::max(diff, std::abs(v - val[idx]));
                val[idx] = v;
            }
            return diff;
        };
        double prev_diff = 0, best = std::numeric_limits<double>::infinity();
        int stall = 0;
        long iters = 0;
        for (; iters < opt.max_iterations; ++iters) {
            double diff = pass(iters % 2 == 0);
            if (diff == 0) break;
            double theta = (prev_diff > 0 && diff < prev_diff) ? diff / prev_diff : 0.9999;
            prev_diff = diff;
            if (diff <= opt.tol * (1.0 - std::min(theta, 0.9999))) break;
            if (diff < best) {
                best = diff;
                stall = 0;
            } else if (++stall >= 50)
                break;
        }
        if (iters >= opt.max_iterations)
            throw numeric_error("solve_y_bracket: no convergence within the iteration cap");
        return val;
    };

    std::size_t target = (std::size_t)w0 * stride[0];
    for (int j = 1; j < d; ++j) target += (std::size_t)y[j] * stride[j];
    y_bracket b;
    b.lower = solve_with_far(0.0)[target];
    b.upper = solve_with_far(1.0)[target];
    return b;
}

decay_pair log_decay(const solve_grid& grid, const network_params<double>& np, const state& x) {
    if (sum_s(x) == 0) throw validation_error("log_decay: undefined at the origin");
    double p = grid.at(x);
    if (!(p > 0)) throw numeric_error("log_decay: oracle probability is not positive");
    decay_pair r;
    r.v = -std::log(p) / grid.n;
    r.w = -std::log(approx_prob_x(np, grid.n, x)) / grid.n;
    return r;
}

} // namespace tandemq
