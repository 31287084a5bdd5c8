#pragma once

#include <cstdint>
#include <iosfwd>

#include "tandemq/state.hpp"

namespace tandemq {

struct solve_options {
    double tol = 1e-12;        // sup-norm relative successive-difference target
    long max_iterations = 2000000;
    double omega = 1.0;        // over-relaxation factor (1 = plain Gauss-Seidel)
    std::size_t max_states = 20000000;
};

// Environment override for the state budget (TANDEMQ_MAX_STATES).
std::size_t state_budget_default();

// Exact overflow probabilities P_x(tau_n < tau_0) on the simplex
// {x in Z_+^d : sum x <= n}, stored in combinatorial rank order.
struct solve_grid {
    int d = 0;
    int n = 0;
    std::vector<double> values;
    double residual = 0; // sup-norm defect of the harmonic equation after convergence
    long iterations = 0;

    std::size_t size() const { return values.size(); }
    std::size_t rank(const state& x) const;
    double at(const state& x) const { return values[rank(x)]; }

    void write_csv(std::ostream& os) const;
    // Layout: uint32 d, uint32 n, then C(n+d,d) little-endian float64 values
    // in rank order.
    void write_binary(std::ostream& os) const;

  private:
    friend solve_grid solve_exact(const network_params<double>&, int, const solve_options&);
    std::vector<std::vector<uint64_t>> binom_; // binom_[k][m] = C(m+k, k)
    void build_tables();
    friend struct grid_walker;
};

// Gauss-Seidel fixed point of h(x) = E_x[h(X_1)] with h = 1 on the outer
// boundary and h(0) = 0; sweeps alternate direction until the relative
// successive difference stabilizes below tol.
solve_grid solve_exact(const network_params<double>& np, int n, const solve_options& opt = {});

// Birth-death closed form for d = 1: P_x(tau_n < tau_0) = (R^x-1)/(R^n-1),
// R = mu/lambda, evaluated in log space.
double gamblers_ruin(const network_params<double>& np, int n, int x);

// Two-sided truncation bracket for the limit probability P_y(tau < inf):
// solve on {0 <= y(1)-sum <= L, y(j) <= L} with far-boundary data 0 (lower)
// and 1 (upper).
struct y_bracket {
    double lower = 0;
    double upper = 1;
};
y_bracket solve_y_bracket(const network_params<double>& np, const state& y, int L,
                          const solve_options& opt = {});

// Per-n exponents of the oracle and of the closed-form approximation:
// V = -log(P_x(tau_n<tau_0))/n and W = -log f(T_n(x))/n.
struct decay_pair {
    double v = 0;
    double w = 0;
};
decay_pair log_decay(const solve_grid& grid, const network_params<double>& np, const state& x);

} // namespace tandemq
