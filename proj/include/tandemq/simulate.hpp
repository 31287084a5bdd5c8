#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

#include "tandemq/bounds.hpp"
#include "tandemq/state.hpp"

namespace tandemq {

// Counter-style generator: every sample draws from its own substream derived
// from (seed, sample index), so serial and parallel runs see identical
// per-sample randomness.
struct substream_rng {
    uint64_t s;
    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    substream_rng(uint64_t seed, uint64_t index) : s(mix(seed) ^ mix(index * 0x9e3779b97f4a7c15ULL + 1)) {}
    uint64_t next() {
        s += 0x9e3779b97f4a7c15ULL;
        uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return (double)(next() >> 11) * 0x1.0p-53; }
};

struct sim_options {
    long horizon_mult = 64; // paths are cut at horizon_mult * n steps
    double is_floor = 1e-300;
    int threads = 1;
};

struct sim_report {
    std::string method;
    double estimate = 0;
    double std_error = 0;
    double ci_lo = 0, ci_hi = 0; // estimate +- 1.96 std_error
    double sample_variance = 0;
    long samples = 0;
    long hit_count = 0;
    long overruns = 0;
    uint64_t seed = 0;
    nlohmann::json to_json() const;
};

// Plain Monte Carlo for P_x(tau_n < tau_0); overruns count as misses.
sim_report mc_estimate(const network_params<double>& np, int n, const state& x, long samples,
                       uint64_t seed, const sim_options& opt = {});

// Importance sampling driven by the closed-form approximation: the walk is
// tilted by the harmonic function f(T_n(.)) (floored at is_floor) and each
// path carries its exact likelihood ratio, so the estimator stays unbiased
// regardless of the quality of the tilt.
sim_report is_estimate(const network_params<double>& np, int n, const state& x, long samples,
                       uint64_t seed, const sim_options& opt = {});

// Tilted kernel, exposed so tests can drive the exact same transition
// probabilities and weights through dynamic programming.
struct is_kernel {
    network_params<double> np;
    int n = 0;
    double floor = 1e-300;
    // term machinery: value factors per increment for every log-linear term
    std::vector<double> coef;                 // outer_weight * c per term
    std::vector<std::vector<double>> factor;  // factor[k][t] for increment k
    // tandem structure: the arrival factor is constant per block (1/rho_d)
    // and a transfer label only touches the terms whose subset contains it
    std::vector<std::size_t> block_start;     // term range of block d (1-based)
    std::vector<double> block_arrival;        // 1/beta per block
    std::vector<uint8_t> block_of;            // block id per term
    struct sparse_entry {
        uint32_t t;
        double fac;
    };
    std::vector<std::vector<sparse_entry>> transfer; // transfer[k]: factors != 1
    is_kernel(const network_params<double>& p, int n_, double floor_ = 1e-300);

    // f(T_n(x)) from scratch
    double approx_at(const state& x) const;

    struct cand {
        int k = 0;       // increment index
        bool feasible = false;
        double q = 0;      // tilted probability
        double weight = 0; // p/q
    };
    std::vector<cand> transitions(const state& x) const;
};

// One coupled trajectory of the constrained walk and its coordinate-1
// unconstrained twin on a shared increment stream, with the boundary-visit
// times sigma_{j-1,j} and all hitting times.
struct coupled_trace {
    std::vector<long> sigma;        // sigma[j] = first visit to boundary j+1 (after sigma[j-1]); -1 if not seen
    std::optional<long> tau_n, tau_0, taub_n, taub_0;
    long steps = 0;
    long violations = 0;
    std::string first_violation;
};

coupled_trace coupled_run_once(const network_params<double>& np, int n, const state& x,
                               substream_rng& rng, long horizon);

struct coupled_report {
    long paths = 0;
    long violations = 0;
    long unresolved = 0; // traces cut by the horizon before both walks settled
    std::string first_violation;
    nlohmann::json to_json() const;
};

coupled_report coupled_run(const network_params<double>& np, int n, const state& x, uint64_t seed,
                           long paths, const sim_options& opt = {});

// Along simulated paths of the constrained walk, checks the one-step
// supermartingale inequality for the staged process built from the
// superharmonic layers (stage j applies Gamma_j h_{2,j,r} in x-coordinates,
// minus a linear-in-time compensation), by exact enumeration of the one-step
// distribution at every visited state.
struct supermartingale_report {
    double max_violation = -1e300;     // max of E[S_{k+1}|F_k] - S_k (should be <= 0)
    double max_violation_rel = -1e300; // same, relative to r^n
    double max_jump_violation = -1e300; // stage-change inequality defect (should be <= 0)
    long steps_checked = 0;
    long paths = 0;
    bool gamma_product_le_1 = true;
    nlohmann::json to_json() const;
};

supermartingale_report supermartingale_check(const network_params<double>& np, int n, double r,
                                             const state& x, uint64_t seed, long paths,
                                             const sim_options& opt = {});

} // namespace tandemq
