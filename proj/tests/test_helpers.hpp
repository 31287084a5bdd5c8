#pragma once

#include "tandemq/simulate.hpp"
#include "tandemq/tandem.hpp"

namespace th {

using namespace tandemq;

// Example rates used throughout: the 4-station set lambda=1/18,
// mu=(3,7,2,5)/18 has a bottleneck in the middle and distinct rates.
inline network_params<double> rates4() {
    network_params<double> p;
    p.d = 4;
    p.lambda = 1.0 / 18;
    p.mu = {3.0 / 18, 7.0 / 18, 2.0 / 18, 5.0 / 18};
    return p;
}

inline network_params<rat> rates4_exact() {
    network_params<rat> p;
    p.d = 4;
    p.lambda = rat(1, 18);
    p.mu = {rat(3, 18), rat(7, 18), rat(2, 18), rat(5, 18)};
    return p;
}

// 8 distinct rational rates for the wide worked examples.
inline network_params<rat> rates8_exact() {
    network_params<rat> p;
    p.d = 8;
    p.lambda = rat(1, 48);
    int m[8] = {3, 7, 2, 5, 11, 4, 9, 6};
    for (int v : m) p.mu.push_back(rat(v, 48));
    return p;
}

inline network_params<double> to_dbl(const network_params<rat>& p) { return to_double_params(p); }

// Random stable parameter set with a guaranteed relative gap between the
// service rates (the closed form is cancellation-prone near ties).
inline network_params<double> random_params(int d, substream_rng& rng, double min_gap = 0.05) {
    for (;;) {
        std::vector<double> mu(d);
        for (double& m : mu) m = 0.5 + rng.uniform();
        bool ok = true;
        for (int i = 0; i < d && ok; ++i)
            for (int j = i + 1; j < d && ok; ++j)
                if (std::abs(mu[i] - mu[j]) < min_gap) ok = false;
        if (!ok) continue;
        double mn = *std::min_element(mu.begin(), mu.end());
        double lambda = mn * (0.15 + 0.7 * rng.uniform());
        network_params<double> p;
        p.d = d;
        p.lambda = lambda;
        p.mu = mu;
        p.normalize();
        return p;
    }
}

// Random rational stable set: integer rates over a common denominator.
inline network_params<rat> random_params_exact(int d, substream_rng& rng) {
    for (;;) {
        std::vector<long> m(d);
        bool ok = true;
        for (int i = 0; i < d; ++i) {
            m[i] = 2 + (long)(rng.next() % 97);
            for (int j = 0; j < i; ++j)
                if (m[j] == m[i]) ok = false;
        }
        if (!ok) continue;
        long mn = *std::min_element(m.begin(), m.end());
        if (mn < 2) continue;
        long lam = 1 + (long)(rng.next() % (mn - 1));
        if (lam >= mn) continue;
        long total = lam;
        for (long v : m) total += v;
        network_params<rat> p;
        p.d = d;
        p.lambda = rat(lam, total);
        for (long v : m) p.mu.push_back(rat(v, total));
        return p;
    }
}

// Random state of B (y(1) >= sum of others).
inline state random_state_b(int d, substream_rng& rng, int extent = 5) {
    state y(d, 0);
    int s = 0;
    for (int j = 1; j < d; ++j) {
        y[j] = (int)(rng.next() % (extent + 1));
        s += y[j];
    }
    y[0] = s + (int)(rng.next() % (extent + 1));
    return y;
}

// Probe states covering every boundary pattern: coordinates 2..d range over
// {0..3}, coordinate 1 over {-3..6}.
inline std::vector<state> probe_states(int d, int lo1 = -3, int hi1 = 6, int hi_rest = 3) {
    std::vector<state> out;
    state y(d, 0);
    std::function<void(int)> rec = [&](int j) {
        if (j == d) {
            for (int v = lo1; v <= hi1; ++v) {
                y[0] = v;
                out.push_back(y);
            }
            return;
        }
        for (int v = 0; v <= hi_rest; ++v) {
            y[j] = v;
            rec(j + 1);
        }
    };
    if (d == 1) {
        for (int v = lo1; v <= hi1; ++v) out.push_back({v});
        return out;
    }
    rec(1);
    return out;
}

} // namespace th
