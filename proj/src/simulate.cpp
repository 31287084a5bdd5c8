#include "tandemq/simulate.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "tandemq/tandem.hpp"

namespace tandemq {

namespace {

// Deterministic pairwise reduction, independent of how samples were produced.
double pairwise_sum(const double* a, std::size_t n) {
    if (n <= 8) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += a[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

int sample_increment(const std::vector<double>& prob, double u) {
    double acc = 0;
    for (std::size_t k = 0; k + 1 < prob.size(); ++k) {
        acc += prob[k];
        if (u < acc) return (int)k;
    }
    return (int)prob.size() - 1;
}

void run_over_samples(long samples, int threads, const std::function<void(long)>& body) {
    if (threads <= 1) {
        for (long i = 0; i < samples; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<long> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                long i = next.fetch_add(256);
                if (i >= samples) return;
                long hi = std::min(samples, i + 256);
                for (long j = i; j < hi; ++j) body(j);
            }
        });
    for (auto& th : pool) th.join();
}

sim_report finalize_report(std::vector<double>& contrib, const char* method, uint64_t seed,
                           long hits, long overruns) {
    sim_report rep;
    rep.method = method;
    rep.samples = (long)contrib.size();
    rep.hit_count = hits;
    rep.overruns = overruns;
    rep.seed = seed;
    const std::size_t n = contrib.size();
    rep.estimate = pairwise_sum(contrib.data(), n) / (double)n;
    std::vector<double> dev2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = contrib[i] - rep.estimate;
        dev2[i] = d * d;
    }
    rep.sample_variance = n > 1 ? pairwise_sum(dev2.data(), n) / (double)(n - 1) : 0.0;
    rep.std_error = std::sqrt(rep.sample_variance / (double)n);
    rep.ci_lo = rep.estimate - 1.96 * rep.std_error;
    rep.ci_hi = rep.estimate + 1.96 * rep.std_error;
    return rep;
}

} // namespace

nlohmann::json sim_report::to_json() const {
    return {{"method", method},     {"estimate", estimate},
            {"std_error", std_error}, {"ci95", {ci_lo, ci_hi}},
            {"sample_variance", sample_variance}, {"samples", samples},
            {"hit_count", hit_count}, {"overruns", overruns},
            {"seed", seed}};
}

sim_report mc_estimate(const network_params<double>& np, int n, const state& x, long samples,
                       uint64_t seed, const sim_options& opt) {
    np.validate();
    if (samples < 1) throw validation_error("mc_estimate: need samples >= 1");
    if (sum_s(x) > n) throw validation_error("mc_estimate: need sum(x) <= n");
    const int d = np.d;
    std::vector<double> prob(d + 1);
    for (int k = 0; k <= d; ++k) prob[k] = increment_prob(np, k);
    const long horizon = opt.horizon_mult * (long)n;

    std::vector<double> contrib(samples, 0.0);
    std::atomic<long> hits{0}, overruns{0};
    run_over_samples(samples, opt.threads, [&](long i) {
        substream_rng rng(seed, (uint64_t)i);
        state cur = x;
        int s = sum_s(cur);
        for (long step = 0;; ++step) {
            if (s == n) {
                contrib[i] = 1.0;
                hits.fetch_add(1);
                return;
            }
            if (s == 0) return;
            if (step >= horizon) {
                overruns.fetch_add(1);
                return;
            }
            int k = sample_increment(prob, rng.uniform());
            state nxt = step_x(cur, k);
            if (k == 0)
                ++s;
            else if (k == d && nxt[d - 1] != cur[d - 1])
                --s;
            cur.swap(nxt);
        }
    });
    return finalize_report(contrib, "mc", seed, hits.load(), overruns.load());
}

is_kernel::is_kernel(const network_params<double>& p, int n_, double floor_)
    : np(p), n(n_), floor(floor_) {
    np.validate();
    if (!np.mu_distinct()) throw validation_error("importance sampling needs pairwise distinct rates");
    const int d = np.d;
    factor.assign(d + 1, {});
    block_start.assign(d + 2, 0);
    block_arrival.assign(d + 1, 0.0);
    for (int dd = 1; dd <= d; ++dd) {
        const double w = outer_weight(dd, np);
        const double beta = np.rho(dd);
        block_start[dd] = coef.size();
        block_arrival[dd] = 1.0 / beta;
        const uint32_t dbit = 1u << (dd - 1);
        for (uint32_t a = 0; a < (1u << (dd - 1)); ++a) {
            std::vector<int> set = mask_elements(a | dbit);
            coef.push_back(w * cstar(set, np));
            block_of.push_back((uint8_t)dd);
            std::vector<double> alpha = alphastar(set, np, d);
            // increment k maps to a customer move i->j; the per-step factor of
            // each term is [(beta,alpha), v_{i,j}]
            for (int k = 0; k <= d; ++k) {
                int i = (k == 0) ? 0 : k;
                int j = (k == 0) ? 1 : (k == d ? 0 : k + 1);
                factor[k].push_back(term_increment_factor(beta, alpha, i, j));
            }
        }
    }
    block_start[d + 1] = coef.size();
    transfer.assign(d, {});
    for (int k = 1; k < d; ++k)
        for (std::size_t t = 0; t < coef.size(); ++t)
            if (factor[k][t] != 1.0) transfer[k].push_back({(uint32_t)t, factor[k][t]});
}

double is_kernel::approx_at(const state& x) const {
    const int d = np.d;
    state y = affine_map_tn(n, x);
    std::size_t t = 0;
    double f = 0;
    for (int dd = 1; dd <= d; ++dd) {
        const double beta = np.rho(dd);
        const uint32_t dbit = 1u << (dd - 1);
        for (uint32_t a = 0; a < (1u << (dd - 1)); ++a, ++t)
            f += coef[t] * eval_point(beta, alphastar(mask_elements(a | dbit), np, d), y);
    }
    return f;
}

std::vector<is_kernel::cand> is_kernel::transitions(const state& x) const {
    const int d = np.d;
    // term values at x
    std::vector<double> v(coef.size());
    {
        state y = affine_map_tn(n, x);
        std::size_t t = 0;
        for (int dd = 1; dd <= d; ++dd) {
            const double beta = np.rho(dd);
            const uint32_t dbit = 1u << (dd - 1);
            for (uint32_t a = 0; a < (1u << (dd - 1)); ++a, ++t)
                v[t] = coef[t] * eval_point(beta, alphastar(mask_elements(a | dbit), np, d), y);
        }
    }
    double fcur = 0;
    for (double tv : v) fcur += tv;
    std::vector<cand> cs(d + 1);
    double z = 0;
    for (int k = 0; k <= d; ++k) {
        cand& c = cs[k];
        c.k = k;
        state nxt = step_x(x, k);
        c.feasible = (nxt != x);
        double f = fcur;
        if (c.feasible) {
            f = 0;
            for (std::size_t t = 0; t < v.size(); ++t) f += v[t] * factor[k][t];
        }
        c.q = increment_prob(np, k) * std::max(f, floor);
        z += c.q;
    }
    for (int k = 0; k <= d; ++k) {
        cs[k].weight = increment_prob(np, k) / (cs[k].q / z);
        cs[k].q /= z;
    }
    return cs;
}

sim_report is_estimate(const network_params<double>& np, int n, const state& x, long samples,
                       uint64_t seed, const sim_options& opt) {
    np.validate();
    if (samples < 1) throw validation_error("is_estimate: need samples >= 1");
    if (sum_s(x) > n) throw validation_error("is_estimate: need sum(x) <= n");
    const int d = np.d;
    is_kernel kern(np, n, opt.is_floor);
    const long horizon = opt.horizon_mult * (long)n;
    const std::size_t nt = kern.coef.size();
    std::vector<double> prob(d + 1);
    for (int k = 0; k <= d; ++k) prob[k] = increment_prob(np, k);

    std::vector<double> contrib(samples, 0.0);
    std::atomic<long> hits{0}, overruns{0};
    run_over_samples(samples, opt.threads, [&](long i) {
        substream_rng rng(seed, (uint64_t)i);
        state cur = x;
        int s = sum_s(cur);
        // per-term values at the current state, updated multiplicatively,
        // plus per-block partial sums (the arrival factor is block-constant)
        std::vector<double> v(nt);
        std::vector<double> bsum(d + 1, 0.0);
        {
            state y = affine_map_tn(n, cur);
            std::size_t t = 0;
            for (int dd = 1; dd <= d; ++dd) {
                const double beta = np.rho(dd);
                const uint32_t dbit = 1u << (dd - 1);
                for (uint32_t a = 0; a < (1u << (dd - 1)); ++a, ++t)
                    v[t] = kern.coef[t] * eval_point(beta, alphastar(mask_elements(a | dbit), np, d), y);
            }
        }
        auto resync = [&] {
            for (int dd = 1; dd <= d; ++dd) {
                double acc = 0;
                for (std::size_t t = kern.block_start[dd]; t < kern.block_start[dd + 1]; ++t)
                    acc += v[t];
                bsum[dd] = acc;
            }
        };
        resync();
        auto total = [&] {
            double acc = 0;
            for (int dd = 1; dd <= d; ++dd) acc += bsum[dd];
            return acc;
        };
        double fcur = total();
        double logw = 0;
        std::vector<double> fnext(d + 1);
        // Cancelled increments are self-loops of the tilted chain and every
        // one of them carries the same likelihood ratio z / f(x), so a run of
        // them is collapsed into a geometric holding count. This is exact in
        // distribution and in the accumulated weight.
        long step = 0, jumps = 0;
        for (;;) {
            if (s == n) {
                contrib[i] = std::exp(logw);
                hits.fetch_add(1);
                return;
            }
            if (s == 0) return;
            if (step >= horizon) {
                overruns.fetch_add(1);
                return;
            }
            const double fself = std::max(fcur, kern.floor);
            double z = 0, p_self = 0;
            for (int k = 0; k <= d; ++k) {
                bool ok = (k == 0) || (k < d ? cur[k - 1] > 0 : cur[d - 1] > 0);
                if (!ok) {
                    fnext[k] = -1; // marks a cancelled increment
                    p_self += prob[k];
                    continue;
                }
                double acc;
                if (k == 0) {
                    acc = 0;
                    for (int dd = 1; dd <= d; ++dd) acc += bsum[dd] * kern.block_arrival[dd];
                } else if (k < d) {
                    acc = fcur;
                    for (const auto& e : kern.transfer[k]) acc += v[e.t] * (e.fac - 1.0);
                } else {
                    const double* fk = kern.factor[d].data();
                    acc = 0;
                    for (std::size_t t = 0; t < nt; ++t) acc += v[t] * fk[t];
                }
                fnext[k] = std::max(acc, kern.floor);
                z += prob[k] * fnext[k];
            }
            z += p_self * fself;
            const double q_self = p_self * fself / z;
            long hold = 0;
            if (q_self > 0) {
                double u = rng.uniform();
                if (u <= 0) u = 0x1.0p-53;
                hold = (long)(std::log(u) / std::log(q_self));
            }
            if (step + hold >= horizon) {
                overruns.fetch_add(1);
                return;
            }
            // pick the jump among the feasible increments
            double u2 = rng.uniform() * (z - p_self * fself);
            int k = -1;
            double accq = 0;
            for (int kk = 0; kk <= d; ++kk) {
                if (fnext[kk] < 0) continue;
                accq += prob[kk] * fnext[kk];
                k = kk;
                if (u2 < accq) break;
            }
            logw += hold * (std::log(z) - std::log(fself)) + std::log(z) - std::log(fnext[k]);
            step += hold + 1;
            if (k == 0) {
                for (int dd = 1; dd <= d; ++dd) {
                    const double sc = kern.block_arrival[dd];
                    for (std::size_t t = kern.block_start[dd]; t < kern.block_start[dd + 1]; ++t)
                        v[t] *= sc;
                    bsum[dd] *= sc;
                }
                cur[0] += 1;
                ++s;
            } else if (k < d) {
                for (const auto& e : kern.transfer[k]) {
                    const std::size_t t = e.t;
                    double nv = v[t] * e.fac;
                    bsum[kern.block_of[t]] += nv - v[t];
                    v[t] = nv;
                }
                cur[k - 1] -= 1;
                cur[k] += 1;
            } else {
                const double* fk = kern.factor[d].data();
                for (int dd = 1; dd <= d; ++dd) {
                    double acc = 0;
                    for (std::size_t t = kern.block_start[dd]; t < kern.block_start[dd + 1]; ++t) {
                        v[t] *= fk[t];
                        acc += v[t];
                    }
                    bsum[dd] = acc;
                }
                cur[d - 1] -= 1;
                --s;
            }
            fcur = fnext[k];
            if ((++jumps & 255) == 0) { // periodic resync against multiplicative drift
                resync();
                fcur = total();
            }
        }
    });
    sim_report rep = finalize_report(contrib, "is", seed, hits.load(), overruns.load());
    return rep;
}

namespace {

// sigma bookkeeping shared by the coupled and supermartingale runs: sigma[0]
// is the first visit of the constrained walk to boundary 1, sigma[j] the
// first visit to boundary j+1 strictly after sigma[j-1].
struct sigma_tracker {
    std::vector<long> sigma;
    int stage = 0; // number of sigmas recorded
    explicit sigma_tracker(int d) : sigma(d, -1) {}
    void observe(const state& x, long k) {
        while (stage < (int)sigma.size()) {
            bool hit = x[stage] == 0;
            bool allowed = (stage == 0) ? true : k > sigma[stage - 1];
            if (hit && allowed) {
                sigma[stage] = k;
                ++stage;
                continue; // the same instant may trigger the next sigma only at a later k
            }
            break;
        }
    }
};

} // namespace

coupled_trace coupled_run_once(const network_params<double>& np, int n, const state& x,
                               substream_rng& rng, long horizon) {
    const int d = np.d;
    std::vector<double> prob(d + 1);
    for (int k = 0; k <= d; ++k) prob[k] = increment_prob(np, k);
    coupled_trace tr;
    tr.sigma.assign(d, -1);
    state xs = x, xb = x;
    sigma_tracker sig(d);

    auto note = [&](long k, const std::string& what) {
        ++tr.violations;
        if (tr.first_violation.empty())
            tr.first_violation = "step " + std::to_string(k) + ": " + what;
    };

    for (long k = 0;; ++k) {
        sig.observe(xs, k);
        for (int j = 0; j < d; ++j) tr.sigma[j] = sig.sigma[j];
        const int sx = sum_s(xs), sb = sum_s(xb);
        if (!tr.tau_n && sx == n) tr.tau_n = k;
        if (!tr.tau_0 && sx == 0) tr.tau_0 = k;
        if (!tr.taub_n && sb == n) tr.taub_n = k;
        if (!tr.taub_0 && sb == 0) tr.taub_0 = k;

        // smallest stage j whose sigma has not yet been passed gives the
        // sharpest componentwise relations at time k
        int jm = -1;
        for (int j = 0; j < d; ++j)
            if (sig.sigma[j] < 0 || sig.sigma[j] >= k) {
                jm = j;
                break;
            }
        if (jm >= 0) {
            for (int l = 2; l <= std::min(jm + 1, d); ++l)
                if (!(xb[l - 1] >= xs[l - 1])) note(k, "coordinate " + std::to_string(l) + " ordering");
            for (int l = jm + 2; l <= d; ++l)
                if (xb[l - 1] != xs[l - 1]) note(k, "coordinate " + std::to_string(l) + " equality");
            if (sx != sb) note(k, "total-count equality before the last boundary visit");
        } else {
            if (!(sx >= sb)) note(k, "total-count ordering after the last boundary visit");
        }

        bool x_done = tr.tau_n || tr.tau_0;
        bool b_done = tr.taub_n || tr.taub_0;
        if ((x_done && b_done) || k >= horizon) {
            tr.steps = k;
            break;
        }
        int inc = sample_increment(prob, rng.uniform());
        xs = step_x(xs, inc);
        xb = step_xbar(xb, inc);
    }

    // hitting-time relations, on whatever resolved within the horizon
    auto ge = [](std::optional<long> s, std::optional<long> t) {
        // s >= t with unresolved treated as +infinity; nullopt when undecidable
        if (t && s) return std::optional<bool>(*s >= *t);
        if (t && !s) return std::optional<bool>(true);
        if (!t && s) return std::optional<bool>(false);
        return std::optional<bool>();
    };
    std::optional<long> sig_last = sig.sigma[d - 1] >= 0 ? std::optional<long>(sig.sigma[d - 1])
                                                         : std::nullopt;
    auto a = ge(sig_last, tr.tau_n);
    auto b = ge(sig_last, tr.taub_n);
    if (a && b && *a != *b) note(tr.steps, "last-boundary comparison equivalence");
    if (a && *a && tr.tau_n) {
        if (!tr.taub_n || *tr.taub_n != *tr.tau_n) note(tr.steps, "hit-time equality on the early event");
    }
    if (sum_s(x) < n && tr.taub_n && (!tr.tau_n || *tr.tau_n > *tr.taub_n))
        note(tr.steps, "tau_n <= taubar_n ordering");
    if (sum_s(x) > 0 && tr.tau_0 && (!tr.taub_0 || *tr.taub_0 > *tr.tau_0))
        note(tr.steps, "taubar_0 <= tau_0 ordering");
    return tr;
}

nlohmann::json coupled_report::to_json() const {
    return {{"paths", paths},
            {"violations", violations},
            {"unresolved", unresolved},
            {"first_violation", first_violation}};
}

coupled_report coupled_run(const network_params<double>& np, int n, const state& x, uint64_t seed,
                           long paths, const sim_options& opt) {
    np.validate();
    if (!(sum_s(x) > 0 && sum_s(x) < n))
        throw validation_error("coupled_run: need 0 < sum(x) < n");
    coupled_report rep;
    rep.paths = paths;
    const long horizon = opt.horizon_mult * (long)n;
    for (long i = 0; i < paths; ++i) {
        substream_rng rng(seed, (uint64_t)i);
        coupled_trace tr = coupled_run_once(np, n, x, rng, horizon);
        if (!(tr.tau_n || tr.tau_0) || !(tr.taub_n || tr.taub_0)) ++rep.unresolved;
        rep.violations += tr.violations;
        if (rep.first_violation.empty() && !tr.first_violation.empty())
            rep.first_violation = "path " + std::to_string(i) + ", " + tr.first_violation;
    }
    return rep;
}

nlohmann::json supermartingale_report::to_json() const {
    return {{"max_violation", max_violation},
            {"max_violation_rel", max_violation_rel},
            {"max_jump_violation", max_jump_violation},
            {"steps_checked", steps_checked},
            {"paths", paths},
            {"gamma_product_le_1", gamma_product_le_1}};
}

supermartingale_report supermartingale_check(const network_params<double>& np, int n, double r,
                                             const state& x, uint64_t seed, long paths,
                                             const sim_options& opt) {
    np.validate();
    require_r_in_range(np, r);
    const int d = np.d;
    auto sp = gamma_constants(np, r);
    supermartingale_report rep;
    rep.paths = paths;
    rep.gamma_product_le_1 = sp.big_gamma[d] <= 1.0;
    const double rn = std::pow(r, n);
    const double comp = np.lambda * (1.0 / r - 1.0) * sp.sum_gamma() * rn;
    std::vector<double> prob(d + 1);
    for (int k = 0; k <= d; ++k) prob[k] = increment_prob(np, k);
    const long horizon = opt.horizon_mult * (long)n;

    for (long i = 0; i < paths; ++i) {
        substream_rng rng(seed, (uint64_t)i);
        state cur = x;
        sigma_tracker sig(d);
        for (long k = 0; k < horizon; ++k) {
            sig.observe(cur, k);
            int stage = 0;
            while (stage < d && sig.sigma[stage] >= 0 && sig.sigma[stage] < k) ++stage;
            bool transition = stage < d && sig.sigma[stage] == k;
            int jn = transition ? stage + 1 : stage;

            double s_now = sp.big_gamma[stage] * eval_h2kr_x(sp, stage, n, cur);
            if (transition) {
                double s_next_here = sp.big_gamma[jn] * eval_h2kr_x(sp, jn, n, cur);
                rep.max_jump_violation = std::max(rep.max_jump_violation, s_next_here - s_now);
            }
            double e = 0;
            for (int kk = 0; kk <= d; ++kk) {
                state nxt = step_x(cur, kk);
                e += prob[kk] * sp.big_gamma[jn] * eval_h2kr_x(sp, jn, n, nxt);
            }
            double viol = e - s_now - comp;
            rep.max_violation = std::max(rep.max_violation, viol);
            rep.max_violation_rel = std::max(rep.max_violation_rel, viol / rn);
            ++rep.steps_checked;

            int s = sum_s(cur);
            if (s == 0 || s == n) break;
            cur = step_x(cur, sample_increment(prob, rng.uniform()));
        }
    }
    return rep;
}

} // namespace tandemq
