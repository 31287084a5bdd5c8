// Command-line front end: overflow probabilities of stable tandem networks
// three ways (closed form, exact linear solve, simulation), plus verification
// and bound sweeps. All outputs are JSON or CSV; exit codes are 0 (ok),
// 2 (validation), 3 (numerical), 4 (budget).

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "tandemq/oracle.hpp"
#include "tandemq/simulate.hpp"
#include "tandemq/tandem.hpp"

using namespace tandemq;
using nlohmann::json;

namespace {

state parse_state(const std::string& csv) {
    state x;
    std::string cur;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!cur.empty()) x.push_back(std::stoi(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (x.empty()) throw validation_error("empty state vector");
    return x;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open " + path + " for writing");
    return out;
}

struct common_opts {
    std::string params_path;
    bool rational = false;
    bool normalize = false;
    int threads = 1;
};

void add_common(CLI::App* cmd, common_opts& o) {
    cmd->add_option("--params", o.params_path, "params JSON file {\"lambda\":..,\"mu\":[..]}")
        ->required();
    cmd->add_flag("--rational", o.rational, "exact rational arithmetic end to end");
    cmd->add_flag("--normalize", o.normalize, "rescale rates to sum to 1 before validating");
    cmd->add_option("--threads", o.threads, "worker threads for sampling commands");
}

template <class T>
network_params<T> load_params(const common_opts& o) {
    return params_from_json<T>(load_json(o.params_path), o.normalize);
}

void write_terms_csv(std::ostream& os, const std::vector<term_row>& rows) {
    os << "d,subset,c,beta,alpha,value\n";
    for (const auto& r : rows) {
        os << r.d << ",\"";
        for (size_t i = 0; i < r.subset.size(); ++i) os << (i ? " " : "") << r.subset[i];
        os << "\"," << r.c << "," << r.beta << ",\"";
        for (size_t i = 0; i < r.alpha.size(); ++i) os << (i ? " " : "") << r.alpha[i];
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        os << "\"," << buf << "\n";
    }
}

int cmd_approx(const common_opts& o, const std::string& xs, const std::string& ys, int n,
               const std::string& terms_path) {
    state y;
    double wn = std::numeric_limits<double>::quiet_NaN();
    json out;
    if (!xs.empty()) {
        if (n < 0) throw validation_error("--x needs --n");
        state x = parse_state(xs);
        y = affine_map_tn(n, x);
        out["n"] = n;
        out["x"] = x;
    } else if (!ys.empty()) {
        y = parse_state(ys);
    } else {
        throw validation_error("pass --y or (--x and --n)");
    }
    out["y"] = y;
    std::vector<term_row> rows;
    double value;
    std::string method = "closed_form";
    if (o.rational) {
        auto p = load_params<rat>(o);
        if (p.d == 3 && p.mu_all_equal()) {
            value = to_double(prob_tau_finite_equal_rates_d3(p.lambda, p.mu[0], y));
            method = "equal_rates_d3";
        } else {
            rat v = prob_tau_finite(p, y, terms_path.empty() ? nullptr : &rows);
            out["probability_exact"] = rat_to_string(v);
            value = to_double(v);
        }
    } else {
        auto p = load_params<double>(o);
        if (p.d == 3 && p.mu_all_equal()) {
            value = prob_tau_finite_equal_rates_d3(p.lambda, p.mu[0], y);
            method = "equal_rates_d3";
        } else {
            value = prob_tau_finite(p, y, terms_path.empty() ? nullptr : &rows);
        }
    }
    out["method"] = method;
    out["probability"] = value;
    out["params"] = o.rational ? params_to_json(load_params<rat>(o)) : params_to_json(load_params<double>(o));
    if (n >= 0 && value > 0) {
        wn = -std::log(value) / n;
        out["W_n"] = wn;
    }
    if (!terms_path.empty()) {
        auto os = open_out(terms_path);
        write_terms_csv(os, rows);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_exact(const common_opts& o, int n, const std::string& xs, double tol, std::size_t budget,
              const std::string& csv_path, const std::string& bin_path) {
    auto p = load_params<double>(o);
    solve_options so;
    so.tol = tol;
    so.max_states = budget;
    auto grid = solve_exact(p, n, so);
    json out{{"n", n},
             {"states", grid.size()},
             {"iterations", grid.iterations},
             {"residual", grid.residual},
             {"params", params_to_json(p)}};
    if (!xs.empty()) {
        state x = parse_state(xs);
        out["x"] = x;
        out["probability"] = grid.at(x);
        if (grid.at(x) > 0) out["V_n"] = -std::log(grid.at(x)) / n;
    }
    if (!csv_path.empty()) {
        auto os = open_out(csv_path);
        grid.write_csv(os);
    }
    if (!bin_path.empty()) {
        std::ofstream os(bin_path, std::ios::binary);
        if (!os) throw validation_error("cannot open " + bin_path + " for writing");
        grid.write_binary(os);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const common_opts& o, int n, const std::string& xs, const std::string& method,
                 long samples, uint64_t seed, long horizon_mult) {
    auto p = load_params<double>(o);
    state x = parse_state(xs);
    sim_options so;
    so.horizon_mult = horizon_mult;
    so.threads = o.threads;
    sim_report rep = method == "is" ? is_estimate(p, n, x, samples, seed, so)
                                    : mc_estimate(p, n, x, samples, seed, so);
    json out = rep.to_json();
    out["n"] = n;
    out["x"] = x;
    out["horizon_mult"] = horizon_mult;
    out["params"] = params_to_json(p);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_bounds(const common_opts& o, int n, const std::vector<std::string>& states, bool all,
               bool with_oracle, double r_opt, double eps, const std::string& out_path) {
    auto p = load_params<double>(o);
    std::vector<state> xs;
    if (all) {
        if (n > 40) throw budget_error("--all is intended for small n");
        state x(p.d, 0);
        std::function<void(int, int)> rec = [&](int j, int rem) {
            if (j == p.d) {
                xs.push_back(x);
                return;
            }
            for (int v = 0; v <= rem; ++v) {
                x[j] = v;
                rec(j + 1, rem - v);
            }
            x[j] = 0;
        };
        rec(0, n);
    } else {
        for (const auto& s : states) xs.push_back(parse_state(s));
    }
    if (xs.empty()) throw validation_error("pass --x (repeatable) or --all");

    std::unique_ptr<solve_grid> grid;
    if (with_oracle) grid = std::make_unique<solve_grid>(solve_exact(p, n));

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        os = &file;
    }
    double rho = p.rho_max();
    double r = r_opt > 0 ? r_opt : (rho + 1) / 2;
    auto sp = gamma_constants(p, r);
    for (int j = 1; j <= p.d; ++j) *os << "x" << j << ",";
    *os << "g_n,lower_bound,escape_bound,rel_err_bound,in_rbar";
    if (with_oracle) *os << ",oracle";
    *os << "\n";
    for (const auto& x : xs) {
        if (sum_s(x) > n) continue;
        for (int j = 0; j < p.d; ++j) *os << x[j] << ",";
        *os << gn(p, n, x) << "," << lower_bound_gn(p, n, x) << ","
            << escape_probability_bound(p, sp, affine_map_tn(n, x)) << ","
            << relative_error_bound(p, n, x, eps) << "," << (in_rbar(p, n, x) ? 1 : 0);
        if (with_oracle) *os << "," << grid->at(x);
        *os << "\n";
    }
    return 0;
}

int cmd_sweep(const common_opts& o, int n, const std::string& slice, double eps, double tol,
              std::size_t budget, const std::string& out_path) {
    auto p = load_params<double>(o);
    // slice pattern like "i,j,0,0": letters mark the two swept coordinates
    std::vector<std::string> cells;
    {
        std::string cur;
        for (char ch : slice + ",") {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else
                cur += ch;
        }
    }
    if ((int)cells.size() != p.d) throw validation_error("slice pattern dimension mismatch");
    int pos_i = -1, pos_j = -1;
    state base(p.d, 0);
    for (int k = 0; k < p.d; ++k) {
        if (cells[k] == "i")
            pos_i = k;
        else if (cells[k] == "j")
            pos_j = k;
        else
            base[k] = std::stoi(cells[k]);
    }
    if (pos_i < 0 || pos_j < 0) throw validation_error("slice pattern needs an 'i' and a 'j'");

    solve_options so;
    so.tol = tol;
    so.max_states = budget;
    auto grid = solve_exact(p, n, so);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        os = &file;
    }
    for (int k = 1; k <= p.d; ++k) *os << "x" << k << ",";
    *os << "V_n,W_n,rel_err,rel_err_bound,in_rbar\n";
    int fixed = sum_s(base);
    for (int i = 0; i + fixed <= n; ++i) {
        for (int j = 0; i + j + fixed <= n; ++j) {
            state x = base;
            x[pos_i] = i;
            x[pos_j] = j;
            if (sum_s(x) == 0) continue; // V undefined at the origin
            double pv = grid.at(x);
            double fa = approx_prob_x(p, n, x);
            double v = 0, w = 0, rel = 0;
            if (sum_s(x) == n) {
                rel = 0; // both probabilities are exactly one
            } else {
                v = -std::log(pv) / n;
                w = -std::log(fa) / n;
                rel = std::abs(v - w) / v;
            }
            for (int k = 0; k < p.d; ++k) *os << x[k] << ",";
            char buf[96];
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%d", v, w, rel,
                          relative_error_bound(p, n, x, eps), in_rbar(p, n, x) ? 1 : 0);
            *os << buf << "\n";
        }
    }
    return 0;
}

int cmd_couple(const common_opts& o, int n, const std::string& xs, long paths, uint64_t seed,
               long horizon_mult) {
    auto p = load_params<double>(o);
    sim_options so;
    so.horizon_mult = horizon_mult;
    auto rep = coupled_run(p, n, parse_state(xs), seed, paths, so);
    std::cout << rep.to_json().dump(2) << "\n";
    return rep.violations == 0 ? 0 : 3;
}

int cmd_verify_system(const common_opts& o, int d, int D, double tol) {
    json out = json::array();
    bool ok = true;
    if (o.rational) {
        auto p = load_params<rat>(o);
        if (D <= 0) D = p.d;
        if (p.d != D) throw validation_error("params dimension must equal --D");
        auto rt = jackson_routing<rat>::tandem(p);
        for (int dd = (d > 0 ? d : 1); dd <= (d > 0 ? d : D); ++dd) {
            auto rep = verify_system(rt, build_g(dd, D), tandem_solution(dd, D, p), 0.0);
            ok = ok && rep.pass();
            json e = rep.to_json();
            e["d"] = dd;
            e["D"] = D;
            out.push_back(e);
        }
    } else {
        auto p = load_params<double>(o);
        if (D <= 0) D = p.d;
        if (p.d != D) throw validation_error("params dimension must equal --D");
        auto rt = jackson_routing<double>::tandem(p);
        for (int dd = (d > 0 ? d : 1); dd <= (d > 0 ? d : D); ++dd) {
            auto rep = verify_system(rt, build_g(dd, D), tandem_solution(dd, D, p), tol);
            ok = ok && rep.pass();
            json e = rep.to_json();
            e["d"] = dd;
            e["D"] = D;
            out.push_back(e);
        }
    }
    std::cout << out.dump(2) << "\n";
    return ok ? 0 : 3;
}

int cmd_verify_formula(const common_opts& o, int grid_extent, double tol) {
    auto p = load_params<double>(o);
    auto rt = jackson_routing<double>::tandem(p);
    double worst_boundary = 0, worst_residual = 0;
    // boundary values on a grid of the boundary of B
    std::function<void(state&, int, int)> rec = [&](state& y, int j, int rem) {
        if (j == p.d) {
            int s = 0;
            for (int k = 1; k < p.d; ++k) s += y[k];
            y[0] = s;
            worst_boundary = std::max(worst_boundary, std::abs(prob_tau_finite(p, y) - 1.0));
            return;
        }
        for (int v = 0; v <= rem; ++v) {
            y[j] = v;
            rec(y, j + 1, rem - v);
        }
        y[j] = 0;
    };
    state y(p.d, 0);
    rec(y, 1, grid_extent);
    auto h = [&](const state& z) { return escape_formula(p, z); };
    for (const state& z : [&] {
             std::vector<state> out;
             state yy(p.d, 0);
             std::function<void(int)> r2 = [&](int j) {
                 if (j == p.d) {
                     for (int v = -2; v <= 4; ++v) {
                         yy[0] = v;
                         out.push_back(yy);
                     }
                     return;
                 }
                 for (int v = 0; v <= 2; ++v) {
                     yy[j] = v;
                     r2(j + 1);
                 }
             };
             if (p.d == 1)
                 for (int v = -2; v <= 4; ++v) out.push_back({v});
             else
                 r2(1);
             return out;
         }()) {
        double hy = h(z);
        worst_residual =
            std::max(worst_residual, std::abs(harmonic_residual(rt, h, z)) / std::max(1.0, std::abs(hy)));
    }
    json out{{"worst_boundary_defect", worst_boundary}, {"worst_harmonic_residual", worst_residual},
             {"tol", tol}};
    std::cout << out.dump(2) << "\n";
    return (worst_boundary <= tol && worst_residual <= tol) ? 0 : 3;
}

int cmd_verify_bounds(const common_opts& o, long samples, uint64_t seed, double r_opt) {
    auto p = load_params<double>(o);
    auto rt = jackson_routing<double>::tandem(p);
    double rho = p.rho_max();
    double r = r_opt > 0 ? r_opt : (rho + 1) / 2;
    auto sp = gamma_constants(p, r);
    substream_rng rng(seed, 0);
    double worst = -1e300;
    for (long rep = 0; rep < samples; ++rep) {
        state y(p.d);
        int s = 0;
        for (int j = 1; j < p.d; ++j) {
            y[j] = (int)(rng.next() % 6);
            s += y[j];
        }
        y[0] = s + (int)(rng.next() % 6);
        for (int k = 1; k <= p.d; ++k) {
            auto h = [&](const state& z) { return eval_h2kr(sp, k, z); };
            double res = harmonic_residual(rt, h, y);
            worst = std::max(worst, res / std::max(1e-300, std::abs(h(y))));
        }
    }
    json out{{"r", r}, {"worst_relative_drift", worst}};
    std::cout << out.dump(2) << "\n";
    return worst <= 1e-12 ? 0 : 3;
}

int cmd_verify_coupling(const common_opts& o, int n, const std::string& xs, long paths,
                        uint64_t seed) {
    auto p = load_params<double>(o);
    auto rep = coupled_run(p, n, parse_state(xs), seed, paths);
    std::cout << rep.to_json().dump(2) << "\n";
    return rep.violations == 0 ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"overflow probabilities of stable tandem networks: closed form, exact solve, "
                 "simulation, verification"};
    app.require_subcommand(1);

    common_opts o;
    std::string xs, ys, method = "mc", slice, terms_path, csv_path, bin_path, out_path;
    std::vector<std::string> xlist;
    int n = -1, d = -1, D = -1, grid_extent = 20, L = 40;
    long samples = 10000, paths = 1000, horizon_mult = 64;
    uint64_t seed = 1;
    double tol = 1e-10, solve_tol = 1e-12, eps = 0.1, r_opt = 0;
    std::size_t budget = state_budget_default();
    bool all = false, with_oracle = false;
    (void)L;

    auto* a = app.add_subcommand("approx", "closed-form probability at y (or at T_n(x))");
    add_common(a, o);
    a->add_option("--x", xs, "x state, comma separated");
    a->add_option("--y", ys, "y state, comma separated");
    a->add_option("--n", n, "level for --x");
    a->add_option("--terms", terms_path, "write the per-term breakdown CSV here");

    auto* e = app.add_subcommand("exact", "exact linear-solve oracle on the simplex");
    add_common(e, o);
    e->add_option("--n", n, "level")->required();
    e->add_option("--x", xs, "report the value at this state");
    e->add_option("--tol", solve_tol, "solver tolerance");
    e->add_option("--budget", budget, "max states");
    e->add_option("--csv", csv_path, "write the full grid as CSV");
    e->add_option("--bin", bin_path, "write the full grid as the compact binary table");

    auto* s = app.add_subcommand("simulate", "Monte Carlo / importance sampling");
    add_common(s, o);
    s->add_option("--n", n, "level")->required();
    s->add_option("--x", xs, "start state")->required();
    s->add_option("--method", method, "mc or is")->check(CLI::IsMember({"mc", "is"}));
    s->add_option("--samples", samples, "sample count");
    s->add_option("--seed", seed, "seed");
    s->add_option("--horizon-mult", horizon_mult, "horizon = mult * n steps");

    auto* b = app.add_subcommand("bounds", "lower bound, regions and error-bound CSV");
    add_common(b, o);
    b->add_option("--n", n, "level")->required();
    b->add_option("--x", xlist, "state (repeatable)");
    b->add_flag("--all", all, "every state of the simplex (small n)");
    b->add_flag("--with-oracle", with_oracle, "add the exact-solve column");
    b->add_option("--r", r_opt, "layer parameter in (rho,1); default midpoint");
    b->add_option("--eps", eps, "epsilon in the error-bound exponent");
    b->add_option("--out", out_path, "output file (default stdout)");

    auto* sw = app.add_subcommand("sweep", "relative-error sweep of a two-index slice");
    add_common(sw, o);
    sw->add_option("--n", n, "level")->required();
    sw->add_option("--slice", slice, "pattern like i,j,0,0")->required();
    sw->add_option("--eps", eps, "epsilon in the error-bound column");
    sw->add_option("--tol", solve_tol, "oracle tolerance");
    sw->add_option("--budget", budget, "max oracle states");
    sw->add_option("--out", out_path, "output file (default stdout)");

    auto* c = app.add_subcommand("couple", "coupled twin-walk trace checks");
    add_common(c, o);
    c->add_option("--n", n, "level")->required();
    c->add_option("--x", xs, "start state")->required();
    c->add_option("--paths", paths, "number of traces");
    c->add_option("--seed", seed, "seed");
    c->add_option("--horizon-mult", horizon_mult, "horizon = mult * n steps");

    auto* v = app.add_subcommand("verify", "verification suites");
    v->require_subcommand(1);
    auto* vs = v->add_subcommand("system", "five-condition check of the solution family");
    add_common(vs, o);
    vs->add_option("--d", d, "single block to check (default: all)");
    vs->add_option("--D", D, "ambient dimension (default: params dimension)");
    vs->add_option("--tol", tol, "tolerance in float mode");
    auto* vf = v->add_subcommand("formula", "boundary values and harmonicity of the closed form");
    add_common(vf, o);
    vf->add_option("--grid", grid_extent, "boundary grid extent");
    vf->add_option("--tol", tol, "tolerance");
    auto* vb = v->add_subcommand("bounds", "superharmonicity spot checks");
    add_common(vb, o);
    vb->add_option("--samples", samples, "random states");
    vb->add_option("--seed", seed, "seed");
    vb->add_option("--r", r_opt, "layer parameter (default midpoint)");
    auto* vc = v->add_subcommand("coupling", "coupled-walk lemma checks");
    add_common(vc, o);
    int vc_n = 12;
    std::string vc_x = "1,0,0";
    vc->add_option("--n", vc_n, "level (default 12)");
    vc->add_option("--x", vc_x, "start state (default 1,0,0)");
    vc->add_option("--paths", paths, "number of traces");
    vc->add_option("--seed", seed, "seed");

    try {
        app.parse(argc, argv);
        if (a->parsed()) return cmd_approx(o, xs, ys, n, terms_path);
        if (e->parsed()) return cmd_exact(o, n, xs, solve_tol, budget, csv_path, bin_path);
        if (s->parsed()) return cmd_simulate(o, n, xs, method, samples, seed, horizon_mult);
        if (b->parsed()) return cmd_bounds(o, n, xlist, all, with_oracle, r_opt, eps, out_path);
        if (sw->parsed()) return cmd_sweep(o, n, slice, eps, solve_tol, budget, out_path);
        if (c->parsed()) return cmd_couple(o, n, xs, paths, seed, horizon_mult);
        if (v->parsed()) {
            if (vs->parsed()) return cmd_verify_system(o, d, D, tol);
            if (vf->parsed()) return cmd_verify_formula(o, grid_extent, tol);
            if (vb->parsed()) return cmd_verify_bounds(o, samples, seed, r_opt);
            if (vc->parsed()) return cmd_verify_coupling(o, vc_n, vc_x, paths, seed);
        }
        return 0;
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? 0 : 2;
    } catch (const validation_error& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return 2;
    } catch (const budget_error& err) {
        std::cerr << "budget error: " << err.what() << "\n";
        return 4;
    } catch (const numeric_error& err) {
        std::cerr << "numeric error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    }
}
