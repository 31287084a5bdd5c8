#include <doctest.h>

#include "test_helpers.hpp"

using namespace tandemq;

namespace {

jackson_routing<rat> routing_from(const std::vector<std::vector<rat>>& rows) {
    jackson_routing<rat> r;
    r.d = (int)rows.size() - 1;
    r.p = rows;
    return r;
}

// The example pair used throughout the extension tests: a 2-station loop
// embedded in a 4-station network with no feedback into the old stations.
// (The folded matrix must be an exact multiple of p1.)
jackson_routing<rat> example_p1() {
    return routing_from({{rat(0), rat(1, 9), rat(0)},
                         {rat(0), rat(0), rat(4, 9)},
                         {rat(4, 9), rat(0), rat(0)}});
}

jackson_routing<rat> example_p2() {
    auto f = [](const char* s) { return parse_rat(s); };
    return routing_from({{f("0"), f("0.05"), f("0"), f("0"), f("0.02")},
                         {f("0"), f("0"), f("0.2"), f("0"), f("0")},
                         {f("0.1"), f("0"), f("0"), f("0.1"), f("0")},
                         {f("0"), f("0"), f("0"), f("0"), f("0.25")},
                         {f("0.1"), f("0"), f("0"), f("0.18"), f("0")}});
}

} // namespace

TEST_CASE("regularity check") {
    auto g = build_g(4, 4);
    CHECK(g.num_vertices() == 8);
    CHECK(g.is_regular());
    // drop a loop: no longer regular
    auto broken = g;
    broken.loops[0].erase(broken.loops[0].begin());
    std::string why;
    CHECK(!broken.is_regular(&why));
    CHECK(!why.empty());
    // verifier refuses non-regular graphs before any numeric work
    auto p = th::rates4();
    auto rt = jackson_routing<double>::tandem(p);
    auto sol = tandem_solution(4, 4, p);
    CHECK_THROWS_AS(verify_system(rt, broken, sol), validation_error);
}

TEST_CASE("graph JSON round trip") {
    auto g = build_g(3, 5);
    auto j = g.to_json();
    auto g2 = labeled_graph::from_json(j);
    CHECK(g2.vertices == g.vertices);
    CHECK(g2.edges == g.edges);
    CHECK(g2.loops == g.loops);
    CHECK(g2.label_lo == g.label_lo);
    CHECK(g2.label_hi == g.label_hi);
    CHECK(g2.is_regular());
}

TEST_CASE("tandem solutions pass the five-condition verifier") {
    auto p = th::rates4();
    auto rt = jackson_routing<double>::tandem(p);
    for (int d = 1; d <= 4; ++d) {
        auto g = build_g(d, 4);
        auto sol = tandem_solution(d, 4, p);
        auto rep = verify_system(rt, g, sol, 1e-12);
        CHECK(rep.pass());
        CHECK(rep.worst_residual() <= 1e-12);
    }
}

TEST_CASE("verifier in exact mode") {
    auto p = th::rates4_exact();
    auto rt = jackson_routing<rat>::tandem(p);
    for (int d = 1; d <= 4; ++d) {
        auto rep = verify_system(rt, build_g(d, 4), tandem_solution(d, 4, p), 0.0);
        CHECK(rep.pass());
    }
}

TEST_CASE("perturbing one coefficient breaks the ratio condition on its edges") {
    auto p = th::rates4();
    auto rt = jackson_routing<double>::tandem(p);
    auto g = build_g(3, 4);
    auto sol = tandem_solution(3, 4, p);
    sol.c[1] *= 1.01;
    auto rep = verify_system(rt, g, sol, 1e-12);
    CHECK(!rep.pass());
    CHECK(!rep.conditions[3].pass);      // coefficient ratios fail
    CHECK(rep.conditions[0].pass);       // surface membership untouched
    CHECK(rep.conditions[2].pass);       // conjugacy untouched
}

TEST_CASE("single-vertex all-loop system") {
    // d = 1 inside a larger label set: the lone vertex {1} carries every
    // label as a loop and alpha identically rho_1 satisfies all of them.
    auto p = th::rates4();
    auto rt = jackson_routing<double>::tandem(p);
    auto g = build_g(1, 4);
    CHECK(g.num_vertices() == 1);
    CHECK(g.edges.empty());
    CHECK(g.loops[0] == std::set<int>{2, 3, 4});
    auto sol = tandem_solution(1, 4, p);
    for (double a : sol.alpha[0]) CHECK(a == doctest::Approx(p.rho(1)).epsilon(1e-15));
    auto rep = verify_system(rt, g, sol, 1e-12);
    CHECK(rep.pass());
}

TEST_CASE("h_G evaluation and harmonicity") {
    auto p = th::rates4();
    auto rt = jackson_routing<double>::tandem(p);
    auto g = build_g(3, 4);
    auto sol = tandem_solution(3, 4, p);

    // at the origin every term contributes its coefficient
    double csum = 0;
    for (double c : sol.c) csum += c;
    CHECK(eval_hg(sol, g, {0, 0, 0, 0}) == doctest::Approx(csum).epsilon(1e-13));

    auto h = [&](const state& y) { return eval_hg(sol, g, y); };
    for (const state& y : th::probe_states(4)) {
        double r = harmonic_residual(rt, h, y);
        CHECK(std::abs(r) <= 1e-12 * std::max(1.0, std::abs(h(y))));
    }
}

TEST_CASE("harmonic residual basics") {
    auto p = th::rates4();
    auto rt = jackson_routing<double>::tandem(p);
    auto one = [](const state&) { return 1.0; };
    for (const state& y : th::probe_states(4, -2, 3, 2))
        CHECK(harmonic_residual(rt, one, y) == doctest::Approx(0.0).epsilon(1e-15));

    // single surface term: harmonic in the interior, residual h (p-1) in general
    std::vector<double> ones{1, 1, 1};
    double beta = p.rho(4);
    auto term = [&](const state& y) { return eval_point(beta, ones, y); };
    state interior{7, 1, 1, 1};
    CHECK(harmonic_residual(rt, term, interior) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("D operator decomposes over single boundaries") {
    auto p = th::rates4();
    auto rt = jackson_routing<double>::tandem(p);
    auto sol = tandem_solution(2, 4, p);
    auto g = build_g(2, 4);
    auto h = [&](const state& y) { return eval_hg(sol, g, y); };
    state y{5, 0, 2, 0}; // on boundaries 2 and 4
    double da = d_operator(rt, {2, 4}, h, y);
    double split = d_operator(rt, {2}, h, y) + d_operator(rt, {4}, h, y) -
                   d_operator(rt, std::vector<int>{}, h, y);
    CHECK(da == doctest::Approx(split).epsilon(1e-12));
    // matches the true one-step residual at a state whose zero set is exactly {2,4}
    CHECK(da == doctest::Approx(harmonic_residual(rt, h, y)).epsilon(1e-12));
}

TEST_CASE("boundary-determinedness gate") {
    auto p = th::rates4();
    auto sol = tandem_solution(4, 4, p);
    CHECK(db_determined_gate(sol)); // entries in {1, rho_i}, beta < 1
    auto bad = sol;
    bad.beta = 1.1;
    CHECK(!db_determined_gate(bad));
    auto edge = sol;
    edge.alpha[0][0] = 1.0; // exactly one is still allowed
    CHECK(db_determined_gate(edge));
}

TEST_CASE("simple extension of routing matrices") {
    auto p1 = example_p1();
    auto p2 = example_p2();
    auto res = simple_extension_check(p1, p2);
    CHECK(res.ok);
    CHECK(res.scale == rat(9, 20)); // 0.05 + 0.2 + 0.2

    // feedback from a new station into an old one breaks the extension
    auto bad = p2;
    bad.p[3][1] = rat(1, 100);
    bad.p[3][4] = rat(1, 4) - rat(1, 100);
    CHECK(!simple_extension_check(p1, bad).ok);

    // padding by zero rows/columns is an extension with scale 1
    jackson_routing<rat> padded;
    padded.d = 3;
    padded.p.assign(4, std::vector<rat>(4, rat(0)));
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; j <= 2; ++j) padded.p[i][j] = p1.p[i][j];
    auto res2 = simple_extension_check(p1, padded);
    CHECK(res2.ok);
    CHECK(res2.scale == rat(1));
}

TEST_CASE("tandem networks extend tandem networks") {
    auto p8 = th::rates8_exact();
    auto rt8 = jackson_routing<rat>::tandem(p8);
    for (int d1 = 1; d1 < 8; ++d1) {
        // restriction of the tandem to its first d1 stations, re-normalized
        network_params<rat> q;
        q.d = d1;
        rat total = p8.lambda;
        for (int i = 0; i < d1; ++i) total += p8.mu[i];
        q.lambda = p8.lambda / total;
        for (int i = 0; i < d1; ++i) q.mu.push_back(p8.mu[i] / total);
        auto rt1 = jackson_routing<rat>::tandem(q);
        auto res = simple_extension_check(rt1, rt8);
        CHECK(res.ok);
        CHECK(res.scale == total);
    }
}

TEST_CASE("extending graphs and solutions preserves the system") {
    // Single-vertex {2}-regular system for the 2-station example routing:
    // beta = alpha = 1/4 lies on both the free surface and the label-2
    // surface, so the lone vertex carries label 2 as a loop.
    auto rt1 = example_p1();
    auto rt2 = example_p2();
    labeled_graph g1;
    g1.label_lo = 2;
    g1.label_hi = 2;
    g1.vertices = {mask_of({2})};
    g1.loops.assign(1, {});
    g1.loops[0].insert(2);

    harmonic_solution<rat> sol;
    sol.beta = rat(1, 4);
    sol.alpha.push_back({rat(1, 4)});
    sol.c.push_back(rat(1));
    CHECK(char_poly_general(rt1, sol.beta, sol.alpha[0]) == rat(1));
    auto rep1 = verify_system(rt1, g1, sol, 0.0);
    CHECK(rep1.pass());

    CHECK(simple_extension_check(rt1, rt2).ok);
    auto g2 = extend_graph(g1, 4);
    CHECK(g2.is_regular());
    auto sol2 = extend_solution(sol, 2, 4);
    for (size_t j = 1; j < sol2.alpha[0].size(); ++j) CHECK(sol2.alpha[0][j] == sol.beta);
    auto rep2 = verify_system(rt2, g2, sol2, 0.0);
    CHECK(rep2.pass());
}

TEST_CASE("extended tandem solutions agree with the base under projection") {
    auto p8 = th::rates8_exact();
    for (int d = 1; d <= 4; ++d) {
        auto g_ext = extend_graph(build_g(d, d), 8);
        // building directly in the wide label set gives exactly the extension
        auto g_direct = build_g(d, 8);
        CHECK(g_ext.vertices == g_direct.vertices);
        CHECK(g_ext.edges == g_direct.edges);
        CHECK(g_ext.loops == g_direct.loops);
    }
    // pointwise: the extended h_G at any state equals the base h_G at the
    // projection onto the first coordinates (the new alpha entries equal beta,
    // so the extra powers cancel against the beta exponent)
    network_params<double> q4;
    {
        auto p8d = th::to_dbl(p8);
        double total = p8d.lambda;
        for (int i = 0; i < 4; ++i) total += p8d.mu[i];
        q4.d = 4;
        q4.lambda = p8d.lambda / total;
        for (int i = 0; i < 4; ++i) q4.mu.push_back(p8d.mu[i] / total);
    }
    auto base = tandem_solution(3, 4, q4);
    auto g34 = build_g(3, 4);
    auto ext = extend_solution(base, 4, 8);
    auto g38 = extend_graph(g34, 8);
    substream_rng rng(31, 0);
    for (int rep = 0; rep < 40; ++rep) {
        state y8 = th::random_state_b(8, rng);
        state y4(y8.begin(), y8.begin() + 4);
        CHECK(eval_hg(ext, g38, y8) == doctest::Approx(eval_hg(base, g34, y4)).epsilon(1e-12));
    }
}
