#include <doctest.h>

#include "test_helpers.hpp"

using namespace tandemq;

TEST_CASE("constrained step cancels infeasible jumps") {
    CHECK(step_x({0, 3}, 1) == state{0, 3}); // transfer blocked at an empty station
    CHECK(step_x({1, 3}, 1) == state{0, 4});
    CHECK(step_x({2, 0, 0}, 3) == state{2, 0, 0}); // departure blocked when station d is empty
    CHECK(step_x({2, 0, 1}, 3) == state{2, 0, 0});
    CHECK(step_x({0, 0}, 0) == state{1, 0});
}

TEST_CASE("y-walk reflects coordinate 1 and leaves it unconstrained") {
    CHECK(step_y({0, 3}, 1) == state{1, 4});
    CHECK(step_y({5, 0}, 0) == state{4, 0});
    CHECK(step_y({0, 0}, 0) == state{-1, 0});
    CHECK(step_y({5, 0, 2}, 2) == state{5, 0, 2}); // transfer blocked: y(2) = 0
    CHECK(step_y({5, 1, 2}, 2) == state{5, 0, 3});
    // d = 1: departure reflects to +e_1
    CHECK(step_y({3}, 1) == state{4});
    CHECK(step_y({0}, 0) == state{-1});
}

TEST_CASE("unconstrained-in-1 walk") {
    CHECK(step_xbar({0, 3}, 1) == state{-1, 4});
    CHECK(step_xbar({2, 1}, 0) == state{3, 1});
    CHECK(step_xbar({0, 1, 0}, 3) == state{0, 1, 0});
}

TEST_CASE("exit-corner map") {
    CHECK(affine_map_tn(60, {1, 0, 0, 0}) == state{59, 0, 0, 0});
    state y = affine_map_tn(5, {5, 0});
    CHECK(y == state{0, 0});
    CHECK(on_boundary_b(y));
    substream_rng rng(7, 0);
    for (int t = 0; t < 50; ++t) {
        state x(3);
        for (auto& c : x) c = (int)(rng.next() % 10);
        CHECK(affine_map_tn(9, affine_map_tn(9, x)) == x);
    }
}

TEST_CASE("totals and region membership helpers") {
    CHECK(sum_s({1, 2, 3}) == 6);
    CHECK(on_boundary_b({3, 1, 2}));
    CHECK(in_b({4, 1, 2}));
    CHECK(!in_b({2, 1, 2}));
    CHECK(in_region_rrho(th::rates4(), {0, 0, 0, 0}));
}

TEST_CASE("walk conservation laws") {
    auto p = th::rates4();
    substream_rng rng(11, 1);
    for (int t = 0; t < 400; ++t) {
        state x(4);
        for (auto& c : x) c = (int)(rng.next() % 4);
        int k = (int)(rng.next() % 5);
        state nx = step_x(x, k);
        for (int c : nx) CHECK(c >= 0);
        if (k == 0)
            CHECK(sum_s(nx) == sum_s(x) + 1);
        else if (k < 4)
            CHECK(sum_s(nx) == sum_s(x)); // feasible or cancelled, transfers conserve the total
        else
            CHECK((sum_s(nx) == sum_s(x) || sum_s(nx) == sum_s(x) - 1));
        state ny = step_y(affine_map_tn(9, x), k);
        for (size_t j = 1; j < ny.size(); ++j) CHECK(ny[j] >= 0);
        // off the first boundary the two walks agree through the corner map
        if (x[0] > 0) CHECK(affine_map_tn(9, step_x(x, k)) == ny);
    }
}

TEST_CASE("increment probabilities sum to one") {
    auto p = th::rates4();
    double s = 0;
    for (int k = 0; k <= p.d; ++k) s += increment_prob(p, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("parameter validation") {
    network_params<double> p;
    p.d = 2;
    p.lambda = 0.3;
    p.mu = {0.2, 0.5};
    // lambda below max mu but not below min mu is rejected
    CHECK_THROWS_AS(p.validate(), validation_error);
    p.mu = {0.35, 0.35};
    CHECK_NOTHROW(p.validate());
    p.lambda = 0.4;
    p.mu = {0.35, 0.35};
    CHECK_THROWS_AS(p.validate(), validation_error);
    network_params<double> q;
    q.d = 2;
    q.lambda = 0.1;
    q.mu = {0.3, 0.4};
    CHECK_THROWS_AS(q.validate(), validation_error); // not normalized
    q.normalize();
    CHECK_NOTHROW(q.validate());
}

TEST_CASE("params JSON round trip") {
    auto j = nlohmann::json::parse(R"({"lambda":"1/18","mu":["3/18","7/18","2/18","5/18"]})");
    auto p = params_from_json<rat>(j);
    CHECK(p.lambda == rat(1, 18));
    CHECK(p.rho(3) == rat(1, 2));
    auto j2 = params_to_json(p);
    auto p2 = params_from_json<rat>(j2);
    CHECK(p2.lambda == p.lambda);
    CHECK(p2.mu == p.mu);

    auto pd = params_from_json<double>(j);
    CHECK(pd.lambda == doctest::Approx(1.0 / 18).epsilon(1e-15));
    auto jd = params_to_json(pd);
    auto pd2 = params_from_json<double>(jd);
    CHECK(pd2.lambda == pd.lambda);
    CHECK(pd2.mu == pd.mu);
}

TEST_CASE("rational literal parsing") {
    CHECK(parse_rat("3/18") == rat(1, 6));
    CHECK(parse_rat("0.05") == rat(1, 20));
    CHECK(parse_rat("7") == rat(7));
    CHECK_THROWS_AS(parse_rat("x/y"), validation_error);
}
