#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

std::string bin_path() {
    const char* p = std::getenv("TANDEMQ_BIN");
    REQUIRE(p != nullptr);
    return p;
}

struct run_result {
    int code = -1;
    std::string out;
};

run_result run(const std::string& args) {
    std::string cmd = bin_path() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    run_result r;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string write_params(const std::string& name, const std::string& body) {
    std::string path = std::string("/tmp/") + name;
    std::ofstream f(path);
    f << body;
    return path;
}

} // namespace

TEST_CASE("approx command") {
    auto p = write_params("tq_p4.json", R"({"lambda":"1/18","mu":["3/18","7/18","2/18","5/18"]})");
    auto r = run("approx --params " + p + " --n 60 --x 1,0,0,0");
    CHECK(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["probability"].get<double>() > 0);
    CHECK(j["probability"].get<double>() < 1e-10);
    CHECK(j.contains("W_n"));

    // boundary state prints one
    auto rb = run("approx --params " + p + " --y 3,1,2,0");
    auto jb = json::parse(rb.out);
    CHECK(jb["probability"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));

    // exact mode carries a rational string
    auto re = run("approx --params " + p + " --y 3,1,2,0 --rational");
    auto je = json::parse(re.out);
    CHECK(je["probability_exact"].get<std::string>() == "1");

    // the params echoed by a report re-parse to the identical set
    CHECK(je["params"]["lambda"].get<std::string>() == "1/18");
    auto rr = run("approx --params " + p + " --y 3,1,2,0");
    auto jr = json::parse(rr.out);
    CHECK(jr["params"]["lambda"].get<double>() == 1.0 / 18);
    CHECK(jr["params"]["mu"][2].get<double>() == 2.0 / 18);

    // repeated rates with d != 3 are a validation failure (exit 2)
    auto peq = write_params("tq_peq.json", R"({"lambda":0.2,"mu":[0.2,0.2,0.2,0.2]})");
    CHECK(run("approx --params " + peq + " --y 3,0,0,0").code == 2);

    // equal rates with d = 3 route to the polynomial form
    auto p3 = write_params("tq_p3eq.json", R"({"lambda":0.1,"mu":[0.3,0.3,0.3]})");
    auto r3 = run("approx --params " + p3 + " --y 2,1,1");
    CHECK(r3.code == 0);
    CHECK(json::parse(r3.out)["method"] == "equal_rates_d3");
}

TEST_CASE("exact and simulate commands") {
    auto p = write_params("tq_p2.json", R"({"lambda":0.2,"mu":[0.5,0.3]})");
    auto r = run("exact --params " + p + " --n 8 --x 1,1");
    CHECK(r.code == 0);
    auto j = json::parse(r.out);
    double truth = j["probability"].get<double>();
    CHECK(truth > 0);
    CHECK(j["residual"].get<double>() <= 1e-11);

    auto rs = run("simulate --params " + p + " --n 8 --x 1,1 --method is --samples 20000 --seed 5");
    CHECK(rs.code == 0);
    auto js = json::parse(rs.out);
    CHECK(js["estimate"].get<double>() == doctest::Approx(truth).epsilon(0.1));

    // identical invocation, identical bytes
    auto rs2 = run("simulate --params " + p + " --n 8 --x 1,1 --method is --samples 20000 --seed 5");
    CHECK(rs2.out == rs.out);

    // budget exceeded -> exit 4
    auto rb = run("exact --params " + p + " --n 8 --budget 10");
    CHECK(rb.code == 4);
}

TEST_CASE("verify commands") {
    auto p = write_params("tq_p4b.json", R"({"lambda":"1/18","mu":["3/18","7/18","2/18","5/18"]})");
    CHECK(run("verify system --params " + p + " --rational").code == 0);
    CHECK(run("verify formula --params " + p + " --grid 6 --tol 1e-10").code == 0);
    CHECK(run("verify bounds --params " + p + " --samples 300 --seed 3").code == 0);
    CHECK(run("verify coupling --params " + p + " --n 10 --x 1,1,0,0 --paths 500 --seed 3").code == 0);
}

TEST_CASE("bounds and sweep emit CSV") {
    auto p = write_params("tq_p3.json", R"({"lambda":0.1,"mu":[0.35,0.3,0.25]})");
    auto r = run("bounds --params " + p + " --n 8 --x 1,0,0 --x 2,1,0");
    CHECK(r.code == 0);
    CHECK(r.out.find("g_n,lower_bound") != std::string::npos);
    int lines = 0;
    for (char c : r.out)
        if (c == '\n') ++lines;
    CHECK(lines == 3);

    auto rs = run("sweep --params " + p + " --n 6 --slice i,j,0");
    CHECK(rs.code == 0);
    CHECK(rs.out.find("V_n,W_n,rel_err") != std::string::npos);

    // invalid state is a validation failure
    CHECK(run("bounds --params " + p + " --n 8").code == 2);
}
