#include <sstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "lagred/problem.hpp"

using namespace lagred;
using namespace testutil;

namespace {

Problem from_string(const std::string& text) {
    std::istringstream is(text);
    return parse_problem(is);
}

const char* kExampleFile = R"(
# two-dimensional system with a moving-frame symmetry
coordinates = x, y
symbols = V
lagrangian = (1/2)*(vx^2 + vy^2) - V(y) + (t - x)*vx + (t - x)*vy
connection = 1, 0
numeric.V = (1/2)*u^2
ic.full = 0, 0, 0, 1, 0
ic.reduced = 0, 0, 1, 0
span = 0, 10
integrator.method = dopri54
integrator.abs_tol = 1e-10
integrator.rel_tol = 1e-10
tol = 1e-8
probes = 32
seed = 20240915
)";

} // namespace

TEST_CASE("parse_problem reads the full example") {
    Problem p = from_string(kExampleFile);
    CHECK(p.system.chart().q_names() == std::vector<std::string>{"x", "y"});
    CHECK(canon_equal(p.system.lagrangian(), ex_lagrangian()));
    CHECK(canon_equal(p.connection.gamma()[0], Expr(1)));
    CHECK(canon_equal(p.connection.gamma()[1], Expr(0)));
    CHECK(p.symbols == std::vector<std::string>{"V"});
    CHECK(canon_equal(p.symbol_defs.at("V"), parse("(1/2)*u^2")));
    CHECK(p.ic_full == std::vector<double>{0, 0, 0, 1, 0});
    CHECK(p.ic_reduced == std::vector<double>{0, 0, 1, 0});
    CHECK(p.span == std::pair<double, double>{0, 10});
    CHECK(p.integrator.method == Method::DOPRI54);
    CHECK(p.integrator.abs_tol == 1e-10);
    CHECK(p.tol == 1e-8);
    CHECK(p.probes == 32);
    CHECK(p.seed == 20240915);
    CHECK_FALSE(p.flow.has_value());

    Flow f = problem_flow(p);
    CHECK(f.provenance == FlowProvenance::Auto);
    CHECK(canon_equal(f.phi[0], parse("x + s")));
}

TEST_CASE("user-supplied flow wins over the derived one") {
    Problem p = from_string(
        "coordinates = q\n"
        "lagrangian = (1/2)*vq^2\n"
        "connection = 0\n"
        "flow = q + 0*s\n");
    REQUIRE(p.flow.has_value());
    Flow f = problem_flow(p);
    CHECK(f.provenance == FlowProvenance::UserSupplied);
    CHECK(canon_equal(f.phi[0], Expr::var("q")));
}

TEST_CASE("defaults apply when optional keys are absent") {
    Problem p = from_string(
        "coordinates = q\n"
        "lagrangian = (1/2)*vq^2\n"
        "connection = 0\n");
    CHECK(p.integrator.method == Method::DOPRI54);
    CHECK(p.integrator.abs_tol == 1e-10);
    CHECK(p.span == std::pair<double, double>{0, 1});
    CHECK(p.tol == 1e-8);
    CHECK(p.ic_full.empty());
}

TEST_CASE("parse_problem rejects malformed input") {
    auto bad = [](const std::string& text) {
        CHECK_THROWS_AS(from_string(text), InputError);
    };
    bad("lagrangian = vq\nconnection = 0\n");                       // no coordinates
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0, 0\n");
    bad("coordinates = q\nlagrangian = V(q)*vq^2\nconnection = 0\n");  // undeclared V
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\nnumeric.V = u\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\nconnection = 0\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\nbogus = 1\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\nspan = 1\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\nspan = a, b\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\ntol = -1\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\nic.full = 1, 2\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\nflow = q, q\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\n"
        "integrator.method = euler\n");
    bad("coordinates = q\nlagrangian = (1/2)*vq^2\nconnection = 0\njust a line\n");

    // syntax errors surface the offending key and position
    try {
        from_string("coordinates = q\nlagrangian = (1/2*vq^2\nconnection = 0\n");
        FAIL("expected InputError");
    } catch (const InputError& e) {
        std::string msg = e.what();
        CHECK(msg.find("lagrangian") != std::string::npos);
        CHECK(msg.find("position") != std::string::npos);
    }
}

TEST_CASE("load_problem reports missing files") {
    CHECK_THROWS_AS(load_problem("/nonexistent/path.problem"), InputError);
}
