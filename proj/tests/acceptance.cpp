// Acceptance harness: one line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "helpers.hpp"
#include "lagred/integrate.hpp"
#include "lagred/reconstruction.hpp"

using namespace lagred;
using namespace testutil;

namespace {

int failures = 0;

void line(int index, const char* name, bool ok, const std::string& note = "") {
    std::printf("%d. %-48s %s%s%s\n", index, name, ok ? "pass" : "FAIL",
                note.empty() ? "" : "  -- ", note.c_str());
    if (!ok) ++failures;
}

bool fields_equal(const VectorField& a, const VectorField& b) {
    for (int i = 0; i < a.chart.dim(); ++i)
        if (!canon_equal(a.coeff[static_cast<std::size_t>(i)],
                         b.coeff[static_cast<std::size_t>(i)]))
            return false;
    return true;
}

double elapsed_ms(std::chrono::steady_clock::time_point from) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     from)
        .count();
}

const std::map<std::string, Expr>& quadratic_v() {
    static const std::map<std::string, Expr> defs{{"V", parse("(1/2)*u^2")}};
    return defs;
}

void criterion_1() {
    auto start = std::chrono::steady_clock::now();
    auto sys = ex_system();
    auto c = ex_connection();
    VectorField x = sode(sys);
    Expr e = energy(sys, c);
    double ms = elapsed_ms(start);

    VectorField expected(sys.chart(),
                         {Expr(1), parse("vx"), parse("vy"), parse("-(1 + vy)"),
                          parse("vx - 1 - V'(y)")});
    bool ok = fields_equal(x, expected) &&
              canon_equal(e, parse("(1/2)*(vx^2 + vy^2) + V(y) + x - t - vx")) &&
              ms < 1000.0;
    char note[64];
    std::snprintf(note, sizeof note, "%.1f ms", ms);
    line(1, "symbolic dynamics and energy on the worked example", ok, note);
}

void criterion_2() {
    ReducedSystem red = reduce(ex_system(), ex_connection(), flow_auto(ex_connection()));
    bool ok =
        canon_equal(red.lbar, parse("(1/2)*(vxb^2 + vyb^2) - V(yb) - xb*(vxb + vyb)")) &&
        canon_equal(red.energy, parse("(1/2)*(vxb^2 + vyb^2) + V(yb) + xb - vxb")) &&
        canon_equal(red.field[0], parse("vxb - 1")) &&
        canon_equal(red.field[1], parse("vyb")) &&
        canon_equal(red.field[2], parse("-(1 + vyb)")) &&
        canon_equal(red.field[3], parse("vxb - 1 - V'(yb)")) &&
        canon_equal(red.mismatch, parse("xb - vxb"));
    line(2, "exact reduction of the worked example", ok);
}

void criterion_3() {
    bool ok = true;
    for (auto [sys, c] : {std::pair{ex_system(), ex_connection()},
                          std::pair{fp_system(), fp_connection()}}) {
        ReducedSystem red = reduce(sys, c, flow_auto(c));
        ok = ok && pullback_check(sys, c, red).passed();
    }
    line(3, "pullback of the reduced one-form is the vertical form", ok);
}

void criterion_4() {
    auto sys = ex_system();
    auto c = ex_connection();
    ReducedSystem red = reduce(sys, c, flow_auto(c));
    VectorField z = reconstruct(sys, c, red);
    VectorField x = sode(sys);
    bool ok = fields_equal(z, x);

    std::vector<std::string> names;
    for (int i = 0; i < sys.chart().dim(); ++i) names.push_back(sys.chart().coord(i));
    std::mt19937_64 rng(20240915);
    std::uniform_real_distribution<double> box(-1.5, 1.5);
    for (int trial = 0; trial < 20 && ok; ++trial) {
        std::vector<double> pt;
        for (std::size_t i = 0; i < names.size(); ++i) pt.push_back(box(rng));
        for (int i = 0; i < sys.chart().dim(); ++i) {
            auto slot = static_cast<std::size_t>(i);
            double zi = CompiledExpr::compile(z.coeff[slot], names, quadratic_v())
                            .eval(pt);
            double xi = CompiledExpr::compile(x.coeff[slot], names, quadratic_v())
                            .eval(pt);
            if (std::abs(zi - xi) >= 1e-10) ok = false;
        }
    }
    line(4, "reconstruction recovers the dynamical field", ok);
}

void criterion_5() {
    bool ok = check_projectable(ex_system(), ex_connection(), true).passed() &&
              check_projectable(fp_system(), fp_connection(), true).passed();
    line(5, "vertical structures project to the quotient", ok);
}

void criterion_6() {
    LagrangianSystem driven(Chart({"q"}), parse("(1/2)*vq^2 + t*q"));
    Connection trivial(Chart({"q"}), {Expr(0)});
    bool ok = canon(energy_rate(ex_system(), ex_connection())).is_literal_zero() &&
              canon(energy_rate(fp_system(), fp_connection())).is_literal_zero() &&
              canon(energy_rate(driven, trivial)).is_literal_zero();
    line(6, "energy rate identity", ok);
}

void criterion_7() {
    ReducedSystem red = reduce(fp_system(), fp_connection(), flow_auto(fp_connection()));
    bool ok = canon(red.mismatch).is_literal_zero() &&
              canon_equal(red.omega[0][1], Expr(1)) &&
              canon_equal(red.omega[1][0], Expr(-1)) &&
              red.omega[0][0].is_literal_zero() && red.omega[1][1].is_literal_zero();
    line(7, "autonomous collapse of the free particle", ok);
}

void criterion_8() {
    auto start = std::chrono::steady_clock::now();
    auto sys = ex_system();
    auto c = ex_connection();
    IntegratorConfig cfg;
    cfg.abs_tol = 1e-10;
    cfg.rel_tol = 1e-10;
    Trajectory full = integrate_full(sys, c, {0, 0, 0, 1, 0}, {0, 10}, cfg,
                                     quadratic_v());
    ReducedSystem red = reduce(sys, c, flow_auto(c));
    Trajectory reduced = integrate_reduced(red, {0, 0, 1, 0}, {0, 10}, cfg,
                                           quadratic_v());
    auto drift = [](const std::vector<double>& e) {
        double worst = 0;
        for (double v : e)
            worst = std::max(worst,
                             std::abs(v - e.front()) / std::max(1.0, std::abs(e.front())));
        return worst;
    };
    double d_full = drift(evaluate_along(energy(sys, c), full, quadratic_v()));
    double d_red = drift(evaluate_along(red.energy, reduced, quadratic_v()));
    bool projected =
        compare_projection(full, red.chart, reduced, 1e-6, quadratic_v()).passed();
    double ms = elapsed_ms(start);
    bool ok = d_full < 1e-8 && d_red < 1e-8 && projected && ms < 5000.0;
    char note[96];
    std::snprintf(note, sizeof note, "drift %.2e / %.2e, %.0f ms", d_full, d_red, ms);
    line(8, "numeric conservation and projection agreement", ok, note);
}

void criterion_9() {
    bool ok = true;

    // derivative versus central finite difference, 100 random cases
    std::mt19937_64 rng(314159);
    int checked = 0;
    while (checked < 100) {
        Expr e = random_expr(rng, 3);
        Bindings b = random_point(rng);
        for (const char* var : {"x", "y", "t"}) {
            double exact = eval(differentiate(e, var), b);
            double approx = finite_difference(e, var, b);
            double scale = std::max({1.0, std::abs(exact), std::abs(approx)});
            if (std::abs(exact) > 1e6) continue;  // FD unreliable on huge slopes
            if (std::abs(exact - approx) / scale >= 1e-6) ok = false;
        }
        // canon idempotence on the same sample
        Expr once = canon(e);
        if (!canon_equal(once, canon(once))) ok = false;
        ++checked;
    }

    // antisymmetry and closedness of the canonical 2-form on random polynomials
    for (int trial = 0; trial < 20; ++trial) {
        LagrangianSystem sys = random_poly_system(rng);
        auto [theta, omega] = poincare_cartan_forms(sys);
        for (int i = 0; i < sys.chart().dim(); ++i)
            for (int j = 0; j < sys.chart().dim(); ++j) {
                auto r = static_cast<std::size_t>(i);
                auto s = static_cast<std::size_t>(j);
                if (!canon_equal(omega.a[r][s], Expr(0) - omega.a[s][r])) ok = false;
            }
        if (!closedness_residuals(omega).empty()) ok = false;
    }

    // the dynamical field is the unique dt-normalized kernel element
    for (auto [sys, c] : {std::pair{ex_system(), ex_connection()},
                          std::pair{fp_system(), fp_connection()}}) {
        VectorField x = sode(sys);
        if (!verify_dynamics(x, sys).passed()) ok = false;
        VectorField bent = x;
        bent.coeff[1] = bent.coeff[1] + Expr(1);
        if (verify_dynamics(bent, sys).passed()) ok = false;
    }

    line(9, "property suites (derivatives, canon, forms, dynamics)", ok);
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}
