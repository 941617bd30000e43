#pragma once
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lagred/expr.hpp"
#include "lagred/geometry.hpp"

namespace testutil {

using lagred::Bindings;
using lagred::Expr;

// the worked two-dimensional example used throughout the suite
inline Expr ex_lagrangian() {
    return lagred::parse("(1/2)*(vx^2 + vy^2) - V(y) + (t - x)*vx + (t - x)*vy");
}

// smooth reference implementation for the uninterpreted symbol V
inline lagred::SymbolFn smooth_symbol() {
    return [](int order, double x) {
        // V(x) = sin(1.3 x) + x^2 / 2
        double s;
        switch (order % 4) {
            case 0: s = std::sin(1.3 * x); break;
            case 1: s = std::cos(1.3 * x); break;
            case 2: s = -std::sin(1.3 * x); break;
            default: s = -std::cos(1.3 * x); break;
        }
        double scaled = s * std::pow(1.3, order);
        if (order == 0) return scaled + x * x / 2;
        if (order == 1) return scaled + x;
        if (order == 2) return scaled + 1;
        return scaled;
    };
}

// central finite difference in one variable
inline double finite_difference(const Expr& e, const std::string& var, Bindings b,
                                double h = 1e-5) {
    double x0 = b.values.at(var);
    b.set(var, x0 + h);
    double hi = lagred::eval(e, b);
    b.set(var, x0 - h);
    double lo = lagred::eval(e, b);
    return (hi - lo) / (2 * h);
}

// random expression trees over {x, y, t}; FD-safe (no quotients, no log)
inline Expr random_expr(std::mt19937_64& rng, int depth, bool allow_symbols = true) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : (allow_symbols ? 6 : 5));
    std::uniform_int_distribution<int> var_pick(0, 2);
    std::uniform_int_distribution<int> const_pick(-4, 4);
    static const char* vars[] = {"x", "y", "t"};
    switch (pick(rng)) {
        case 0:
            return Expr::var(vars[var_pick(rng)]);
        case 1:
            return Expr(const_pick(rng));
        case 2:
            return random_expr(rng, depth - 1, allow_symbols) +
                   random_expr(rng, depth - 1, allow_symbols);
        case 3:
            return random_expr(rng, depth - 1, allow_symbols) *
                   random_expr(rng, depth - 1, allow_symbols);
        case 4: {
            std::uniform_int_distribution<int> ex(2, 3);
            return Expr::pow(random_expr(rng, depth - 1, allow_symbols), ex(rng));
        }
        case 5: {
            std::uniform_int_distribution<int> f(0, 1);
            Expr arg = random_expr(rng, depth - 1, allow_symbols);
            return f(rng) ? lagred::sin(arg) : lagred::cos(arg);
        }
        default:
            return Expr::sym("V", random_expr(rng, depth - 1, false));
    }
}

inline lagred::LagrangianSystem ex_system() {
    return {lagred::Chart({"x", "y"}), ex_lagrangian()};
}

inline lagred::Connection ex_connection() {
    return {lagred::Chart({"x", "y"}), {Expr(1), Expr(0)}};
}

// free particle on the line with the trivial connection
inline lagred::LagrangianSystem fp_system() {
    return {lagred::Chart({"q"}), lagred::parse("(1/2)*vq^2")};
}

inline lagred::Connection fp_connection() {
    return {lagred::Chart({"q"}), {Expr(0)}};
}

// random polynomial Lagrangian of bounded degree over (t, q, v)
inline lagred::LagrangianSystem random_poly_system(std::mt19937_64& rng, int n_max = 3,
                                                   int degree = 3) {
    std::uniform_int_distribution<int> n_pick(1, n_max);
    int n = n_pick(rng);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("q" + std::to_string(i));
    lagred::Chart chart(names);
    std::uniform_int_distribution<int> coeff(-3, 3);
    std::uniform_int_distribution<int> terms(3, 7);
    std::uniform_int_distribution<int> var_pick(0, 2 * n);
    Expr L(0);
    int count = terms(rng);
    for (int k = 0; k < count; ++k) {
        Expr term(coeff(rng));
        std::uniform_int_distribution<int> deg_pick(0, degree);
        int deg = deg_pick(rng);
        for (int d = 0; d < deg; ++d) {
            int i = var_pick(rng);
            term = term * Expr::var(chart.coord(i));
        }
        L = L + term;
    }
    return {chart, L};
}

inline Bindings random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> box(-1.5, 1.5);
    Bindings b;
    for (const char* v : {"x", "y", "t", "vx", "vy"}) b.set(v, box(rng));
    b.set_symbol("V", smooth_symbol());
    return b;
}

} // namespace testutil
