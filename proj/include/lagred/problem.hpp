#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lagred/integrate.hpp"
#include "lagred/reduction.hpp"

namespace lagred {

/// One problem file drives every command: system, connection, optional flow,
/// symbol realizations, initial data, and solver settings.
struct Problem {
    Problem(LagrangianSystem s, Connection c)
        : system(std::move(s)), connection(std::move(c)) {}

    LagrangianSystem system;
    Connection connection;
    std::optional<Flow> flow;  // user-supplied; otherwise derived from Γ
    std::vector<std::string> symbols;
    std::map<std::string, Expr> symbol_defs;  // numeric realizations

    std::vector<double> ic_full;     // (t, q, v) order, may be empty
    std::vector<double> ic_reduced;  // (q̄, v̄) order, may be empty
    std::pair<double, double> span{0, 1};
    IntegratorConfig integrator;

    double tol{1e-8};
    int probes{32};
    std::uint64_t seed{20240915};
};

Problem parse_problem(std::istream& in);
Problem load_problem(const std::string& path);

/// the flow named by the problem, falling back to the derived one
Flow problem_flow(const Problem& p);

} // namespace lagred
