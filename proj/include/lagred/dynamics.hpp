#pragma once
#include "lagred/geometry.hpp"
#include "lagred/report.hpp"

namespace lagred {

/// Horizontal/vertical decomposition of the Poincaré–Cartan forms induced by a
/// connection: H + V reassembles the original entrywise.
struct SplitForms {
    OneForm theta_h;
    OneForm theta_v;
    TwoForm omega_h;
    TwoForm omega_v;
    Connection connection;
};

/// The dynamical SODE vector field: i(X)Ω_L = 0, i(X)dt = 1. The velocity
/// Hessian solve is symbolic (Cramer/adjugate) for n <= 4.
VectorField sode(const LagrangianSystem& sys);

Report verify_dynamics(const VectorField& x, const LagrangianSystem& sys);

std::pair<TwoForm, TwoForm> split_two_form(const TwoForm& w, const Connection& c);
std::pair<OneForm, OneForm> split_one_form(const OneForm& a, const Connection& c);
std::pair<VectorField, VectorField> split_vector_field(const VectorField& x,
                                                       const Connection& c);

SplitForms split_forms(const LagrangianSystem& sys, const Connection& c);

/// canon(X_L(E) + (j¹Ỹ)L); identically zero for every regular system.
Expr energy_rate(const LagrangianSystem& sys, const Connection& c);

/// Projectability residuals of Θ_L^V, Ω_L^V and E under the prolonged symmetry;
/// requires is_symmetry. `extended` adds the bracket check [j¹Ỹ, X_L] = 0.
Report check_projectable(const LagrangianSystem& sys, const Connection& c,
                         bool extended = false);

/// Lie bracket of vector fields, componentwise.
VectorField bracket(const VectorField& x, const VectorField& y);

/// Solve the linear system M a = b over expressions by Cramer/adjugate (size <= 4).
std::vector<Expr> solve_linear_cramer(const ExprMatrix& m, const std::vector<Expr>& b);

} // namespace lagred
