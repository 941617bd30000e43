#pragma once
#include <utility>

#include "lagred/dynamics.hpp"
#include "lagred/geometry.hpp"
#include "lagred/report.hpp"

namespace lagred {

enum class FlowProvenance { Auto, UserSupplied };

/// Flow of the suspension: expressions φ^μ(s, q, t) with φ^μ|_{s=0} = q^μ and
/// ∂φ^μ/∂s = Γ^μ(φ, t+s). The flow parameter is the reserved variable "s".
struct Flow {
    Chart chart;
    std::vector<Expr> phi;
    FlowProvenance provenance{FlowProvenance::UserSupplied};
};

/// Closed-form flow for connections that are affine in q with a constant
/// coefficient matrix (nilpotent or diagonal), including the purely
/// time-dependent case. Throws UnsupportedConnection otherwise; the caller must
/// then supply the flow.
Flow flow_auto(const Connection& c);

Report flow_validate(const Flow& f, const Connection& c);

/// Identification of the orbit space with the t = 0 slice, as coordinate maps.
/// Reduced coordinate names carry a "b" suffix (x -> xb, vx -> vxb).
struct QuotientChart {
    explicit QuotientChart(Chart c) : full(std::move(c)) {}

    Chart full;
    std::vector<std::string> qb_names;
    std::vector<std::string> vb_names;
    std::vector<Expr> qbar;   // q̄^μ(t, q)
    std::vector<Expr> vbar;   // v̄^μ(t, q, v), affine in v
    std::vector<Expr> q_inv;  // q^μ(t, q̄)
    std::vector<Expr> v_inv;  // v^μ(t, q̄, v̄)

    int n() const { return static_cast<int>(qbar.size()); }
    int reduced_dim() const { return 2 * n(); }
    /// reduced frame coordinate at position i, ordered (q̄^1..q̄^n, v̄^1..v̄^n)
    const std::string& reduced_coord(int i) const;

    /// compose an expression in the reduced variables with the forward map
    Expr compose_forward(const Expr& e) const;
};

QuotientChart quotient_chart(const Flow& f, const Connection& c);

struct ReducedSystem {
    explicit ReducedSystem(QuotientChart qc) : chart(std::move(qc)) {}

    QuotientChart chart;
    Expr lbar;                // reduced Lagrangian
    Expr energy;              // reduced Hamiltonian (projected connection energy)
    Expr lag_energy;          // Lagrangian energy of lbar
    Expr mismatch;            // energy - lag_energy
    std::vector<Expr> theta;  // 2n coefficients over (dq̄, dv̄)
    ExprMatrix omega;         // 2n x 2n, antisymmetric
    std::vector<Expr> field;  // the Hamiltonian vector field of `energy`
};

ReducedSystem reduce(const LagrangianSystem& sys, const Connection& c, const Flow& f);

Report pullback_check(const LagrangianSystem& sys, const Connection& c,
                      const ReducedSystem& red);

Report first_integral_check(const ReducedSystem& red);

/// Symbolic Gaussian elimination with canon-tested pivoting; any size.
std::vector<Expr> solve_linear_gauss(ExprMatrix a, std::vector<Expr> b);

} // namespace lagred
