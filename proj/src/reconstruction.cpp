#include "lagred/reconstruction.hpp"

namespace lagred {

VectorField lift_reduced_field(const ReducedSystem& red) {
    const QuotientChart& qc = red.chart;
    const Chart& ch = qc.full;
    std::size_t n = static_cast<std::size_t>(ch.n());

    // both q̄ and v̄ have the same Jacobian in their leading slot: v̄ = w + M v
    ExprMatrix m(n, std::vector<Expr>(n));
    for (std::size_t mu = 0; mu < n; ++mu)
        for (std::size_t nu = 0; nu < n; ++nu)
            m[mu][nu] = canon(
                differentiate(qc.qbar[mu], ch.q_name(static_cast<int>(nu))));

    std::vector<Expr> bq(n);
    for (std::size_t mu = 0; mu < n; ++mu)
        bq[mu] = qc.compose_forward(red.field[mu]);
    std::vector<Expr> xq;
    try {
        xq = solve_linear_gauss(m, bq);
    } catch (const LinearSolveFailure&) {
        throw NonInvertibleVelocityMap(
            "quotient chart Jacobian is singular; cannot lift the reduced field");
    }

    std::vector<Expr> bv(n);
    for (std::size_t mu = 0; mu < n; ++mu) {
        Expr b = qc.compose_forward(red.field[n + mu]);
        for (std::size_t nu = 0; nu < n; ++nu)
            b = b - differentiate(qc.vbar[mu], ch.q_name(static_cast<int>(nu))) * xq[nu];
        bv[mu] = canon(b);
    }
    std::vector<Expr> xv = solve_linear_gauss(m, bv);

    std::vector<Expr> coeff(static_cast<std::size_t>(ch.dim()), Expr(0));
    for (std::size_t mu = 0; mu < n; ++mu) {
        coeff[1 + mu] = canon(xq[mu]);
        coeff[1 + n + mu] = canon(xv[mu]);
    }
    return VectorField(ch, std::move(coeff));
}

VectorField reconstruct(const LagrangianSystem& sys, const Connection& c,
                        const ReducedSystem& red) {
    require_same_chart(sys.chart(), c.chart(), "reconstruct");
    require_same_chart(sys.chart(), red.chart.full, "reconstruct");
    VectorField lift = lift_reduced_field(red);
    auto [h, v] = split_vector_field(lift, c);
    VectorField z = jet_prolongation(c) + v;
    for (Expr& e : z.coeff) e = canon(e);
    return z;
}

} // namespace lagred
