#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "lagred/expr.hpp"

namespace lagred {

/// Global coordinate chart (t, q^1..q^n, v^1..v^n) with the matching coframe
/// order (dt, dq^1..dq^n, dv^1..dv^n).
class Chart {
public:
    explicit Chart(std::vector<std::string> q_names);

    int n() const { return static_cast<int>(q_.size()); }
    int dim() const { return 2 * n() + 1; }

    const std::vector<std::string>& q_names() const { return q_; }
    const std::string& q_name(int mu) const { return q_[static_cast<std::size_t>(mu)]; }
    const std::string& v_name(int mu) const { return v_[static_cast<std::size_t>(mu)]; }

    /// frame coordinate at position i in the fixed order
    const std::string& coord(int i) const;
    int index_of(const std::string& name) const;  // throws UnknownVariable
    bool has(const std::string& name) const;

    Expr t_var() const { return Expr::var("t"); }
    Expr q_var(int mu) const { return Expr::var(q_name(mu)); }
    Expr v_var(int mu) const { return Expr::var(v_name(mu)); }

    bool operator==(const Chart& o) const { return q_ == o.q_; }

private:
    std::vector<std::string> q_;
    std::vector<std::string> v_;
};

/// ∂e/∂(chart coordinate); the variable must belong to the chart.
Expr chart_differentiate(const Chart& c, const Expr& e, const std::string& var);

using ExprMatrix = std::vector<std::vector<Expr>>;

class LagrangianSystem {
public:
    LagrangianSystem(Chart chart, Expr lagrangian);

    const Chart& chart() const { return chart_; }
    const Expr& lagrangian() const { return L_; }
    const ExprMatrix& hessian() const { return hessian_; }

private:
    Chart chart_;
    Expr L_;
    ExprMatrix hessian_;  // W_munu = d2L/dv^mu dv^nu, canonical
};

/// Connection on Q×R -> R: the n component functions Γ^μ(t, q).
class Connection {
public:
    Connection(Chart chart, std::vector<Expr> gamma);

    const Chart& chart() const { return chart_; }
    const std::vector<Expr>& gamma() const { return gamma_; }

private:
    Chart chart_;
    std::vector<Expr> gamma_;
};

struct VectorField {
    Chart chart;
    std::vector<Expr> coeff;  // ordered (d/dt, d/dq^mu, d/dv^mu)

    VectorField(Chart c, std::vector<Expr> co);
};

struct OneForm {
    Chart chart;
    std::vector<Expr> coeff;  // over (dt, dq^mu, dv^mu)

    OneForm(Chart c, std::vector<Expr> co);
};

/// 2-form stored as an antisymmetric (2n+1)x(2n+1) coefficient matrix,
/// representing sum_{i<j} A_ij dxi^i ∧ dxi^j.
struct TwoForm {
    Chart chart;
    ExprMatrix a;

    TwoForm(Chart c, ExprMatrix m);
};

// --- operations --------------------------------------------------------------

ExprMatrix hessian(const LagrangianSystem& sys);

struct RegularityReport {
    bool regular{false};
    bool symbolic{false};  // decided from canon(det W) alone
    Expr det;
    std::vector<std::string> probe_failures;
};

RegularityReport check_regular(const LagrangianSystem& sys, int probes = 32,
                               double tol = 1e-8, std::uint64_t seed = 20240915);

std::pair<OneForm, TwoForm> poincare_cartan_forms(const LagrangianSystem& sys);

VectorField suspension(const Connection& c);
VectorField jet_prolongation(const Connection& c);

/// Connection energy E = dL/dv^mu (v^mu - Γ^mu) - L.
Expr energy(const LagrangianSystem& sys, const Connection& c);

Expr lie_derivative_fn(const VectorField& x, const Expr& f);

bool is_symmetry(const LagrangianSystem& sys, const Connection& c, double tol = 1e-8,
                 int trials = 32, std::uint64_t seed = 20240915);

OneForm interior_product(const VectorField& x, const TwoForm& w);
Expr interior_product_1(const VectorField& x, const OneForm& a);
TwoForm exterior_derivative(const OneForm& a);
TwoForm wedge_dt(const OneForm& a);

/// exterior derivative of a function
OneForm differential(const Chart& ch, const Expr& f);

OneForm lie_derivative(const VectorField& x, const OneForm& a);   // Cartan
TwoForm lie_derivative(const VectorField& x, const TwoForm& w);   // Cartan

/// residuals of the mixed-partials closedness identity; empty iff dω = 0
std::vector<Expr> closedness_residuals(const TwoForm& w);

// elementwise helpers
OneForm operator+(const OneForm& a, const OneForm& b);
OneForm operator-(const OneForm& a, const OneForm& b);
TwoForm operator+(const TwoForm& a, const TwoForm& b);
TwoForm operator-(const TwoForm& a, const TwoForm& b);
VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator*(const Expr& f, const VectorField& x);

bool canon_zero(const OneForm& a);
bool canon_zero(const TwoForm& w);
bool canon_zero(const VectorField& x);

/// Laplace-expansion determinant of a small symbolic matrix.
Expr determinant(const ExprMatrix& m);

void require_same_chart(const Chart& a, const Chart& b, const std::string& where);

} // namespace lagred
