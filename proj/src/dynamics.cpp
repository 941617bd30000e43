#include "lagred/dynamics.hpp"

namespace lagred {

std::vector<Expr> solve_linear_cramer(const ExprMatrix& m, const std::vector<Expr>& b) {
    std::size_t n = m.size();
    if (n > 4)
        throw LinearSolveFailure("symbolic Cramer solve is limited to size <= 4");
    Expr det = canon(determinant(m));
    if (det.is_literal_zero())
        throw SingularHessian("coefficient matrix is symbolically singular");
    std::vector<Expr> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        ExprMatrix mj = m;
        for (std::size_t i = 0; i < n; ++i) mj[i][j] = b[i];
        out[j] = canon(determinant(mj) / det);
    }
    return out;
}

VectorField sode(const LagrangianSystem& sys) {
    auto reg = check_regular(sys);
    if (!reg.regular)
        throw SingularHessian("Lagrangian is not regular: det W = " + print(reg.det));
    const Chart& ch = sys.chart();
    int n = ch.n();
    const Expr& L = sys.lagrangian();

    // right-hand side of W a = b from the Euler-Lagrange equations
    std::vector<Expr> b(static_cast<std::size_t>(n));
    for (int mu = 0; mu < n; ++mu) {
        Expr p = differentiate(L, ch.v_name(mu));
        Expr rhs = differentiate(L, ch.q_name(mu)) - differentiate(p, "t");
        for (int nu = 0; nu < n; ++nu)
            rhs = rhs - ch.v_var(nu) * differentiate(p, ch.q_name(nu));
        b[static_cast<std::size_t>(mu)] = canon(rhs);
    }
    std::vector<Expr> accel = solve_linear_cramer(sys.hessian(), b);

    std::vector<Expr> coeff(static_cast<std::size_t>(ch.dim()));
    coeff[0] = Expr(1);
    for (int mu = 0; mu < n; ++mu) {
        coeff[static_cast<std::size_t>(1 + mu)] = ch.v_var(mu);
        coeff[static_cast<std::size_t>(1 + n + mu)] = accel[static_cast<std::size_t>(mu)];
    }
    return VectorField(ch, std::move(coeff));
}

namespace {

std::string nonzero_detail(const std::vector<Expr>& residuals,
                           const std::vector<std::string>& labels) {
    std::string out;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        Expr c = canon(residuals[i]);
        if (!c.is_literal_zero()) {
            if (!out.empty()) out += "; ";
            out += labels[i] + " = " + print(c);
        }
    }
    return out.empty() ? "all components zero" : out;
}

void add_form_zero(Report& r, const std::string& name, const OneForm& a) {
    std::vector<std::string> labels;
    for (int i = 0; i < a.chart.dim(); ++i) labels.push_back("d" + a.chart.coord(i));
    r.add(name, canon_zero(a), nonzero_detail(a.coeff, labels));
}

void add_form_zero(Report& r, const std::string& name, const TwoForm& w) {
    std::vector<Expr> residuals;
    std::vector<std::string> labels;
    for (int i = 0; i < w.chart.dim(); ++i)
        for (int j = i + 1; j < w.chart.dim(); ++j) {
            residuals.push_back(w.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            labels.push_back("d" + w.chart.coord(i) + "^d" + w.chart.coord(j));
        }
    r.add(name, canon_zero(w), nonzero_detail(residuals, labels));
}

void add_field_zero(Report& r, const std::string& name, const VectorField& x) {
    std::vector<std::string> labels;
    for (int i = 0; i < x.chart.dim(); ++i) labels.push_back("d/d" + x.chart.coord(i));
    r.add(name, canon_zero(x), nonzero_detail(x.coeff, labels));
}

} // namespace

Report verify_dynamics(const VectorField& x, const LagrangianSystem& sys) {
    require_same_chart(x.chart, sys.chart(), "verify_dynamics");
    Report r;
    r.title = "dynamical equation residuals";
    auto [theta, omega] = poincare_cartan_forms(sys);
    add_form_zero(r, "i(X) Omega_L = 0", interior_product(x, omega));
    r.add_zero("i(X) dt = 1", x.coeff[0] - Expr(1));
    return r;
}

std::pair<TwoForm, TwoForm> split_two_form(const TwoForm& w, const Connection& c) {
    require_same_chart(w.chart, c.chart(), "split_two_form");
    TwoForm h = wedge_dt(interior_product(jet_prolongation(c), w));
    TwoForm v = w - h;
    return {std::move(h), std::move(v)};
}

std::pair<OneForm, OneForm> split_one_form(const OneForm& a, const Connection& c) {
    require_same_chart(a.chart, c.chart(), "split_one_form");
    Expr paired = interior_product_1(jet_prolongation(c), a);
    std::vector<Expr> h_coeff(static_cast<std::size_t>(a.chart.dim()), Expr(0));
    h_coeff[0] = paired;
    OneForm h(a.chart, std::move(h_coeff));
    OneForm v = a - h;
    return {std::move(h), std::move(v)};
}

std::pair<VectorField, VectorField> split_vector_field(const VectorField& x,
                                                       const Connection& c) {
    require_same_chart(x.chart, c.chart(), "split_vector_field");
    VectorField h = x.coeff[0] * jet_prolongation(c);
    VectorField v = x - h;
    return {std::move(h), std::move(v)};
}

SplitForms split_forms(const LagrangianSystem& sys, const Connection& c) {
    auto [theta, omega] = poincare_cartan_forms(sys);
    auto [th, tv] = split_one_form(theta, c);
    auto [oh, ov] = split_two_form(omega, c);
    return {std::move(th), std::move(tv), std::move(oh), std::move(ov), c};
}

Expr energy_rate(const LagrangianSystem& sys, const Connection& c) {
    VectorField x = sode(sys);
    Expr e = energy(sys, c);
    return canon(lie_derivative_fn(x, e) +
                 lie_derivative_fn(jet_prolongation(c), sys.lagrangian()));
}

VectorField bracket(const VectorField& x, const VectorField& y) {
    require_same_chart(x.chart, y.chart, "bracket");
    int d = x.chart.dim();
    std::vector<Expr> out(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        Expr s(0);
        for (int j = 0; j < d; ++j) {
            const std::string& xi = x.chart.coord(j);
            s = s + x.coeff[static_cast<std::size_t>(j)] *
                        differentiate(y.coeff[static_cast<std::size_t>(i)], xi) -
                    y.coeff[static_cast<std::size_t>(j)] *
                        differentiate(x.coeff[static_cast<std::size_t>(i)], xi);
        }
        out[static_cast<std::size_t>(i)] = canon(s);
    }
    return VectorField(x.chart, std::move(out));
}

Report check_projectable(const LagrangianSystem& sys, const Connection& c, bool extended) {
    if (!is_symmetry(sys, c))
        throw SymmetryRequired("check_projectable requires an infinitesimal symmetry");
    Report r;
    r.title = "projectability of the vertical structures";
    SplitForms sf = split_forms(sys, c);
    VectorField j = jet_prolongation(c);
    Expr e = energy(sys, c);

    add_form_zero(r, "i(j1Y) Omega_L^V = 0", interior_product(j, sf.omega_v));
    add_form_zero(r, "L(j1Y) Omega_L^V = 0", lie_derivative(j, sf.omega_v));
    r.add_zero("i(j1Y) Theta_L^V = 0", interior_product_1(j, sf.theta_v));
    add_form_zero(r, "L(j1Y) Theta_L^V = 0", lie_derivative(j, sf.theta_v));
    r.add_zero("L(j1Y) E = 0", lie_derivative_fn(j, e));
    add_form_zero(r, "d Theta_L^V + Omega_L^V = 0",
                  exterior_derivative(sf.theta_v) + sf.omega_v);
    if (extended) add_field_zero(r, "[j1Y, X_L] = 0", bracket(j, sode(sys)));
    return r;
}

} // namespace lagred
