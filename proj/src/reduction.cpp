#include "lagred/reduction.hpp"

#include <utility>

namespace lagred {

namespace {

bool contains_var(const Expr& e, const std::string& var) {
    return free_variables(e).count(var) > 0;
}

/// slope of `arg` in `var` when arg is affine in var; empty otherwise
std::optional<Expr> affine_slope(const Expr& arg, const std::string& var) {
    Expr a = canon(differentiate(arg, var));
    if (contains_var(a, var)) return std::nullopt;
    return a;
}

/// Closed-form antiderivative in `var` over the supported atom set:
/// polynomials, powers of affine arguments, and sin/cos/exp of affine
/// arguments. Everything outside that set is rejected.
Expr antiderivative(const Expr& e, const std::string& var) {
    if (!contains_var(e, var)) return e * Expr::var(var);
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Var:
            return Expr::pow(e, 2) / 2;
        case Kind::Add: {
            Expr out(0);
            for (const Expr& term : n.args) out = out + antiderivative(term, var);
            return out;
        }
        case Kind::Mul: {
            std::vector<Expr> constant;
            std::vector<Expr> dependent;
            for (const Expr& f : n.args)
                (contains_var(f, var) ? dependent : constant).push_back(f);
            if (dependent.size() == 1)
                return Expr::mul(std::move(constant)) * antiderivative(dependent[0], var);
            break;
        }
        case Kind::Pow: {
            if (n.value == -1) break;  // would need a logarithm
            if (auto a = affine_slope(n.args[0], var)) {
                Rational k1 = n.value + 1;
                return Expr::pow(n.args[0], k1) / (Expr::num(k1) * *a);
            }
            break;
        }
        case Kind::Fun: {
            auto a = affine_slope(n.args[0], var);
            if (!a || canon(*a).is_literal_zero()) break;
            switch (n.fun) {
                case FunKind::Sin: return -cos(n.args[0]) / *a;
                case FunKind::Cos: return sin(n.args[0]) / *a;
                case FunKind::Exp: return exp(n.args[0]) / *a;
                case FunKind::Log: break;
            }
            break;
        }
        case Kind::Div: {
            if (!contains_var(n.args[1], var))
                return antiderivative(n.args[0], var) / n.args[1];
            break;
        }
        default:
            break;
    }
    throw UnsupportedConnection("no closed-form antiderivative for " + print(e) +
                                " in " + var);
}

/// ∫_0^s g(u) du as an expression in s (and whatever else g carries)
Expr integral_to_s(const Expr& g, const std::string& u = "u") {
    Expr f = antiderivative(canon(g), u);
    Bindings hi, lo;
    hi.set(u, Expr::var("s"));
    lo.set(u, Expr(0));
    return canon(substitute(f, hi) - substitute(f, lo));
}

using RatMat = std::vector<std::vector<Rational>>;

RatMat rat_identity(std::size_t n) {
    RatMat m(n, std::vector<Rational>(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

RatMat rat_mul(const RatMat& a, const RatMat& b) {
    std::size_t n = a.size();
    RatMat out(n, std::vector<Rational>(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

bool rat_zero(const RatMat& m) {
    for (const auto& row : m)
        for (const auto& x : row)
            if (x != 0) return false;
    return true;
}

bool rat_diagonal(const RatMat& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if (i != j && m[i][j] != 0) return false;
    return true;
}

Rational factorial(int k) {
    Rational f(1);
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

/// coefficients of a polynomial in `var`, lowest degree first
std::vector<Expr> polynomial_coefficients(const Expr& e, const std::string& var) {
    constexpr int max_degree = 40;
    std::vector<Expr> coeff;
    Expr d = canon(e);
    Bindings at_zero;
    at_zero.set(var, Expr(0));
    for (int k = 0; k <= max_degree; ++k) {
        if (d.is_literal_zero()) return coeff;
        coeff.push_back(canon(substitute(d, at_zero) / Expr::num(factorial(k))));
        d = canon(differentiate(d, var));
    }
    throw UnsupportedConnection("inhomogeneous part is not polynomial in " + var);
}

} // namespace

Flow flow_auto(const Connection& c) {
    const Chart& ch = c.chart();
    if (ch.has("s") || ch.has("u") || ch.has("s1") || ch.has("s2"))
        throw UnsupportedConnection(
            "coordinate names s, u, s1, s2 are reserved for flow parameters");
    std::size_t n = static_cast<std::size_t>(ch.n());
    const std::vector<Expr>& gamma = c.gamma();

    // affine decomposition Γ = A q + g(t) with constant A
    RatMat a(n, std::vector<Rational>(n));
    bool homogeneous_zero = true;
    for (std::size_t mu = 0; mu < n; ++mu)
        for (std::size_t nu = 0; nu < n; ++nu) {
            Expr d = canon(differentiate(gamma[mu], ch.q_name(static_cast<int>(nu))));
            if (!d.is_number())
                throw UnsupportedConnection(
                    "connection is not affine in the coordinates with constant "
                    "coefficients: d(" + print(gamma[mu]) + ")/d" +
                    ch.q_name(static_cast<int>(nu)) + " = " + print(d));
            a[mu][nu] = d.number();
            if (a[mu][nu] != 0) homogeneous_zero = false;
        }
    std::vector<Expr> g(n);
    for (std::size_t mu = 0; mu < n; ++mu) {
        Expr rest = gamma[mu];
        for (std::size_t nu = 0; nu < n; ++nu)
            rest = rest - Expr::num(a[mu][nu]) * ch.q_var(static_cast<int>(nu));
        g[mu] = canon(rest);
    }

    // inhomogeneous part along the flow: g(t + u), as expressions in (u, t)
    Bindings shift;
    shift.set("t", Expr::var("t") + Expr::var("u"));
    std::vector<Expr> gu(n);
    for (std::size_t mu = 0; mu < n; ++mu) gu[mu] = substitute(g[mu], shift);

    Expr s = Expr::var("s");
    std::vector<Expr> phi(n, Expr(0));

    if (homogeneous_zero) {
        for (std::size_t mu = 0; mu < n; ++mu)
            phi[mu] = ch.q_var(static_cast<int>(mu)) + integral_to_s(gu[mu]);
    } else {
        // powers of A up to the first vanishing one (if any)
        std::vector<RatMat> pw{rat_identity(n)};
        std::size_t nil_index = 0;
        for (std::size_t k = 1; k <= n; ++k) {
            pw.push_back(rat_mul(pw.back(), a));
            if (rat_zero(pw.back())) {
                nil_index = k;
                pw.pop_back();
                break;
            }
        }
        if (nil_index > 0) {
            // e^{sA} q plus the iterated integrals of the inhomogeneity
            std::vector<Expr> iter(n);
            for (std::size_t mu = 0; mu < n; ++mu) iter[mu] = integral_to_s(gu[mu]);
            Bindings s_to_u;
            s_to_u.set("s", Expr::var("u"));
            for (std::size_t j = 0; j < nil_index; ++j) {
                Expr sj = Expr::pow(s, static_cast<int>(j)) / Expr::num(factorial(static_cast<int>(j)));
                for (std::size_t mu = 0; mu < n; ++mu)
                    for (std::size_t nu = 0; nu < n; ++nu) {
                        if (pw[j][mu][nu] == 0) continue;
                        Expr w = Expr::num(pw[j][mu][nu]);
                        phi[mu] = phi[mu] + w * sj * ch.q_var(static_cast<int>(nu)) +
                                  w * iter[nu];
                    }
                if (j + 1 < nil_index)
                    for (std::size_t mu = 0; mu < n; ++mu)
                        iter[mu] = integral_to_s(substitute(iter[mu], s_to_u));
            }
        } else if (rat_diagonal(a)) {
            for (std::size_t mu = 0; mu < n; ++mu) {
                const Rational& am = a[mu][mu];
                if (am == 0) {
                    phi[mu] = ch.q_var(static_cast<int>(mu)) + integral_to_s(gu[mu]);
                    continue;
                }
                std::vector<Expr> gk = polynomial_coefficients(gu[mu], "u");
                Expr eas = exp(Expr::num(am) * s);
                phi[mu] = eas * ch.q_var(static_cast<int>(mu));
                // J_k = ∫_0^s e^{a(s-u)} u^k du via J_k = (k J_{k-1} - s^k)/a
                Expr jk = (eas - Expr(1)) / Expr::num(am);
                for (std::size_t k = 0; k < gk.size(); ++k) {
                    if (k > 0)
                        jk = (Expr(static_cast<int>(k)) * jk -
                              Expr::pow(s, static_cast<int>(k))) /
                             Expr::num(am);
                    phi[mu] = phi[mu] + gk[k] * jk;
                }
            }
        } else {
            throw UnsupportedConnection(
                "constant coefficient matrix is neither nilpotent nor diagonal");
        }
    }
    for (Expr& p : phi) p = canon(p);
    return {ch, std::move(phi), FlowProvenance::Auto};
}

namespace {

void add_zero_vector(Report& r, const std::string& name, const std::vector<Expr>& res,
                     const std::vector<std::string>& labels) {
    bool pass = true;
    bool symbolic = true;
    std::string bad;
    for (std::size_t i = 0; i < res.size(); ++i) {
        ZeroCheck z = is_zero_check(res[i]);
        if (!z.zero) {
            pass = false;
            if (!bad.empty()) bad += "; ";
            bad += labels[i] + " = " + print(canon(res[i]));
        } else if (!z.symbolic) {
            symbolic = false;
        }
    }
    r.add(name, pass,
          pass ? (symbolic ? "all components zero" : "all components zero (probed)")
               : bad);
}

std::vector<std::string> component_labels(const Chart& ch) {
    std::vector<std::string> labels;
    for (int mu = 0; mu < ch.n(); ++mu) labels.push_back(ch.q_name(mu));
    return labels;
}

} // namespace

Report flow_validate(const Flow& f, const Connection& c) {
    require_same_chart(f.chart, c.chart(), "flow_validate");
    const Chart& ch = f.chart;
    std::size_t n = static_cast<std::size_t>(ch.n());
    Report r;
    r.title = "flow validity";
    std::vector<std::string> labels = component_labels(ch);

    Bindings at_zero;
    at_zero.set("s", Expr(0));
    std::vector<Expr> identity(n);
    for (std::size_t mu = 0; mu < n; ++mu)
        identity[mu] = substitute(f.phi[mu], at_zero) - ch.q_var(static_cast<int>(mu));
    add_zero_vector(r, "identity at s = 0", identity, labels);

    Bindings onto;
    onto.set("t", Expr::var("t") + Expr::var("s"));
    for (std::size_t mu = 0; mu < n; ++mu)
        onto.set(ch.q_name(static_cast<int>(mu)), f.phi[mu]);
    std::vector<Expr> ode(n);
    for (std::size_t mu = 0; mu < n; ++mu)
        ode[mu] = differentiate(f.phi[mu], "s") - substitute(c.gamma()[mu], onto);
    add_zero_vector(r, "flow equation", ode, labels);

    Expr s1 = Expr::var("s1");
    Expr s2 = Expr::var("s2");
    Bindings first;
    first.set("s", s1);
    Bindings second;
    second.set("s", s2);
    second.set("t", Expr::var("t") + s1);
    for (std::size_t mu = 0; mu < n; ++mu)
        second.set(ch.q_name(static_cast<int>(mu)), substitute(f.phi[mu], first));
    Bindings both;
    both.set("s", s1 + s2);
    std::vector<Expr> group(n);
    for (std::size_t mu = 0; mu < n; ++mu)
        group[mu] = substitute(f.phi[mu], both) - substitute(f.phi[mu], second);
    add_zero_vector(r, "one-parameter group property", group, labels);
    return r;
}

const std::string& QuotientChart::reduced_coord(int i) const {
    int nn = n();
    return i < nn ? qb_names[static_cast<std::size_t>(i)]
                  : vb_names[static_cast<std::size_t>(i - nn)];
}

Expr QuotientChart::compose_forward(const Expr& e) const {
    Bindings b;
    for (int mu = 0; mu < n(); ++mu) {
        b.set(qb_names[static_cast<std::size_t>(mu)], qbar[static_cast<std::size_t>(mu)]);
        b.set(vb_names[static_cast<std::size_t>(mu)], vbar[static_cast<std::size_t>(mu)]);
    }
    return substitute(e, b);
}

QuotientChart quotient_chart(const Flow& f, const Connection& c) {
    require_same_chart(f.chart, c.chart(), "quotient_chart");
    const Chart& ch = f.chart;
    std::size_t n = static_cast<std::size_t>(ch.n());

    QuotientChart qc{ch};
    for (std::size_t mu = 0; mu < n; ++mu) {
        qc.qb_names.push_back(ch.q_name(static_cast<int>(mu)) + "b");
        qc.vb_names.push_back("v" + qc.qb_names.back());
    }

    Bindings at_minus_t;
    at_minus_t.set("s", -ch.t_var());

    ExprMatrix m(n, std::vector<Expr>(n));
    std::vector<Expr> w(n);
    qc.qbar.resize(n);
    qc.vbar.resize(n);
    for (std::size_t mu = 0; mu < n; ++mu) {
        qc.qbar[mu] = canon(substitute(f.phi[mu], at_minus_t));
        // base-time derivative with the flow parameter held fixed
        w[mu] = canon(substitute(differentiate(f.phi[mu], "t"), at_minus_t));
        Expr v = w[mu];
        for (std::size_t nu = 0; nu < n; ++nu) {
            m[mu][nu] = canon(substitute(
                differentiate(f.phi[mu], ch.q_name(static_cast<int>(nu))), at_minus_t));
            v = v + m[mu][nu] * ch.v_var(static_cast<int>(nu));
        }
        qc.vbar[mu] = canon(v);
    }

    // inverse base map: run the flow forward from the t = 0 slice
    Bindings fwd;
    fwd.set("s", ch.t_var());
    fwd.set("t", Expr(0));
    for (std::size_t mu = 0; mu < n; ++mu)
        fwd.set(ch.q_name(static_cast<int>(mu)), Expr::var(qc.qb_names[mu]));
    qc.q_inv.resize(n);
    for (std::size_t mu = 0; mu < n; ++mu)
        qc.q_inv[mu] = canon(substitute(f.phi[mu], fwd));

    // invert the affine velocity relation v̄ = w + M v
    std::vector<Expr> rhs(n);
    for (std::size_t mu = 0; mu < n; ++mu) rhs[mu] = Expr::var(qc.vb_names[mu]) - w[mu];
    std::vector<Expr> sol;
    try {
        sol = solve_linear_gauss(m, rhs);
    } catch (const LinearSolveFailure&) {
        throw NonInvertibleVelocityMap(
            "the coordinate part of the quotient map has a singular Jacobian");
    }
    Bindings back;
    for (std::size_t mu = 0; mu < n; ++mu)
        back.set(ch.q_name(static_cast<int>(mu)), qc.q_inv[mu]);
    qc.v_inv.resize(n);
    for (std::size_t mu = 0; mu < n; ++mu) qc.v_inv[mu] = canon(substitute(sol[mu], back));
    return qc;
}

std::vector<Expr> solve_linear_gauss(ExprMatrix a, std::vector<Expr> b) {
    std::size_t n = a.size();
    for (std::size_t k = 0; k < n; ++k) {
        // pick a pivot, preferring plain numbers to keep the fractions small
        std::size_t pivot = n;
        for (std::size_t r = k; r < n; ++r) {
            Expr e = canon(a[r][k]);
            a[r][k] = e;
            if (e.is_literal_zero()) continue;
            if (pivot == n) pivot = r;
            if (e.is_number()) {
                pivot = r;
                break;
            }
        }
        if (pivot == n)
            throw LinearSolveFailure("matrix is symbolically singular at column " +
                                     std::to_string(k));
        std::swap(a[k], a[pivot]);
        std::swap(b[k], b[pivot]);
        for (std::size_t r = k + 1; r < n; ++r) {
            if (canon(a[r][k]).is_literal_zero()) continue;
            Expr factor = a[r][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j)
                a[r][j] = canon(a[r][j] - factor * a[k][j]);
            b[r] = canon(b[r] - factor * b[k]);
        }
    }
    std::vector<Expr> x(n, Expr(0));
    for (std::size_t i = n; i-- > 0;) {
        Expr acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc = acc - a[i][j] * x[j];
        x[i] = canon(acc / a[i][i]);
    }
    return x;
}

ReducedSystem reduce(const LagrangianSystem& sys, const Connection& c, const Flow& f) {
    require_same_chart(sys.chart(), c.chart(), "reduce");
    if (!is_symmetry(sys, c))
        throw SymmetryRequired("reduction requires an infinitesimal symmetry");
    auto reg = check_regular(sys);
    if (!reg.regular)
        throw SingularHessian("Lagrangian is not regular: det W = " + print(reg.det));

    ReducedSystem red{quotient_chart(f, c)};
    const QuotientChart& qc = red.chart;
    const Chart& ch = sys.chart();
    std::size_t n = static_cast<std::size_t>(ch.n());
    std::size_t d = 2 * n;

    Bindings slice;  // rename the t = 0 slice into the reduced variables
    slice.set("t", Expr(0));
    for (std::size_t mu = 0; mu < n; ++mu) {
        slice.set(ch.q_name(static_cast<int>(mu)), Expr::var(qc.qb_names[mu]));
        slice.set(ch.v_name(static_cast<int>(mu)), Expr::var(qc.vb_names[mu]));
    }
    red.lbar = canon(substitute(sys.lagrangian(), slice));
    red.energy = canon(substitute(energy(sys, c), slice));

    red.theta.assign(d, Expr(0));
    for (std::size_t mu = 0; mu < n; ++mu)
        red.theta[mu] = canon(differentiate(red.lbar, qc.vb_names[mu]));

    red.omega.assign(d, std::vector<Expr>(d, Expr(0)));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            red.omega[i][j] =
                canon(differentiate(red.theta[i], qc.reduced_coord(static_cast<int>(j))) -
                      differentiate(red.theta[j], qc.reduced_coord(static_cast<int>(i))));

    Expr le(0);
    for (std::size_t mu = 0; mu < n; ++mu)
        le = le + Expr::var(qc.vb_names[mu]) * red.theta[mu];
    red.lag_energy = canon(le - red.lbar);
    red.mismatch = canon(red.energy - red.lag_energy);

    // i(X)ω = dℰ, i.e. ωᵀ X = dℰ
    ExprMatrix at(d, std::vector<Expr>(d));
    std::vector<Expr> rhs(d);
    for (std::size_t j = 0; j < d; ++j) {
        rhs[j] = canon(differentiate(red.energy, qc.reduced_coord(static_cast<int>(j))));
        for (std::size_t i = 0; i < d; ++i) at[j][i] = red.omega[i][j];
    }
    try {
        red.field = solve_linear_gauss(std::move(at), std::move(rhs));
    } catch (const LinearSolveFailure&) {
        throw SingularHessian("reduced symplectic form is degenerate");
    }
    return red;
}

Report pullback_check(const LagrangianSystem& sys, const Connection& c,
                      const ReducedSystem& red) {
    require_same_chart(sys.chart(), c.chart(), "pullback_check");
    const QuotientChart& qc = red.chart;
    const Chart& ch = sys.chart();
    std::size_t n = static_cast<std::size_t>(ch.n());
    Report r;
    r.title = "pullback identities";

    SplitForms sf = split_forms(sys, c);
    std::vector<std::string> labels;
    for (int i = 0; i < ch.dim(); ++i) labels.push_back("d" + ch.coord(i));

    auto pull_theta = [&](const std::vector<Expr>& vbar) {
        Bindings fb;
        for (std::size_t mu = 0; mu < n; ++mu) {
            fb.set(qc.qb_names[mu], qc.qbar[mu]);
            fb.set(qc.vb_names[mu], vbar[mu]);
        }
        std::vector<Expr> pulled(static_cast<std::size_t>(ch.dim()), Expr(0));
        for (std::size_t mu = 0; mu < n; ++mu) {
            Expr p = substitute(red.theta[mu], fb);
            pulled[0] = pulled[0] + p * differentiate(qc.qbar[mu], "t");
            for (std::size_t nu = 0; nu < n; ++nu)
                pulled[1 + nu] =
                    pulled[1 + nu] +
                    p * differentiate(qc.qbar[mu], ch.q_name(static_cast<int>(nu)));
        }
        for (std::size_t i = 0; i < pulled.size(); ++i)
            pulled[i] = canon(pulled[i] - sf.theta_v.coeff[i]);
        return pulled;
    };

    add_zero_vector(r, "pullback of the reduced one-form equals the vertical one-form",
                    pull_theta(qc.vbar), labels);

    Expr e = energy(sys, c);
    r.add_zero("pullback of the reduced Hamiltonian equals the connection energy",
               qc.compose_forward(red.energy) - e);
    r.add_zero("pullback of the reduced Lagrangian equals the Lagrangian",
               qc.compose_forward(red.lbar) - sys.lagrangian());

    Expr mm = canon(qc.compose_forward(red.mismatch));
    r.add("Lagrangian-energy mismatch (informational)", true,
          "residual = " + print(mm));

    // total-time-derivative reading of the quotient velocities, for contrast:
    // it is expected to break the one-form identity whenever the flow moves q
    std::vector<Expr> vbar_alt(n);
    for (std::size_t mu = 0; mu < n; ++mu) {
        Expr v = differentiate(qc.qbar[mu], "t");
        for (std::size_t nu = 0; nu < n; ++nu)
            v = v + differentiate(qc.qbar[mu], ch.q_name(static_cast<int>(nu))) *
                        ch.v_var(static_cast<int>(nu));
        vbar_alt[mu] = canon(v);
    }
    std::vector<Expr> alt = pull_theta(vbar_alt);
    std::string alt_detail;
    for (std::size_t i = 0; i < alt.size(); ++i) {
        if (alt[i].is_literal_zero()) continue;
        if (!alt_detail.empty()) alt_detail += "; ";
        alt_detail += labels[i] + " = " + print(alt[i]);
    }
    r.add("total-derivative velocity reading residual (informational)", true,
          alt_detail.empty() ? "all components zero" : alt_detail);
    return r;
}

Report first_integral_check(const ReducedSystem& red) {
    const QuotientChart& qc = red.chart;
    Report r;
    r.title = "reduced energy conservation";
    Expr rate(0);
    for (int i = 0; i < qc.reduced_dim(); ++i)
        rate = rate + red.field[static_cast<std::size_t>(i)] *
                          differentiate(red.energy, qc.reduced_coord(i));
    r.add_zero("derivative of the reduced energy along the reduced field", rate);
    return r;
}

} // namespace lagred
