#include "lagred/geometry.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace lagred {

Chart::Chart(std::vector<std::string> q_names) : q_(std::move(q_names)) {
    if (q_.empty()) throw InputError("chart needs at least one coordinate");
    std::set<std::string> seen{"t"};
    for (const auto& name : q_) {
        if (!seen.insert(name).second)
            throw InputError("duplicate coordinate name '" + name + "'");
        v_.push_back("v" + name);
        if (!seen.insert(v_.back()).second)
            throw InputError("velocity name collision for '" + name + "'");
    }
}

const std::string& Chart::coord(int i) const {
    static const std::string t = "t";
    if (i == 0) return t;
    if (i <= n()) return q_[static_cast<std::size_t>(i - 1)];
    return v_[static_cast<std::size_t>(i - n() - 1)];
}

int Chart::index_of(const std::string& name) const {
    for (int i = 0; i < dim(); ++i)
        if (coord(i) == name) return i;
    throw UnknownVariable("'" + name + "' is not a chart coordinate");
}

bool Chart::has(const std::string& name) const {
    for (int i = 0; i < dim(); ++i)
        if (coord(i) == name) return true;
    return false;
}

Expr chart_differentiate(const Chart& c, const Expr& e, const std::string& var) {
    if (!c.has(var)) throw UnknownVariable("'" + var + "' is not a chart coordinate");
    return differentiate(e, var);
}

void require_same_chart(const Chart& a, const Chart& b, const std::string& where) {
    if (!(a == b)) throw ChartMismatch(where + ": charts differ");
}

LagrangianSystem::LagrangianSystem(Chart chart, Expr lagrangian)
    : chart_(std::move(chart)), L_(std::move(lagrangian)) {
    for (const auto& v : free_variables(L_))
        if (!chart_.has(v))
            throw UnknownVariable("Lagrangian mentions '" + v + "' outside the chart");
    int n = chart_.n();
    hessian_.assign(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
    for (int mu = 0; mu < n; ++mu) {
        Expr d1 = differentiate(L_, chart_.v_name(mu));
        for (int nu = 0; nu < n; ++nu)
            hessian_[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)] =
                canon(differentiate(d1, chart_.v_name(nu)));
    }
}

Connection::Connection(Chart chart, std::vector<Expr> gamma)
    : chart_(std::move(chart)), gamma_(std::move(gamma)) {
    if (static_cast<int>(gamma_.size()) != chart_.n())
        throw InputError("connection needs one component per configuration coordinate");
    for (const auto& g : gamma_)
        for (const auto& v : free_variables(g)) {
            if (!chart_.has(v))
                throw UnknownVariable("connection mentions '" + v + "' outside the chart");
            for (int mu = 0; mu < chart_.n(); ++mu)
                if (v == chart_.v_name(mu))
                    throw InputError("connection component depends on velocity '" + v + "'");
        }
}

VectorField::VectorField(Chart c, std::vector<Expr> co)
    : chart(std::move(c)), coeff(std::move(co)) {
    if (static_cast<int>(coeff.size()) != chart.dim())
        throw InputError("vector field needs 2n+1 coefficients");
}

OneForm::OneForm(Chart c, std::vector<Expr> co) : chart(std::move(c)), coeff(std::move(co)) {
    if (static_cast<int>(coeff.size()) != chart.dim())
        throw InputError("one-form needs 2n+1 coefficients");
}

TwoForm::TwoForm(Chart c, ExprMatrix m) : chart(std::move(c)), a(std::move(m)) {
    std::size_t d = static_cast<std::size_t>(chart.dim());
    if (a.size() != d) throw InputError("two-form needs a (2n+1)x(2n+1) matrix");
    for (const auto& row : a)
        if (row.size() != d) throw InputError("two-form matrix is not square");
}

ExprMatrix hessian(const LagrangianSystem& sys) { return sys.hessian(); }

Expr determinant(const ExprMatrix& m) {
    std::size_t n = m.size();
    if (n == 0) return Expr(1);
    if (n == 1) return m[0][0];
    Expr out(0);
    for (std::size_t j = 0; j < n; ++j) {
        ExprMatrix minor;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<Expr> row;
            for (std::size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(m[r][c]);
            minor.push_back(std::move(row));
        }
        Expr term = m[0][j] * determinant(minor);
        out = (j % 2 == 0) ? out + term : out - term;
    }
    return out;
}

RegularityReport check_regular(const LagrangianSystem& sys, int probes, double tol,
                               std::uint64_t seed) {
    if (probes < 1) throw InputError("check_regular: probes must be >= 1");
    RegularityReport r;
    r.det = canon(determinant(sys.hessian()));
    if (r.det.is_number()) {
        r.symbolic = true;
        r.regular = !r.det.is_literal_zero();
        return r;
    }
    // probe |det W| at random points
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-2.0, 2.0);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::set<std::string> vars = free_variables(r.det);
    std::set<std::string> syms = symbol_names(r.det);
    r.regular = true;
    for (int p = 0; p < probes; ++p) {
        Bindings b;
        for (const auto& v : vars) b.set(v, box(rng));
        for (const auto& s : syms) {
            std::vector<double> cs = {coeff(rng), coeff(rng), coeff(rng), coeff(rng)};
            b.set_symbol(s, [cs](int order, double x) {
                double out = 0.0;
                for (int i = 3; i >= order; --i) {
                    double f = 1.0;
                    for (int j = 0; j < order; ++j) f *= static_cast<double>(i - j);
                    out = out * x + f * cs[static_cast<std::size_t>(i)];
                }
                return out;
            });
        }
        try {
            double d = eval(r.det, b);
            if (std::abs(d) < tol) {
                r.regular = false;
                r.probe_failures.push_back("probe " + std::to_string(p) + ": |det W| = " +
                                           std::to_string(std::abs(d)));
            }
        } catch (const EvaluationDomainError&) {
            // skip ill-posed probe points
        }
    }
    return r;
}

std::pair<OneForm, TwoForm> poincare_cartan_forms(const LagrangianSystem& sys) {
    const Chart& ch = sys.chart();
    int n = ch.n();
    std::vector<Expr> theta(static_cast<std::size_t>(ch.dim()), Expr(0));
    Expr dt_coeff = sys.lagrangian();
    for (int mu = 0; mu < n; ++mu) {
        Expr p = differentiate(sys.lagrangian(), ch.v_name(mu));
        theta[static_cast<std::size_t>(1 + mu)] = canon(p);
        dt_coeff = dt_coeff - ch.v_var(mu) * p;
    }
    theta[0] = canon(dt_coeff);
    OneForm theta_form(ch, std::move(theta));
    TwoForm d_theta = exterior_derivative(theta_form);
    ExprMatrix omega = d_theta.a;
    for (auto& row : omega)
        for (auto& e : row) e = canon(-e);
    return {std::move(theta_form), TwoForm(ch, std::move(omega))};
}

VectorField suspension(const Connection& c) {
    const Chart& ch = c.chart();
    std::vector<Expr> coeff(static_cast<std::size_t>(ch.dim()), Expr(0));
    coeff[0] = Expr(1);
    for (int mu = 0; mu < ch.n(); ++mu)
        coeff[static_cast<std::size_t>(1 + mu)] = c.gamma()[static_cast<std::size_t>(mu)];
    return VectorField(ch, std::move(coeff));
}

VectorField jet_prolongation(const Connection& c) {
    const Chart& ch = c.chart();
    int n = ch.n();
    VectorField out = suspension(c);
    for (int mu = 0; mu < n; ++mu) {
        const Expr& g = c.gamma()[static_cast<std::size_t>(mu)];
        Expr lift = differentiate(g, "t");
        for (int nu = 0; nu < n; ++nu)
            lift = lift + ch.v_var(nu) * differentiate(g, ch.q_name(nu));
        out.coeff[static_cast<std::size_t>(1 + n + mu)] = canon(lift);
    }
    return out;
}

Expr energy(const LagrangianSystem& sys, const Connection& c) {
    require_same_chart(sys.chart(), c.chart(), "energy");
    const Chart& ch = sys.chart();
    Expr e = -sys.lagrangian();
    for (int mu = 0; mu < ch.n(); ++mu) {
        Expr p = differentiate(sys.lagrangian(), ch.v_name(mu));
        e = e + p * (ch.v_var(mu) - c.gamma()[static_cast<std::size_t>(mu)]);
    }
    return canon(e);
}

Expr lie_derivative_fn(const VectorField& x, const Expr& f) {
    for (const auto& v : free_variables(f))
        if (!x.chart.has(v))
            throw ChartMismatch("lie_derivative_fn: '" + v + "' is not a chart coordinate");
    Expr out(0);
    for (int i = 0; i < x.chart.dim(); ++i)
        out = out + x.coeff[static_cast<std::size_t>(i)] *
                        differentiate(f, x.chart.coord(i));
    return canon(out);
}

bool is_symmetry(const LagrangianSystem& sys, const Connection& c, double tol, int trials,
                 std::uint64_t seed) {
    require_same_chart(sys.chart(), c.chart(), "is_symmetry");
    return is_zero(lie_derivative_fn(jet_prolongation(c), sys.lagrangian()), tol, trials,
                   seed);
}

OneForm interior_product(const VectorField& x, const TwoForm& w) {
    require_same_chart(x.chart, w.chart, "interior_product");
    int d = x.chart.dim();
    std::vector<Expr> out(static_cast<std::size_t>(d), Expr(0));
    for (int j = 0; j < d; ++j) {
        Expr s(0);
        for (int i = 0; i < d; ++i)
            s = s + x.coeff[static_cast<std::size_t>(i)] *
                        w.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(j)] = canon(s);
    }
    return OneForm(x.chart, std::move(out));
}

Expr interior_product_1(const VectorField& x, const OneForm& a) {
    require_same_chart(x.chart, a.chart, "interior_product_1");
    Expr s(0);
    for (int i = 0; i < x.chart.dim(); ++i)
        s = s + x.coeff[static_cast<std::size_t>(i)] * a.coeff[static_cast<std::size_t>(i)];
    return canon(s);
}

OneForm differential(const Chart& ch, const Expr& f) {
    std::vector<Expr> out;
    out.reserve(static_cast<std::size_t>(ch.dim()));
    for (int i = 0; i < ch.dim(); ++i) out.push_back(canon(differentiate(f, ch.coord(i))));
    return OneForm(ch, std::move(out));
}

TwoForm exterior_derivative(const OneForm& a) {
    int d = a.chart.dim();
    ExprMatrix m(static_cast<std::size_t>(d), std::vector<Expr>(static_cast<std::size_t>(d), Expr(0)));
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            Expr e = canon(differentiate(a.coeff[static_cast<std::size_t>(j)], a.chart.coord(i)) -
                           differentiate(a.coeff[static_cast<std::size_t>(i)], a.chart.coord(j)));
            m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = e;
            m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = canon(-e);
        }
    return TwoForm(a.chart, std::move(m));
}

TwoForm wedge_dt(const OneForm& a) {
    int d = a.chart.dim();
    ExprMatrix m(static_cast<std::size_t>(d), std::vector<Expr>(static_cast<std::size_t>(d), Expr(0)));
    for (int j = 1; j < d; ++j) {
        m[0][static_cast<std::size_t>(j)] = a.coeff[static_cast<std::size_t>(j)];
        m[static_cast<std::size_t>(j)][0] = canon(-a.coeff[static_cast<std::size_t>(j)]);
    }
    return TwoForm(a.chart, std::move(m));
}

namespace {

// fully antisymmetric coefficient of the exterior derivative of a 2-form
Expr d_two_form_component(const TwoForm& w, int i, int j, int k) {
    auto at = [&](int r, int c) -> const Expr& {
        return w.a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    };
    return differentiate(at(j, k), w.chart.coord(i)) +
           differentiate(at(k, i), w.chart.coord(j)) +
           differentiate(at(i, j), w.chart.coord(k));
}

// i(X) dω for a 2-form ω
TwoForm interior_d(const VectorField& x, const TwoForm& w) {
    int d = w.chart.dim();
    ExprMatrix m(static_cast<std::size_t>(d), std::vector<Expr>(static_cast<std::size_t>(d), Expr(0)));
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
            Expr s(0);
            for (int i = 0; i < d; ++i)
                s = s + x.coeff[static_cast<std::size_t>(i)] * d_two_form_component(w, i, j, k);
            Expr e = canon(s);
            m[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = e;
            m[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = canon(-e);
        }
    return TwoForm(w.chart, std::move(m));
}

} // namespace

OneForm lie_derivative(const VectorField& x, const OneForm& a) {
    require_same_chart(x.chart, a.chart, "lie_derivative");
    // Cartan: L_X a = i(X) da + d(i(X) a)
    OneForm ida = interior_product(x, exterior_derivative(a));
    Expr f = interior_product_1(x, a);
    int d = a.chart.dim();
    std::vector<Expr> out(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        out[static_cast<std::size_t>(i)] =
            canon(ida.coeff[static_cast<std::size_t>(i)] + differentiate(f, a.chart.coord(i)));
    return OneForm(a.chart, std::move(out));
}

TwoForm lie_derivative(const VectorField& x, const TwoForm& w) {
    require_same_chart(x.chart, w.chart, "lie_derivative");
    TwoForm idw = interior_d(x, w);
    TwoForm diw = exterior_derivative(interior_product(x, w));
    return idw + diw;
}

std::vector<Expr> closedness_residuals(const TwoForm& w) {
    std::vector<Expr> out;
    int d = w.chart.dim();
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            for (int k = j + 1; k < d; ++k) {
                Expr e = canon(d_two_form_component(w, i, j, k));
                if (!e.is_literal_zero()) out.push_back(e);
            }
    return out;
}

namespace {

std::vector<Expr> zip(const std::vector<Expr>& a, const std::vector<Expr>& b, int sign) {
    std::vector<Expr> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back(sign > 0 ? canon(a[i] + b[i]) : canon(a[i] - b[i]));
    return out;
}

} // namespace

OneForm operator+(const OneForm& a, const OneForm& b) {
    require_same_chart(a.chart, b.chart, "one-form sum");
    return OneForm(a.chart, zip(a.coeff, b.coeff, +1));
}
OneForm operator-(const OneForm& a, const OneForm& b) {
    require_same_chart(a.chart, b.chart, "one-form difference");
    return OneForm(a.chart, zip(a.coeff, b.coeff, -1));
}
VectorField operator+(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart, b.chart, "vector-field sum");
    return VectorField(a.chart, zip(a.coeff, b.coeff, +1));
}
VectorField operator-(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart, b.chart, "vector-field difference");
    return VectorField(a.chart, zip(a.coeff, b.coeff, -1));
}
VectorField operator*(const Expr& f, const VectorField& x) {
    std::vector<Expr> out;
    out.reserve(x.coeff.size());
    for (const auto& c : x.coeff) out.push_back(canon(f * c));
    return VectorField(x.chart, std::move(out));
}

TwoForm operator+(const TwoForm& a, const TwoForm& b) {
    require_same_chart(a.chart, b.chart, "two-form sum");
    ExprMatrix m = a.a;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) m[i][j] = canon(m[i][j] + b.a[i][j]);
    return TwoForm(a.chart, std::move(m));
}
TwoForm operator-(const TwoForm& a, const TwoForm& b) {
    require_same_chart(a.chart, b.chart, "two-form difference");
    ExprMatrix m = a.a;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) m[i][j] = canon(m[i][j] - b.a[i][j]);
    return TwoForm(a.chart, std::move(m));
}

bool canon_zero(const OneForm& a) {
    for (const auto& c : a.coeff)
        if (!canon(c).is_literal_zero()) return false;
    return true;
}
bool canon_zero(const TwoForm& w) {
    for (const auto& row : w.a)
        for (const auto& c : row)
            if (!canon(c).is_literal_zero()) return false;
    return true;
}
bool canon_zero(const VectorField& x) {
    for (const auto& c : x.coeff)
        if (!canon(c).is_literal_zero()) return false;
    return true;
}

} // namespace lagred
