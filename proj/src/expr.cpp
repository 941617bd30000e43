#include "lagred/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <random>
#include <sstream>

namespace lagred {

namespace {

NodePtr make_node(ExprNode&& n) { return std::make_shared<const ExprNode>(std::move(n)); }

} // namespace

Expr from_node(ExprNode&& n) { return Expr(make_node(std::move(n))); }

Expr::Expr() : Expr(Rational(0)) {}
Expr::Expr(int v) : Expr(Rational(v)) {}
Expr::Expr(long long v) : Expr(Rational(v)) {}
Expr::Expr(const Rational& v) {
    ExprNode n;
    n.kind = Kind::Number;
    n.value = v;
    node_ = make_node(std::move(n));
}

Expr Expr::num(const Rational& v) { return Expr(v); }
Expr Expr::num(long long num, long long den) { return Expr(Rational(num) / den); }

Expr Expr::var(const std::string& name) {
    ExprNode n;
    n.kind = Kind::Var;
    n.name = name;
    return Expr(make_node(std::move(n)));
}

Expr Expr::add(std::vector<Expr> terms) {
    if (terms.empty()) return Expr(0);
    if (terms.size() == 1) return terms[0];
    ExprNode n;
    n.kind = Kind::Add;
    n.args = std::move(terms);
    return Expr(make_node(std::move(n)));
}

Expr Expr::mul(std::vector<Expr> factors) {
    if (factors.empty()) return Expr(1);
    if (factors.size() == 1) return factors[0];
    ExprNode n;
    n.kind = Kind::Mul;
    n.args = std::move(factors);
    return Expr(make_node(std::move(n)));
}

Expr Expr::pow(const Expr& base, const Rational& exponent) {
    ExprNode n;
    n.kind = Kind::Pow;
    n.value = exponent;
    n.args = {base};
    return Expr(make_node(std::move(n)));
}

Expr Expr::div(const Expr& num, const Expr& den) {
    ExprNode n;
    n.kind = Kind::Div;
    n.args = {num, den};
    return Expr(make_node(std::move(n)));
}

Expr Expr::fun(FunKind f, const Expr& arg) {
    ExprNode n;
    n.kind = Kind::Fun;
    n.fun = f;
    n.args = {arg};
    return Expr(make_node(std::move(n)));
}

Expr Expr::sym(const std::string& name, const Expr& arg) {
    ExprNode n;
    n.kind = Kind::Sym;
    n.name = name;
    n.args = {arg};
    return Expr(make_node(std::move(n)));
}

Expr Expr::sym_deriv(const std::string& name, int order, const Expr& arg) {
    ExprNode n;
    n.kind = Kind::SymDeriv;
    n.name = name;
    n.order = order;
    n.args = {arg};
    return Expr(make_node(std::move(n)));
}

Kind Expr::kind() const { return node_->kind; }
bool Expr::is_number() const { return node_->kind == Kind::Number; }
bool Expr::is_literal_zero() const { return is_number() && node_->value == 0; }
bool Expr::is_literal_one() const { return is_number() && node_->value == 1; }
const Rational& Expr::number() const { return node_->value; }

Expr operator+(const Expr& a, const Expr& b) { return Expr::add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::add({a, Expr::mul({Expr(-1), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::div(a, b); }
Expr operator-(const Expr& a) { return Expr::mul({Expr(-1), a}); }

Expr sin(const Expr& e) { return Expr::fun(FunKind::Sin, e); }
Expr cos(const Expr& e) { return Expr::fun(FunKind::Cos, e); }
Expr exp(const Expr& e) { return Expr::fun(FunKind::Exp, e); }
Expr log(const Expr& e) { return Expr::fun(FunKind::Log, e); }

bool structurally_equal(const Expr& a, const Expr& b) {
    const ExprNode& x = a.node();
    const ExprNode& y = b.node();
    if (x.kind != y.kind) return false;
    if (x.value != y.value || x.name != y.name || x.order != y.order) return false;
    if (x.kind == Kind::Fun && x.fun != y.fun) return false;
    if (x.args.size() != y.args.size()) return false;
    for (std::size_t i = 0; i < x.args.size(); ++i)
        if (!structurally_equal(x.args[i], y.args[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

Expr differentiate(const Expr& e, const std::string& var) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Number:
            return Expr(0);
        case Kind::Var:
            return Expr(n.name == var ? 1 : 0);
        case Kind::Add: {
            std::vector<Expr> terms;
            terms.reserve(n.args.size());
            for (const auto& a : n.args) terms.push_back(differentiate(a, var));
            return Expr::add(std::move(terms));
        }
        case Kind::Mul: {
            std::vector<Expr> terms;
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                std::vector<Expr> factors;
                factors.push_back(differentiate(n.args[i], var));
                for (std::size_t j = 0; j < n.args.size(); ++j)
                    if (j != i) factors.push_back(n.args[j]);
                terms.push_back(Expr::mul(std::move(factors)));
            }
            return Expr::add(std::move(terms));
        }
        case Kind::Pow: {
            // d(b^p) = p * b^(p-1) * db
            Expr db = differentiate(n.args[0], var);
            return Expr(n.value) * Expr::pow(n.args[0], n.value - 1) * db;
        }
        case Kind::Div: {
            const Expr& a = n.args[0];
            const Expr& b = n.args[1];
            return (differentiate(a, var) * b - a * differentiate(b, var)) /
                   Expr::pow(b, 2);
        }
        case Kind::Fun: {
            Expr darg = differentiate(n.args[0], var);
            switch (n.fun) {
                case FunKind::Sin: return cos(n.args[0]) * darg;
                case FunKind::Cos: return Expr(-1) * sin(n.args[0]) * darg;
                case FunKind::Exp: return exp(n.args[0]) * darg;
                case FunKind::Log: return darg / n.args[0];
            }
            return Expr(0);
        }
        case Kind::Sym:
            return Expr::sym_deriv(n.name, 1, n.args[0]) * differentiate(n.args[0], var);
        case Kind::SymDeriv:
            return Expr::sym_deriv(n.name, n.order + 1, n.args[0]) *
                   differentiate(n.args[0], var);
    }
    return Expr(0);
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

std::string rat_str(const Rational& r) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(r);
    if (boost::multiprecision::denominator(r) != 1)
        os << "/" << boost::multiprecision::denominator(r);
    return os.str();
}

bool is_integer(const Rational& r) { return boost::multiprecision::denominator(r) == 1; }

std::string print_impl(const Expr& e);

// parenthesize when used as a factor / power base
std::string print_atomic(const Expr& e) {
    const ExprNode& n = e.node();
    bool needs = n.kind == Kind::Add || n.kind == Kind::Mul || n.kind == Kind::Div ||
                 n.kind == Kind::Pow ||
                 (n.kind == Kind::Number && (n.value < 0 || !is_integer(n.value)));
    std::string s = print_impl(e);
    return needs ? "(" + s + ")" : s;
}

std::string fun_name(FunKind f) {
    switch (f) {
        case FunKind::Sin: return "sin";
        case FunKind::Cos: return "cos";
        case FunKind::Exp: return "exp";
        case FunKind::Log: return "log";
    }
    return "?";
}

// split a printable term into (negative?, body) for sum printing
std::pair<bool, std::string> signed_term(const Expr& e) {
    const ExprNode& n = e.node();
    if (n.kind == Kind::Number && n.value < 0) return {true, rat_str(-n.value)};
    if (n.kind == Kind::Mul && !n.args.empty() && n.args[0].is_number() &&
        n.args[0].number() < 0) {
        Rational c = -n.args[0].number();
        std::vector<Expr> rest(n.args.begin() + 1, n.args.end());
        Expr body = c == 1 ? Expr::mul(std::move(rest))
                           : Expr::mul([&] {
                                 std::vector<Expr> f{Expr(c)};
                                 f.insert(f.end(), rest.begin(), rest.end());
                                 return f;
                             }());
        return {true, print_impl(body)};
    }
    return {false, print_impl(e)};
}

std::string print_impl(const Expr& e) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Number:
            return rat_str(n.value);
        case Kind::Var:
            return n.name;
        case Kind::Add: {
            std::string out;
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                auto [neg, body] = signed_term(n.args[i]);
                if (i == 0)
                    out = (neg ? "-" : "") + body;
                else
                    out += (neg ? " - " : " + ") + body;
            }
            return out;
        }
        case Kind::Mul: {
            std::string out;
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += "*";
                out += print_atomic(n.args[i]);
            }
            return out;
        }
        case Kind::Pow: {
            std::string ex = is_integer(n.value) && n.value >= 0
                                 ? rat_str(n.value)
                                 : "(" + rat_str(n.value) + ")";
            return print_atomic(n.args[0]) + "^" + ex;
        }
        case Kind::Div:
            return print_atomic(n.args[0]) + "/" + print_atomic(n.args[1]);
        case Kind::Fun:
            return fun_name(n.fun) + "(" + print_impl(n.args[0]) + ")";
        case Kind::Sym:
            return n.name + "(" + print_impl(n.args[0]) + ")";
        case Kind::SymDeriv:
            return n.name + std::string(static_cast<std::size_t>(n.order), '\'') + "(" +
                   print_impl(n.args[0]) + ")";
    }
    return "?";
}

} // namespace

std::string print(const Expr& e) { return print_impl(e); }

// ---------------------------------------------------------------------------
// Canonical form: expanded polynomial over opaque atoms
// ---------------------------------------------------------------------------

namespace {

// monomial: sorted (atom key, nonzero integer exponent)
using Monomial = std::vector<std::pair<std::string, int>>;

struct Poly {
    std::map<Monomial, Rational> terms;
};

struct CanonCtx {
    std::map<std::string, Expr> atoms;  // key -> atom expression

    std::string intern(const Expr& atom) {
        std::string key = print(atom);
        atoms.emplace(key, atom);
        return key;
    }
};

Poly poly_const(const Rational& c) {
    Poly p;
    if (c != 0) p.terms[{}] = c;
    return p;
}

Poly poly_atom(const std::string& key, int exponent, const Rational& coeff = 1) {
    Poly p;
    if (coeff != 0) p.terms[{{key, exponent}}] = coeff;
    return p;
}

void poly_add_inplace(Poly& a, const Poly& b) {
    for (const auto& [m, c] : b.terms) {
        auto it = a.terms.find(m);
        if (it == a.terms.end()) {
            a.terms.emplace(m, c);
        } else {
            it->second += c;
            if (it->second == 0) a.terms.erase(it);
        }
    }
}

Monomial monomial_mul(const Monomial& a, const Monomial& b) {
    Monomial out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.push_back(b[j++]);
        } else {
            int ex = a[i].second + b[j].second;
            if (ex != 0) out.emplace_back(a[i].first, ex);
            ++i;
            ++j;
        }
    }
    return out;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, ca] : a.terms)
        for (const auto& [mb, cb] : b.terms) {
            Monomial m = monomial_mul(ma, mb);
            Rational c = ca * cb;
            auto it = out.terms.find(m);
            if (it == out.terms.end()) {
                out.terms.emplace(std::move(m), c);
            } else {
                it->second += c;
                if (it->second == 0) out.terms.erase(it);
            }
        }
    return out;
}

Poly poly_pow_uint(const Poly& base, unsigned k) {
    Poly out = poly_const(1);
    Poly acc = base;
    while (k) {
        if (k & 1u) out = poly_mul(out, acc);
        k >>= 1u;
        if (k) acc = poly_mul(acc, acc);
    }
    return out;
}

// canonical value: expanded polynomial numerator over expanded polynomial
// denominator; a literal-zero denominator is rejected at construction
struct Frac {
    Poly num;
    Poly den;  // never the zero polynomial
};

bool poly_is_one(const Poly& p) {
    return p.terms.size() == 1 && p.terms.begin()->first.empty() &&
           p.terms.begin()->second == 1;
}

// strip factors common to every term of num and den (monomial gcd + scaling so
// the denominator's leading coefficient is 1)
void frac_normalize(Frac& f) {
    if (f.num.terms.empty()) {
        f.den = poly_const(1);
        return;
    }
    std::map<std::string, int> common;
    bool first = true;
    auto visit = [&](const Poly& p) {
        for (const auto& [m, c] : p.terms) {
            (void)c;
            if (first) {
                for (const auto& [k, ex] : m) common[k] = ex;
                first = false;
                continue;
            }
            for (auto it = common.begin(); it != common.end();) {
                int ex = 0;
                for (const auto& [k, e2] : m)
                    if (k == it->first) ex = e2;
                it->second = std::min(it->second, ex);
                if (it->second == 0)
                    it = common.erase(it);
                else
                    ++it;
            }
        }
    };
    visit(f.num);
    visit(f.den);
    if (!common.empty()) {
        Monomial divisor;
        for (const auto& [k, ex] : common) divisor.emplace_back(k, -ex);
        auto divide = [&](Poly& p) {
            Poly out;
            for (const auto& [m, c] : p.terms) out.terms[monomial_mul(m, divisor)] = c;
            p = std::move(out);
        };
        divide(f.num);
        divide(f.den);
    }
    Rational lead = f.den.terms.begin()->second;
    if (lead != 1) {
        for (auto& [m, c] : f.num.terms) c /= lead;
        for (auto& [m, c] : f.den.terms) c /= lead;
    }
}

Frac frac_const(const Rational& c) { return {poly_const(c), poly_const(1)}; }

Frac frac_atom(const std::string& key) { return {poly_atom(key, 1), poly_const(1)}; }

bool poly_equal(const Poly& a, const Poly& b) { return a.terms == b.terms; }

Frac frac_add(const Frac& a, const Frac& b) {
    if (poly_equal(a.den, b.den)) {
        Poly n = a.num;
        poly_add_inplace(n, b.num);
        return {std::move(n), a.den};
    }
    Poly n = poly_mul(a.num, b.den);
    poly_add_inplace(n, poly_mul(b.num, a.den));
    return {std::move(n), poly_mul(a.den, b.den)};
}

Frac frac_mul(const Frac& a, const Frac& b) {
    return {poly_mul(a.num, b.num), poly_mul(a.den, b.den)};
}

Frac frac_div(const Frac& a, const Frac& b) {
    if (b.num.terms.empty()) throw Error("canon: division by zero");
    return {poly_mul(a.num, b.den), poly_mul(a.den, b.num)};
}

Expr rebuild(const Frac& f, const CanonCtx& ctx);

Expr rebuild_term(const Monomial& m, const Rational& c, const CanonCtx& ctx) {
    std::vector<Expr> factors;
    if (c != 1 || m.empty()) factors.push_back(Expr(c));
    for (const auto& [key, ex] : m) {
        const Expr& atom = ctx.atoms.at(key);
        factors.push_back(ex == 1 ? atom : Expr::pow(atom, ex));
    }
    return Expr::mul(std::move(factors));
}

Expr rebuild_poly(const Poly& p, const CanonCtx& ctx) {
    if (p.terms.empty()) return Expr(0);
    std::vector<Expr> terms;
    terms.reserve(p.terms.size());
    for (const auto& [m, c] : p.terms) terms.push_back(rebuild_term(m, c, ctx));
    return Expr::add(std::move(terms));
}

Expr rebuild(const Frac& f, const CanonCtx& ctx) {
    if (f.num.terms.empty()) return Expr(0);
    if (poly_is_one(f.den)) return rebuild_poly(f.num, ctx);
    return Expr::div(rebuild_poly(f.num, ctx), rebuild_poly(f.den, ctx));
}

Frac canon_impl(const Expr& e, CanonCtx& ctx);

Frac frac_pow(const Frac& base, const Rational& exponent, CanonCtx& ctx) {
    if (exponent == 0) return frac_const(1);
    if (base.num.terms.empty()) {
        if (exponent < 0) throw Error("canon: zero raised to a negative power");
        return {Poly{}, poly_const(1)};
    }
    const long long kExpandLimit = 64;  // guard against accidental blowup
    if (is_integer(exponent)) {
        long long p = exponent.convert_to<long long>();
        long long mag = p < 0 ? -p : p;
        if (mag <= kExpandLimit) {
            Frac out{poly_pow_uint(base.num, static_cast<unsigned>(mag)),
                     poly_pow_uint(base.den, static_cast<unsigned>(mag))};
            if (p < 0) std::swap(out.num, out.den);
            return out;
        }
    }
    // non-integer (or huge) exponent: opaque atom
    Frac b = base;
    frac_normalize(b);
    Expr be = rebuild(b, ctx);
    if (be.is_literal_one()) return frac_const(1);
    return frac_atom(ctx.intern(Expr::pow(be, exponent)));
}

// canonicalize a function/symbol argument into a plain expression
Expr canon_arg(const Expr& e, CanonCtx& ctx) {
    Frac f = canon_impl(e, ctx);
    frac_normalize(f);
    return rebuild(f, ctx);
}

Frac canon_impl(const Expr& e, CanonCtx& ctx) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Number:
            return frac_const(n.value);
        case Kind::Var:
            return frac_atom(ctx.intern(e));
        case Kind::Add: {
            Frac out{Poly{}, poly_const(1)};
            for (const auto& a : n.args) out = frac_add(out, canon_impl(a, ctx));
            return out;
        }
        case Kind::Mul: {
            Frac out = frac_const(1);
            for (const auto& a : n.args) {
                out = frac_mul(out, canon_impl(a, ctx));
                if (out.num.terms.empty()) return {Poly{}, poly_const(1)};
            }
            return out;
        }
        case Kind::Pow:
            return frac_pow(canon_impl(n.args[0], ctx), n.value, ctx);
        case Kind::Div:
            return frac_div(canon_impl(n.args[0], ctx), canon_impl(n.args[1], ctx));
        case Kind::Fun: {
            Expr a = canon_arg(n.args[0], ctx);
            if (a.is_literal_zero()) {
                switch (n.fun) {
                    case FunKind::Sin: return {Poly{}, poly_const(1)};
                    case FunKind::Cos: return frac_const(1);
                    case FunKind::Exp: return frac_const(1);
                    case FunKind::Log: throw Error("canon: log(0)");
                }
            }
            if (a.is_literal_one() && n.fun == FunKind::Log)
                return {Poly{}, poly_const(1)};
            return frac_atom(ctx.intern(Expr::fun(n.fun, a)));
        }
        case Kind::Sym:
            return frac_atom(ctx.intern(Expr::sym(n.name, canon_arg(n.args[0], ctx))));
        case Kind::SymDeriv:
            return frac_atom(
                ctx.intern(Expr::sym_deriv(n.name, n.order, canon_arg(n.args[0], ctx))));
    }
    return {Poly{}, poly_const(1)};
}

} // namespace

Expr canon(const Expr& e) {
    CanonCtx ctx;
    Frac f = canon_impl(e, ctx);
    frac_normalize(f);
    return rebuild(f, ctx);
}

bool canon_equal(const Expr& a, const Expr& b) { return canon(a - b).is_literal_zero(); }

// ---------------------------------------------------------------------------
// Variables, substitution, evaluation
// ---------------------------------------------------------------------------

namespace {

void collect(const Expr& e, std::set<std::string>& vars, std::set<std::string>& syms) {
    const ExprNode& n = e.node();
    if (n.kind == Kind::Var) vars.insert(n.name);
    if (n.kind == Kind::Sym || n.kind == Kind::SymDeriv) syms.insert(n.name);
    for (const auto& a : n.args) collect(a, vars, syms);
}

} // namespace

std::set<std::string> free_variables(const Expr& e) {
    std::set<std::string> v, s;
    collect(e, v, s);
    return v;
}

std::set<std::string> symbol_names(const Expr& e) {
    std::set<std::string> v, s;
    collect(e, v, s);
    return s;
}

Expr substitute(const Expr& e, const Bindings& b) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Number:
            return e;
        case Kind::Var: {
            auto it = b.exprs.find(n.name);
            return it != b.exprs.end() ? it->second : e;
        }
        default: {
            std::vector<Expr> args;
            args.reserve(n.args.size());
            bool changed = false;
            for (const auto& a : n.args) {
                args.push_back(substitute(a, b));
                changed = changed || !structurally_equal(args.back(), a);
            }
            if (!changed) return e;
            ExprNode out = n;
            out.args = std::move(args);
            return from_node(std::move(out));
        }
    }
}

double eval(const Expr& e, const Bindings& b) {
    const ExprNode& n = e.node();
    switch (n.kind) {
        case Kind::Number:
            return n.value.convert_to<double>();
        case Kind::Var: {
            if (auto it = b.values.find(n.name); it != b.values.end()) return it->second;
            if (auto it = b.exprs.find(n.name); it != b.exprs.end())
                return eval(it->second, b);
            throw UnboundVariable("unbound variable '" + n.name + "'");
        }
        case Kind::Add: {
            double s = 0;
            for (const auto& a : n.args) s += eval(a, b);
            return s;
        }
        case Kind::Mul: {
            double p = 1;
            for (const auto& a : n.args) p *= eval(a, b);
            return p;
        }
        case Kind::Pow: {
            double base = eval(n.args[0], b);
            if (is_integer(n.value)) {
                long long p = n.value.convert_to<long long>();
                if (p < 0 && std::abs(base) < 1e-12)
                    throw EvaluationDomainError("near-zero base with negative exponent");
                double out = 1;
                double acc = base;
                unsigned long long k = static_cast<unsigned long long>(p < 0 ? -p : p);
                while (k) {
                    if (k & 1ull) out *= acc;
                    k >>= 1ull;
                    if (k) acc *= acc;
                }
                return p < 0 ? 1.0 / out : out;
            }
            if (base < 0)
                throw EvaluationDomainError("negative base with fractional exponent");
            return std::pow(base, n.value.convert_to<double>());
        }
        case Kind::Div: {
            double den = eval(n.args[1], b);
            if (std::abs(den) < 1e-12)
                throw EvaluationDomainError("division by near-zero");
            return eval(n.args[0], b) / den;
        }
        case Kind::Fun: {
            double a = eval(n.args[0], b);
            switch (n.fun) {
                case FunKind::Sin: return std::sin(a);
                case FunKind::Cos: return std::cos(a);
                case FunKind::Exp: return std::exp(a);
                case FunKind::Log:
                    if (a <= 0) throw EvaluationDomainError("log of nonpositive argument");
                    return std::log(a);
            }
            return 0;
        }
        case Kind::Sym:
        case Kind::SymDeriv: {
            auto it = b.symbols.find(n.name);
            if (it == b.symbols.end())
                throw UnboundVariable("unbound symbol '" + n.name + "'");
            return it->second(n.kind == Kind::Sym ? 0 : n.order, eval(n.args[0], b));
        }
    }
    return 0;
}

Expr realize_symbols(const Expr& e, const std::map<std::string, Expr>& defs,
                     const std::string& arg_var) {
    const ExprNode& n = e.node();
    if (n.kind == Kind::Sym || n.kind == Kind::SymDeriv) {
        Expr arg = realize_symbols(n.args[0], defs, arg_var);
        auto it = defs.find(n.name);
        if (it == defs.end()) {
            if (n.kind == Kind::Sym) return Expr::sym(n.name, arg);
            return Expr::sym_deriv(n.name, n.order, arg);
        }
        Expr body = it->second;
        int order = n.kind == Kind::Sym ? 0 : n.order;
        for (int k = 0; k < order; ++k) body = differentiate(body, arg_var);
        Bindings b;
        b.set(arg_var, arg);
        return substitute(body, b);
    }
    if (n.args.empty()) return e;
    ExprNode out = n;
    out.args.clear();
    for (const auto& a : n.args) out.args.push_back(realize_symbols(a, defs, arg_var));
    return from_node(std::move(out));
}

// ---------------------------------------------------------------------------
// Zero test with randomized probing fallback
// ---------------------------------------------------------------------------

ZeroCheck is_zero_check(const Expr& e, double tol, int trials, std::uint64_t seed) {
    if (tol <= 0) throw InputError("is_zero: tol must be positive");
    if (trials < 1) throw InputError("is_zero: trials must be >= 1");
    ZeroCheck out;
    out.seed = seed;
    Expr c = canon(e);
    if (c.is_literal_zero()) {
        out.zero = true;
        out.symbolic = true;
        out.detail = "canonicalizes to 0";
        return out;
    }
    std::set<std::string> vars = free_variables(c);
    std::set<std::string> syms = symbol_names(c);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-2.0, 2.0);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    const int kMaxRedraws = 8;
    for (int trial = 0; trial < trials; ++trial) {
        bool evaluated = false;
        for (int attempt = 0; attempt < kMaxRedraws && !evaluated; ++attempt) {
            Bindings b;
            for (const auto& v : vars) b.set(v, box(rng));
            for (const auto& s : syms) {
                // random cubic realization with exact derivatives
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
                double value = eval(c, b);
                evaluated = true;
                if (std::abs(value) >= tol) {
                    out.zero = false;
                    out.symbolic = false;
                    std::ostringstream os;
                    os << "probe " << trial << " gave " << value;
                    out.detail = os.str();
                    return out;
                }
            } catch (const EvaluationDomainError&) {
                // redraw the probe
            }
        }
        if (!evaluated)
            throw EvaluationDomainError("is_zero: probe redraw limit exhausted");
    }
    out.zero = true;
    out.symbolic = false;
    out.detail = "all probes below tolerance";
    return out;
}

bool is_zero(const Expr& e, double tol, int trials, std::uint64_t seed) {
    return is_zero_check(e, tol, trials, seed).zero;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Parser {
    const std::string& text;
    std::size_t pos{0};

    explicit Parser(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    }

    bool peek(char c) {
        skip_ws();
        return pos < text.size() && text[pos] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", pos);
    }

    Expr parse_expr() {
        Expr out = parse_term();
        for (;;) {
            if (accept('+'))
                out = out + parse_term();
            else if (accept('-'))
                out = out - parse_term();
            else
                return out;
        }
    }

    Expr parse_term() {
        Expr out = parse_unary();
        for (;;) {
            if (accept('*'))
                out = out * parse_unary();
            else if (accept('/'))
                out = out / parse_unary();
            else
                return out;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (accept('^')) {
            std::size_t at = pos;
            Expr ex = parse_unary();
            Expr c = canon(ex);
            if (!c.is_number())
                throw ParseError("exponent must be a rational constant", at);
            return Expr::pow(base, c.number());
        }
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos >= text.size()) throw ParseError("unexpected end of input", pos);
        char c = text[pos];
        if (c == '(') {
            ++pos;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "'", pos);
    }

    Expr parse_number() {
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
            ++pos;
        Rational value;
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            std::size_t frac_start = pos;
            while (pos < text.size() &&
                   std::isdigit(static_cast<unsigned char>(text[pos])))
                ++pos;
            std::string ipart = text.substr(start, frac_start - 1 - start);
            std::string fpart = text.substr(frac_start, pos - frac_start);
            if (ipart.empty() && fpart.empty())
                throw ParseError("malformed number", start);
            Rational base(ipart.empty() ? "0" : ipart);
            Rational frac = 0;
            if (!fpart.empty()) {
                Rational den = 1;
                for (std::size_t i = 0; i < fpart.size(); ++i) den *= 10;
                frac = Rational(fpart) / den;
            }
            value = base + frac;
        } else {
            if (pos == start) throw ParseError("malformed number", start);
            value = Rational(text.substr(start, pos - start));
        }
        // optional exponent suffix: 1e-3
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            std::size_t save = pos;
            ++pos;
            bool neg = false;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
                neg = text[pos] == '-';
                ++pos;
            }
            std::size_t dstart = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
                ++pos;
            if (pos == dstart) {
                pos = save;  // 'e' begins an identifier, not an exponent
            } else {
                int ex = std::stoi(text.substr(dstart, pos - dstart));
                Rational scale = 1;
                for (int i = 0; i < ex; ++i) scale *= 10;
                value = neg ? Rational(value / scale) : Rational(value * scale);
            }
        }
        return Expr(value);
    }

    Expr parse_ident() {
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        std::string name = text.substr(start, pos - start);
        int primes = 0;
        while (pos < text.size() && text[pos] == '\'') {
            ++primes;
            ++pos;
        }
        if (peek('(')) {
            ++pos;
            Expr arg = parse_expr();
            expect(')');
            if (primes > 0) return Expr::sym_deriv(name, primes, arg);
            if (name == "sin") return sin(arg);
            if (name == "cos") return cos(arg);
            if (name == "exp") return exp(arg);
            if (name == "log") return log(arg);
            return Expr::sym(name, arg);
        }
        if (primes > 0)
            throw ParseError("derivative marker requires an argument list", pos);
        return Expr::var(name);
    }
};

} // namespace

Expr parse(const std::string& text) {
    Parser p(text);
    Expr e = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size())
        throw ParseError("trailing characters after expression", p.pos);
    return e;
}

} // namespace lagred
