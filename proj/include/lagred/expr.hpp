#pragma once
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lagred/errors.hpp"

namespace lagred {

using Rational = boost::multiprecision::cpp_rational;

enum class Kind {
    Number,    // rational constant
    Var,       // named variable
    Add,       // n-ary sum
    Mul,       // n-ary product
    Pow,       // base^exponent, exponent a fixed rational
    Div,       // quotient
    Fun,       // elementary function of one argument
    Sym,       // uninterpreted function symbol applied to one argument
    SymDeriv,  // formal derivative marker of an uninterpreted symbol
};

enum class FunKind { Sin, Cos, Exp, Log };

class Expr;
struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

/// Immutable symbolic expression tree. Value-semantic handle around a shared node.
class Expr {
public:
    Expr();                 // the literal 0
    Expr(int v);            // NOLINT: implicit by design, enables `2*x`
    Expr(long long v);      // NOLINT
    Expr(const Rational& v);

    static Expr num(const Rational& v);
    static Expr num(long long num, long long den);
    static Expr var(const std::string& name);
    static Expr add(std::vector<Expr> terms);
    static Expr mul(std::vector<Expr> factors);
    static Expr pow(const Expr& base, const Rational& exponent);
    static Expr div(const Expr& num, const Expr& den);
    static Expr fun(FunKind f, const Expr& arg);
    static Expr sym(const std::string& name, const Expr& arg);
    static Expr sym_deriv(const std::string& name, int order, const Expr& arg);

    const ExprNode& node() const { return *node_; }
    Kind kind() const;
    bool is_number() const;
    bool is_literal_zero() const;
    bool is_literal_one() const;
    const Rational& number() const;  // requires Number

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);

private:
    explicit Expr(NodePtr n) : node_(std::move(n)) {}
    NodePtr node_;
    friend Expr from_node(ExprNode&& n);
};

struct ExprNode {
    Kind kind{Kind::Number};
    Rational value;      // Number: the constant; Pow: the exponent
    std::string name;    // Var, Sym, SymDeriv
    FunKind fun{};       // Fun
    int order{0};        // SymDeriv
    std::vector<Expr> args;
};

bool structurally_equal(const Expr& a, const Expr& b);

Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr log(const Expr& e);

/// ∂e/∂var. Uninterpreted symbols produce formal-derivative markers via the chain rule.
Expr differentiate(const Expr& e, const std::string& var);

/// Expanded multivariate normal form over atoms (variables, function applications,
/// non-integer powers, inverted sums). Idempotent.
Expr canon(const Expr& e);

/// Free variables / uninterpreted symbol names occurring in e.
std::set<std::string> free_variables(const Expr& e);
std::set<std::string> symbol_names(const Expr& e);

/// Numeric implementation of an uninterpreted symbol: (derivative order, argument) -> value.
using SymbolFn = std::function<double(int, double)>;

struct Bindings {
    std::map<std::string, Expr> exprs;      // variable replacements
    std::map<std::string, double> values;   // numeric variable values
    std::map<std::string, SymbolFn> symbols;

    Bindings& set(const std::string& name, const Expr& e) {
        exprs[name] = e;
        return *this;
    }
    Bindings& set(const std::string& name, double v) {
        values[name] = v;
        return *this;
    }
    Bindings& set_symbol(const std::string& name, SymbolFn f) {
        symbols[name] = std::move(f);
        return *this;
    }
};

/// Capture-free substitution of bound variables by expressions.
Expr substitute(const Expr& e, const Bindings& b);

/// Numeric evaluation; every free variable and symbol must be bound.
double eval(const Expr& e, const Bindings& b);

/// Replace uninterpreted symbols by concrete expressions. `defs` maps a symbol
/// name to its defining expression in the variable `arg_var`; formal-derivative
/// markers become derivatives of the definition.
Expr realize_symbols(const Expr& e, const std::map<std::string, Expr>& defs,
                     const std::string& arg_var = "u");

std::string print(const Expr& e);
Expr parse(const std::string& text);

struct ZeroCheck {
    bool zero{false};
    bool symbolic{false};  // decided by canon; otherwise by probing
    std::uint64_t seed{0};
    std::string detail;
};

/// Zero test: canon first, randomized probing fallback. Probe points are drawn
/// from [-2,2] per variable; uninterpreted symbols are realized as seeded random
/// low-degree polynomials.
ZeroCheck is_zero_check(const Expr& e, double tol = 1e-8, int trials = 32,
                        std::uint64_t seed = 20240915);
bool is_zero(const Expr& e, double tol = 1e-8, int trials = 32,
             std::uint64_t seed = 20240915);

/// canon(a - b) == 0, the workhorse equality test of the suite.
bool canon_equal(const Expr& a, const Expr& b);

} // namespace lagred
