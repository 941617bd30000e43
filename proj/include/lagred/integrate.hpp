#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lagred/reduction.hpp"

namespace lagred {

/// Expression compiled to a flat evaluation tape over a fixed state layout.
/// Uninterpreted symbols must be realized at compile time.
class CompiledExpr {
public:
    static CompiledExpr compile(const Expr& e, const std::vector<std::string>& names,
                                const std::map<std::string, Expr>& symbol_defs = {});

    double eval(const std::vector<double>& state) const;

private:
    enum class Op : std::uint8_t {
        Const,
        Load,
        Add,
        Mul,
        Div,
        PowInt,
        PowReal,
        Sin,
        Cos,
        Exp,
        Log,
    };
    struct Instr {
        Op op;
        std::int32_t a{0};
        std::int32_t b{0};
        double value{0};
    };
    std::vector<Instr> code_;
    mutable std::vector<double> scratch_;
};

/// A tuple of compiled expressions evaluated as an ODE right-hand side.
class CompiledField {
public:
    CompiledField(const std::vector<Expr>& components, std::vector<std::string> names,
                  const std::map<std::string, Expr>& symbol_defs = {});

    std::size_t dim() const { return comps_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    void operator()(const std::vector<double>& y, std::vector<double>& dy) const;

private:
    std::vector<CompiledExpr> comps_;
    std::vector<std::string> names_;
};

enum class Method { RK4, DOPRI54 };

struct IntegratorConfig {
    Method method{Method::DOPRI54};
    double step{1e-2};      // fixed-step size (RK4)
    double abs_tol{1e-10};  // adaptive tolerances (DOPRI54)
    double rel_tol{1e-10};
    std::size_t max_steps{1000000};
};

struct Trajectory {
    std::vector<std::string> names;           // state layout
    std::vector<double> times;                // integration parameter, monotone
    std::vector<std::vector<double>> states;  // accepted samples
    std::vector<std::vector<double>> derivs;  // right-hand sides at the samples
    std::map<std::string, std::string> metadata;

    std::size_t size() const { return times.size(); }
    /// cubic Hermite interpolation between accepted samples
    std::vector<double> sample(double t) const;
};

Trajectory integrate_field(const CompiledField& f, std::vector<double> ic,
                           std::pair<double, double> span, const IntegratorConfig& cfg,
                           std::map<std::string, std::string> metadata = {});

/// Integrate the dynamical field of the system; the state is (t, q, v) in chart
/// order and t advances at unit rate. The velocity Hessian is monitored for
/// conditioning along the way.
Trajectory integrate_full(const LagrangianSystem& sys, const Connection& c,
                          const std::vector<double>& ic, std::pair<double, double> span,
                          const IntegratorConfig& cfg,
                          const std::map<std::string, Expr>& symbol_defs = {});

Trajectory integrate_reduced(const ReducedSystem& red, const std::vector<double>& ic,
                             std::pair<double, double> span, const IntegratorConfig& cfg,
                             const std::map<std::string, Expr>& symbol_defs = {});

/// Projects every reduced-trajectory sample time through the quotient chart
/// applied to the interpolated full trajectory and reports the worst deviation.
Report compare_projection(const Trajectory& full, const QuotientChart& chart,
                          const Trajectory& reduced, double tol = 1e-6,
                          const std::map<std::string, Expr>& symbol_defs = {});

/// evaluate a scalar expression at every sample of a trajectory
std::vector<double> evaluate_along(const Expr& e, const Trajectory& tr,
                                   const std::map<std::string, Expr>& symbol_defs = {});

void write_csv(const Trajectory& tr, std::ostream& os);

} // namespace lagred
