#include "lagred/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "lagred/dynamics.hpp"

namespace lagred {

CompiledExpr CompiledExpr::compile(const Expr& e, const std::vector<std::string>& names,
                                   const std::map<std::string, Expr>& symbol_defs) {
    Expr realized = symbol_defs.empty() ? e : realize_symbols(e, symbol_defs);
    CompiledExpr out;
    std::map<const ExprNode*, std::int32_t> memo;

    std::function<std::int32_t(const Expr&)> emit = [&](const Expr& x) -> std::int32_t {
        auto found = memo.find(&x.node());
        if (found != memo.end()) return found->second;
        const ExprNode& n = x.node();
        auto push = [&](Instr i) {
            out.code_.push_back(i);
            return static_cast<std::int32_t>(out.code_.size() - 1);
        };
        std::int32_t slot = 0;
        switch (n.kind) {
            case Kind::Number:
                slot = push({Op::Const, 0, 0, n.value.convert_to<double>()});
                break;
            case Kind::Var: {
                auto it = std::find(names.begin(), names.end(), n.name);
                if (it == names.end())
                    throw UnboundVariable("variable '" + n.name +
                                          "' is not part of the state");
                slot = push({Op::Load,
                             static_cast<std::int32_t>(it - names.begin()), 0, 0});
                break;
            }
            case Kind::Add:
            case Kind::Mul: {
                Op op = n.kind == Kind::Add ? Op::Add : Op::Mul;
                slot = emit(n.args[0]);
                for (std::size_t i = 1; i < n.args.size(); ++i)
                    slot = push({op, slot, emit(n.args[i]), 0});
                break;
            }
            case Kind::Div:
                slot = push({Op::Div, emit(n.args[0]), emit(n.args[1]), 0});
                break;
            case Kind::Pow: {
                std::int32_t base = emit(n.args[0]);
                if (denominator(n.value) == 1 &&
                    abs(numerator(n.value)) <= 1000000) {
                    slot = push({Op::PowInt, base,
                                 static_cast<std::int32_t>(
                                     n.value.convert_to<long long>()),
                                 0});
                } else {
                    slot = push({Op::PowReal, base, 0, n.value.convert_to<double>()});
                }
                break;
            }
            case Kind::Fun: {
                std::int32_t arg = emit(n.args[0]);
                Op op = Op::Sin;
                switch (n.fun) {
                    case FunKind::Sin: op = Op::Sin; break;
                    case FunKind::Cos: op = Op::Cos; break;
                    case FunKind::Exp: op = Op::Exp; break;
                    case FunKind::Log: op = Op::Log; break;
                }
                slot = push({op, arg, 0, 0});
                break;
            }
            case Kind::Sym:
            case Kind::SymDeriv:
                throw InputError("symbol '" + n.name +
                                 "' has no numeric realization; cannot compile");
        }
        memo.emplace(&x.node(), slot);
        return slot;
    };
    emit(realized);
    out.scratch_.resize(out.code_.size());
    return out;
}

double CompiledExpr::eval(const std::vector<double>& state) const {
    std::vector<double>& r = scratch_;
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        switch (in.op) {
            case Op::Const: r[i] = in.value; break;
            case Op::Load: r[i] = state[static_cast<std::size_t>(in.a)]; break;
            case Op::Add: r[i] = r[in.a] + r[in.b]; break;
            case Op::Mul: r[i] = r[in.a] * r[in.b]; break;
            case Op::Div:
                if (std::abs(r[in.b]) < 1e-300)
                    throw EvaluationDomainError("division by zero");
                r[i] = r[in.a] / r[in.b];
                break;
            case Op::PowInt: {
                double base = r[in.a];
                long long k = in.b;
                bool invert = k < 0;
                if (invert) {
                    if (std::abs(base) < 1e-300)
                        throw EvaluationDomainError("division by zero in power");
                    k = -k;
                }
                double acc = 1;
                double sq = base;
                while (k > 0) {
                    if (k & 1) acc *= sq;
                    sq *= sq;
                    k >>= 1;
                }
                r[i] = invert ? 1.0 / acc : acc;
                break;
            }
            case Op::PowReal:
                r[i] = std::pow(r[in.a], in.value);
                if (!std::isfinite(r[i]))
                    throw EvaluationDomainError("fractional power out of domain");
                break;
            case Op::Sin: r[i] = std::sin(r[in.a]); break;
            case Op::Cos: r[i] = std::cos(r[in.a]); break;
            case Op::Exp: r[i] = std::exp(r[in.a]); break;
            case Op::Log:
                if (r[in.a] <= 0)
                    throw EvaluationDomainError("log of a non-positive value");
                r[i] = std::log(r[in.a]);
                break;
        }
    }
    return code_.empty() ? 0.0 : r.back();
}

CompiledField::CompiledField(const std::vector<Expr>& components,
                             std::vector<std::string> names,
                             const std::map<std::string, Expr>& symbol_defs)
    : names_(std::move(names)) {
    comps_.reserve(components.size());
    for (const Expr& c : components)
        comps_.push_back(CompiledExpr::compile(c, names_, symbol_defs));
}

void CompiledField::operator()(const std::vector<double>& y,
                               std::vector<double>& dy) const {
    dy.resize(comps_.size());
    for (std::size_t i = 0; i < comps_.size(); ++i) {
        dy[i] = comps_[i].eval(y);
        if (!std::isfinite(dy[i]))
            throw EvaluationDomainError("non-finite right-hand side value");
    }
}

std::vector<double> Trajectory::sample(double t) const {
    if (times.empty()) throw InputError("cannot sample an empty trajectory");
    bool ascending = times.back() >= times.front();
    std::size_t hi = 1;
    while (hi + 1 < times.size() &&
           (ascending ? times[hi] < t : times[hi] > t))
        ++hi;
    std::size_t lo = hi - 1;
    double h = times[hi] - times[lo];
    if (h == 0) return states[lo];
    double u = std::clamp((t - times[lo]) / h, 0.0, 1.0);
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    double h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u);
    double h11 = u * u * (u - 1);
    std::vector<double> out(states[lo].size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = h00 * states[lo][i] + h * h10 * derivs[lo][i] +
                 h01 * states[hi][i] + h * h11 * derivs[hi][i];
    return out;
}

namespace {

using StateHook = std::function<void(double, const std::vector<double>&)>;

double error_norm(const std::vector<double>& err, const std::vector<double>& y0,
                  const std::vector<double>& y1, double abs_tol, double rel_tol) {
    double acc = 0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        double scale = abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        double q = err[i] / scale;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

void rk4_step(const CompiledField& f, const std::vector<double>& y, double h,
              const std::vector<double>& k1, std::vector<double>& out) {
    std::size_t n = y.size();
    std::vector<double> tmp(n), k2(n), k3(n), k4(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    f(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    f(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    f(tmp, k4);
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

// Dormand-Prince 5(4) tableau
constexpr double A[6][6] = {
    {1.0 / 5, 0, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double B4[7] = {5179.0 / 57600, 0,      7571.0 / 16695, 393.0 / 640,
                          -92097.0 / 339200,      187.0 / 2100,   1.0 / 40};

Trajectory run_integration(const CompiledField& f, std::vector<double> ic,
                           std::pair<double, double> span, const IntegratorConfig& cfg,
                           std::map<std::string, std::string> metadata,
                           const StateHook& on_accept) {
    if (cfg.step <= 0 || cfg.abs_tol <= 0 || cfg.rel_tol <= 0 || cfg.max_steps == 0)
        throw InputError("integrator configuration values must be positive");
    std::size_t n = f.dim();
    if (ic.size() != n)
        throw InputError("initial condition has dimension " +
                         std::to_string(ic.size()) + ", expected " + std::to_string(n));

    Trajectory tr;
    tr.names = f.names();
    tr.metadata = std::move(metadata);

    double t = span.first;
    double t_end = span.second;
    double dir = t_end >= t ? 1.0 : -1.0;
    std::vector<double> y = std::move(ic);
    std::vector<double> k1(n);
    f(y, k1);
    if (on_accept) on_accept(t, y);
    tr.times.push_back(t);
    tr.states.push_back(y);
    tr.derivs.push_back(k1);
    if (t == t_end) return tr;

    auto record = [&](double tn, const std::vector<double>& yn,
                      const std::vector<double>& kn) {
        if (on_accept) on_accept(tn, yn);
        tr.times.push_back(tn);
        tr.states.push_back(yn);
        tr.derivs.push_back(kn);
    };

    if (cfg.method == Method::RK4) {
        double total = std::abs(t_end - t);
        std::size_t steps =
            static_cast<std::size_t>(std::ceil(total / cfg.step - 1e-12));
        if (steps == 0) steps = 1;
        if (steps > cfg.max_steps)
            throw StepLimitExceeded("fixed-step run needs " + std::to_string(steps) +
                                    " steps, limit is " + std::to_string(cfg.max_steps));
        double h = (t_end - t) / static_cast<double>(steps);
        std::vector<double> yn;
        for (std::size_t i = 0; i < steps; ++i) {
            rk4_step(f, y, h, k1, yn);
            t = span.first + (t_end - span.first) *
                                 (static_cast<double>(i + 1) / static_cast<double>(steps));
            y = yn;
            f(y, k1);
            record(t, y, k1);
        }
        return tr;
    }

    // adaptive Dormand-Prince 5(4) with FSAL
    double h = dir * std::min(std::abs(t_end - t) / 100.0, 0.1);
    std::size_t taken = 0;
    std::vector<double> k[7];
    for (auto& ki : k) ki.resize(n);
    k[0] = k1;
    std::vector<double> tmp(n), y5(n), err(n);
    while (dir * (t_end - t) > 0) {
        if (taken++ >= cfg.max_steps)
            throw StepLimitExceeded("exceeded " + std::to_string(cfg.max_steps) +
                                    " steps at parameter " + std::to_string(t));
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
            throw StepLimitExceeded("step size underflow at parameter " +
                                    std::to_string(t));
        if (dir * (t + h - t_end) > 0) h = t_end - t;
        for (int stage = 1; stage <= 6; ++stage) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0;
                for (int j = 0; j < stage; ++j) acc += A[stage - 1][j] * k[j][i];
                tmp[i] = y[i] + h * acc;
            }
            f(tmp, k[stage]);
        }
        y5 = tmp;  // stage 6 uses the 5th-order weights, so tmp is the candidate
        // embedded 4th-order difference
        for (std::size_t i = 0; i < n; ++i) {
            double b5 = A[5][0] * k[0][i] + A[5][2] * k[2][i] + A[5][3] * k[3][i] +
                        A[5][4] * k[4][i] + A[5][5] * k[5][i];
            double b4 = B4[0] * k[0][i] + B4[2] * k[2][i] + B4[3] * k[3][i] +
                        B4[4] * k[4][i] + B4[5] * k[5][i] + B4[6] * k[6][i];
            err[i] = h * (b5 - b4);
        }
        double norm = error_norm(err, y, y5, cfg.abs_tol, cfg.rel_tol);
        if (norm <= 1.0) {
            t = dir * (t + h - t_end) >= 0 ? t_end : t + h;
            y = y5;
            k[0] = k[6];  // FSAL
            record(t, y, k[0]);
        }
        double factor = norm <= 0 ? 5.0 : 0.9 * std::pow(norm, -0.2);
        h *= std::clamp(factor, 0.2, 5.0);
    }
    return tr;
}

} // namespace

Trajectory integrate_field(const CompiledField& f, std::vector<double> ic,
                           std::pair<double, double> span, const IntegratorConfig& cfg,
                           std::map<std::string, std::string> metadata) {
    return run_integration(f, std::move(ic), span, cfg, std::move(metadata), {});
}

namespace {

// numeric condition estimate (infinity norm) via Gauss-Jordan inversion
double condition_estimate(std::vector<std::vector<double>> m) {
    std::size_t n = m.size();
    double norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(m[i][j]);
        norm = std::max(norm, row);
    }
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (m[pivot][col] == 0) return std::numeric_limits<double>::infinity();
        std::swap(m[col], m[pivot]);
        std::swap(inv[col], inv[pivot]);
        double d = m[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = m[r][col];
            if (f == 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m[r][j] -= f * m[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    double inv_norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(inv[i][j]);
        inv_norm = std::max(inv_norm, row);
    }
    return norm * inv_norm;
}

} // namespace

Trajectory integrate_full(const LagrangianSystem& sys, const Connection& c,
                          const std::vector<double>& ic, std::pair<double, double> span,
                          const IntegratorConfig& cfg,
                          const std::map<std::string, Expr>& symbol_defs) {
    const Chart& ch = sys.chart();
    std::vector<std::string> names;
    for (int i = 0; i < ch.dim(); ++i) names.push_back(ch.coord(i));
    CompiledField f(sode(sys).coeff, names, symbol_defs);

    std::size_t n = static_cast<std::size_t>(ch.n());
    std::vector<CompiledExpr> hess;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            hess.push_back(
                CompiledExpr::compile(sys.hessian()[i][j], names, symbol_defs));
    constexpr double cond_limit = 1e12;
    StateHook monitor = [&](double t, const std::vector<double>& y) {
        std::vector<std::vector<double>> w(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) w[i][j] = hess[i * n + j].eval(y);
        double cond = condition_estimate(std::move(w));
        if (!(cond < cond_limit))
            throw IllConditionedHessian(
                "velocity Hessian condition estimate " + std::to_string(cond) +
                " at parameter " + std::to_string(t));
    };

    std::map<std::string, std::string> meta{
        {"system", "full"},
        {"method", cfg.method == Method::RK4 ? "rk4" : "dopri54"},
    };
    (void)c;
    return run_integration(f, ic, span, cfg, std::move(meta), monitor);
}

Trajectory integrate_reduced(const ReducedSystem& red, const std::vector<double>& ic,
                             std::pair<double, double> span, const IntegratorConfig& cfg,
                             const std::map<std::string, Expr>& symbol_defs) {
    const QuotientChart& qc = red.chart;
    std::vector<std::string> names;
    for (int i = 0; i < qc.reduced_dim(); ++i) names.push_back(qc.reduced_coord(i));
    CompiledField f(red.field, names, symbol_defs);
    std::map<std::string, std::string> meta{
        {"system", "reduced"},
        {"method", cfg.method == Method::RK4 ? "rk4" : "dopri54"},
    };
    return run_integration(f, ic, span, cfg, std::move(meta), {});
}

Report compare_projection(const Trajectory& full, const QuotientChart& chart,
                          const Trajectory& reduced, double tol,
                          const std::map<std::string, Expr>& symbol_defs) {
    Report r;
    r.title = "projection commutes with time evolution";
    if (full.times.empty() || reduced.times.empty())
        throw SpanMismatch("cannot compare empty trajectories");
    if (std::abs(full.times.front() - reduced.times.front()) > 1e-9 ||
        std::abs(full.times.back() - reduced.times.back()) > 1e-9)
        throw SpanMismatch("trajectory spans differ");

    std::size_t n = static_cast<std::size_t>(chart.n());
    std::vector<CompiledExpr> proj;
    for (std::size_t mu = 0; mu < n; ++mu)
        proj.push_back(CompiledExpr::compile(chart.qbar[mu], full.names, symbol_defs));
    for (std::size_t mu = 0; mu < n; ++mu)
        proj.push_back(CompiledExpr::compile(chart.vbar[mu], full.names, symbol_defs));

    double worst = 0;
    double worst_t = full.times.front();
    for (std::size_t i = 0; i < reduced.size(); ++i) {
        std::vector<double> y = full.sample(reduced.times[i]);
        for (std::size_t j = 0; j < proj.size(); ++j) {
            double dev = std::abs(proj[j].eval(y) - reduced.states[i][j]);
            if (dev > worst) {
                worst = dev;
                worst_t = reduced.times[i];
            }
        }
    }
    std::ostringstream detail;
    detail << "max deviation " << std::setprecision(3) << worst << " at parameter "
           << worst_t << " (tolerance " << tol << ")";
    r.add("projected full trajectory matches the reduced one", worst < tol,
          detail.str());
    return r;
}

std::vector<double> evaluate_along(const Expr& e, const Trajectory& tr,
                                   const std::map<std::string, Expr>& symbol_defs) {
    CompiledExpr c = CompiledExpr::compile(e, tr.names, symbol_defs);
    std::vector<double> out;
    out.reserve(tr.size());
    for (const auto& y : tr.states) out.push_back(c.eval(y));
    return out;
}

void write_csv(const Trajectory& tr, std::ostream& os) {
    for (const auto& [key, value] : tr.metadata)
        os << "# " << key << " = " << value << "\n";
    os << "param";
    for (const auto& name : tr.names) os << "," << name;
    os << "\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << tr.times[i];
        for (double x : tr.states[i]) os << "," << x;
        os << "\n";
    }
}

} // namespace lagred
