#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "lagred/integrate.hpp"
#include "lagred/problem.hpp"
#include "lagred/reconstruction.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lagred;

namespace {

struct Options {
    std::string file;
    std::string format = "text";
    std::string output;
    double tol = -1;
    int probes = -1;
    long long seed = -1;
    bool no_timestamp = false;
    bool run_full = false;
    bool run_reduced = false;
    bool run_both = false;
    std::string ic_grid;
};

struct Output {
    std::vector<std::string> lines;  // text-mode object dump
    json objects = json::object();
    std::vector<Report> reports;

    bool passed() const {
        for (const auto& r : reports)
            if (!r.passed()) return false;
        return true;
    }
};

std::string timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

int emit(const Options& opt, const std::string& command, const Output& out) {
    bool pass = out.passed();
    if (opt.format == "json") {
        json failures = json::array();
        json checks = json::array();
        for (const auto& r : out.reports) {
            checks.push_back(r.to_json());
            for (const auto& item : r.items)
                if (!item.pass) failures.push_back(r.title + ": " + item.name);
        }
        json doc{{"command", command},
                 {"pass", pass},
                 {"objects", out.objects},
                 {"checks", checks},
                 {"failures", failures}};
        if (!opt.no_timestamp) doc["generated"] = timestamp();
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "command: " << command << "\n";
        if (!opt.no_timestamp) std::cout << "generated: " << timestamp() << "\n";
        for (const auto& line : out.lines) std::cout << line << "\n";
        for (const auto& r : out.reports) std::cout << r.to_text();
        std::cout << (pass ? "result: pass" : "result: FAIL") << "\n";
    }
    return pass ? 0 : 1;
}

Problem load(const Options& opt) {
    Problem p = load_problem(opt.file);
    if (opt.tol > 0) p.tol = opt.tol;
    if (opt.probes > 0) p.probes = opt.probes;
    if (opt.seed >= 0) p.seed = static_cast<std::uint64_t>(opt.seed);
    return p;
}

std::string field_text(const std::string& name, const VectorField& x) {
    std::ostringstream os;
    os << name << " =";
    bool any = false;
    for (int i = 0; i < x.chart.dim(); ++i) {
        Expr c = canon(x.coeff[static_cast<std::size_t>(i)]);
        if (c.is_literal_zero()) continue;
        os << (any ? " + " : " ") << "(" << print(c) << ") d/d" << x.chart.coord(i);
        any = true;
    }
    if (!any) os << " 0";
    return os.str();
}

std::string form_text(const std::string& name, const OneForm& a) {
    std::ostringstream os;
    os << name << " =";
    bool any = false;
    for (int i = 0; i < a.chart.dim(); ++i) {
        Expr c = canon(a.coeff[static_cast<std::size_t>(i)]);
        if (c.is_literal_zero()) continue;
        os << (any ? " + " : " ") << "(" << print(c) << ") d" << a.chart.coord(i);
        any = true;
    }
    if (!any) os << " 0";
    return os.str();
}

std::string two_form_text(const std::string& name, const TwoForm& w) {
    std::ostringstream os;
    os << name << " =";
    bool any = false;
    for (int i = 0; i < w.chart.dim(); ++i)
        for (int j = i + 1; j < w.chart.dim(); ++j) {
            Expr c = canon(w.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            if (c.is_literal_zero()) continue;
            os << (any ? " + " : " ") << "(" << print(c) << ") d" << w.chart.coord(i)
               << "^d" << w.chart.coord(j);
            any = true;
        }
    if (!any) os << " 0";
    return os.str();
}

Report structural_checks(const Problem& p, const Flow& flow) {
    Report r;
    r.title = "structural checks";
    auto reg = check_regular(p.system, p.probes, p.tol, p.seed);
    r.add("regular Lagrangian", reg.regular, "det W = " + print(reg.det));
    Expr residual =
        lie_derivative_fn(jet_prolongation(p.connection), p.system.lagrangian());
    ZeroCheck z = is_zero_check(residual, p.tol, p.probes, p.seed);
    r.add("infinitesimal symmetry", z.zero, "residual = " + print(canon(residual)));
    for (auto& item : flow_validate(flow, p.connection).items)
        r.items.push_back(std::move(item));
    return r;
}

Report diff_report(const std::string& title, const VectorField& a,
                   const VectorField& b) {
    Report r;
    r.title = title;
    for (int i = 0; i < a.chart.dim(); ++i)
        r.add_zero("d/d" + a.chart.coord(i) + " component",
                   a.coeff[static_cast<std::size_t>(i)] -
                       b.coeff[static_cast<std::size_t>(i)]);
    return r;
}

json reduced_json(const ReducedSystem& red) {
    json coords = json::array();
    for (int i = 0; i < red.chart.reduced_dim(); ++i)
        coords.push_back(red.chart.reduced_coord(i));
    json theta = json::array();
    json field = json::array();
    for (const Expr& e : red.theta) theta.push_back(print(e));
    for (const Expr& e : red.field) field.push_back(print(e));
    json omega = json::array();
    for (const auto& row : red.omega) {
        json r = json::array();
        for (const Expr& e : row) r.push_back(print(e));
        omega.push_back(r);
    }
    return {{"chart", coords},
            {"lagrangian", print(red.lbar)},
            {"hamiltonian", print(red.energy)},
            {"lagrangian_energy", print(red.lag_energy)},
            {"mismatch", print(red.mismatch)},
            {"one_form", theta},
            {"two_form", omega},
            {"field", field}};
}

void reduced_text(Output& out, const ReducedSystem& red) {
    out.lines.push_back("reduced Lagrangian = " + print(red.lbar));
    out.lines.push_back("reduced Hamiltonian = " + print(red.energy));
    out.lines.push_back("Lagrangian energy = " + print(red.lag_energy));
    out.lines.push_back("energy mismatch = " + print(red.mismatch));
    std::ostringstream field;
    field << "reduced field =";
    bool any = false;
    for (int i = 0; i < red.chart.reduced_dim(); ++i) {
        const Expr& c = red.field[static_cast<std::size_t>(i)];
        if (c.is_literal_zero()) continue;
        field << (any ? " + " : " ") << "(" << print(c) << ") d/d"
              << red.chart.reduced_coord(i);
        any = true;
    }
    out.lines.push_back(field.str());
}

int require_valid(const Problem& p, const Flow& flow) {
    Report checks = structural_checks(p, flow);
    if (checks.passed()) return 0;
    std::cerr << checks.to_text();
    return 1;
}

int cmd_check(const Options& opt) {
    Problem p = load(opt);
    Output out;
    out.reports.push_back(structural_checks(p, problem_flow(p)));
    return emit(opt, "check", out);
}

int cmd_derive(const Options& opt) {
    Problem p = load(opt);
    Flow flow = problem_flow(p);
    if (int rc = require_valid(p, flow)) return rc;

    Output out;
    auto [theta, omega] = poincare_cartan_forms(p.system);
    Expr e = energy(p.system, p.connection);
    VectorField x = sode(p.system);
    SplitForms sf = split_forms(p.system, p.connection);

    out.lines.push_back(form_text("Theta_L", theta));
    out.lines.push_back(two_form_text("Omega_L", omega));
    out.lines.push_back("E = " + print(canon(e)));
    out.lines.push_back(field_text("X_L", x));
    out.lines.push_back(form_text("Theta_L^H", sf.theta_h));
    out.lines.push_back(form_text("Theta_L^V", sf.theta_v));
    out.lines.push_back(two_form_text("Omega_L^H", sf.omega_h));
    out.lines.push_back(two_form_text("Omega_L^V", sf.omega_v));

    out.objects["theta"] = to_json(theta, "poincare_cartan_1");
    out.objects["omega"] = to_json(omega, "poincare_cartan_2");
    out.objects["energy"] = print(canon(e));
    out.objects["dynamical_field"] = to_json(x, "dynamics");
    out.objects["theta_h"] = to_json(sf.theta_h, "horizontal_1");
    out.objects["theta_v"] = to_json(sf.theta_v, "vertical_1");
    out.objects["omega_h"] = to_json(sf.omega_h, "horizontal_2");
    out.objects["omega_v"] = to_json(sf.omega_v, "vertical_2");

    out.reports.push_back(verify_dynamics(x, p.system));
    return emit(opt, "derive", out);
}

int cmd_reduce(const Options& opt) {
    Problem p = load(opt);
    Flow flow = problem_flow(p);
    if (int rc = require_valid(p, flow)) return rc;

    ReducedSystem red = reduce(p.system, p.connection, flow);
    Output out;
    reduced_text(out, red);
    out.objects["reduced"] = reduced_json(red);
    out.reports.push_back(pullback_check(p.system, p.connection, red));
    out.reports.push_back(first_integral_check(red));
    return emit(opt, "reduce", out);
}

int cmd_reconstruct(const Options& opt) {
    Problem p = load(opt);
    Flow flow = problem_flow(p);
    if (int rc = require_valid(p, flow)) return rc;

    ReducedSystem red = reduce(p.system, p.connection, flow);
    VectorField z = reconstruct(p.system, p.connection, red);
    VectorField x = sode(p.system);
    Output out;
    out.lines.push_back(field_text("Z", z));
    out.lines.push_back(field_text("X_L", x));
    out.objects["reconstructed"] = to_json(z, "reconstructed");
    out.objects["dynamical_field"] = to_json(x, "dynamics");
    out.reports.push_back(
        diff_report("reconstructed field equals the dynamical field", z, x));
    return emit(opt, "reconstruct", out);
}

std::string output_dir(const Options& opt) {
    if (!opt.output.empty()) return opt.output;
    if (const char* env = std::getenv("LAGRED_OUTPUT_DIR")) return env;
    return ".";
}

void drift_item(Report& r, const std::string& name, const std::vector<double>& values,
                double limit) {
    double base = std::max(1.0, std::abs(values.front()));
    double worst = 0;
    for (double v : values) worst = std::max(worst, std::abs(v - values.front()) / base);
    std::ostringstream os;
    os << "relative drift " << worst << " (limit " << limit << ")";
    r.add(name, worst < limit, os.str());
}

int cmd_integrate(const Options& opt) {
    Problem p = load(opt);
    Flow flow = problem_flow(p);
    if (int rc = require_valid(p, flow)) return rc;

    bool full = opt.run_full || opt.run_both || (!opt.run_reduced && !opt.run_full);
    bool reduced = opt.run_reduced || opt.run_both || (!opt.run_reduced && !opt.run_full);
    fs::path dir(output_dir(opt));
    fs::create_directories(dir);
    std::string stem = fs::path(opt.file).stem().string();
    constexpr double drift_limit = 1e-8;
    constexpr double projection_tol = 1e-6;

    // each initial-condition row is one independent run
    std::vector<std::vector<double>> grid;
    if (!opt.ic_grid.empty()) {
        std::ifstream in(opt.ic_grid);
        if (!in) throw InputError("cannot open ic grid file '" + opt.ic_grid + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::vector<double> row;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
            if (row.size() != static_cast<std::size_t>(p.system.chart().dim()))
                throw InputError("ic grid row has wrong dimension: " + line);
            grid.push_back(std::move(row));
        }
    } else {
        if (p.ic_full.empty()) throw InputError("problem file has no ic.full");
        grid.push_back(p.ic_full);
    }

    ReducedSystem red = reduce(p.system, p.connection, flow);
    std::vector<CompiledExpr> project;
    {
        std::vector<std::string> names;
        for (int i = 0; i < p.system.chart().dim(); ++i)
            names.push_back(p.system.chart().coord(i));
        for (const Expr& e : red.chart.qbar)
            project.push_back(CompiledExpr::compile(e, names, p.symbol_defs));
        for (const Expr& e : red.chart.vbar)
            project.push_back(CompiledExpr::compile(e, names, p.symbol_defs));
    }

    Output out;
    Report runs;
    runs.title = "integration runs";
    std::vector<Report> locals(grid.size());
    std::vector<std::vector<std::string>> written(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());

    auto run_one = [&](std::size_t idx) {
        try {
            const std::vector<double>& ic = grid[idx];
            std::string tag = grid.size() > 1 ? "-" + std::to_string(idx) : "";
            Report local;
            std::vector<std::string> files;
            Trajectory tr_full{{}, {}, {}, {}, {}};
            if (full) {
                tr_full = integrate_full(p.system, p.connection, ic, p.span,
                                         p.integrator, p.symbol_defs);
                tr_full.metadata["system"] = stem + " (full)";
                tr_full.metadata["seed"] = std::to_string(p.seed);
                std::vector<double> e = evaluate_along(
                    energy(p.system, p.connection), tr_full, p.symbol_defs);
                drift_item(local, "connection energy conserved" + tag, e, drift_limit);
                fs::path csv = dir / (stem + tag + "-full.csv");
                std::ofstream os(csv);
                write_csv(tr_full, os);
                files.push_back(csv.string());
            }
            if (reduced) {
                std::vector<double> ric = p.ic_reduced;
                if (!opt.ic_grid.empty() || ric.empty()) {
                    ric.clear();
                    for (const auto& c : project) ric.push_back(c.eval(ic));
                }
                Trajectory tr_red = integrate_reduced(red, ric, p.span, p.integrator,
                                                      p.symbol_defs);
                tr_red.metadata["system"] = stem + " (reduced)";
                tr_red.metadata["seed"] = std::to_string(p.seed);
                std::vector<double> e = evaluate_along(red.energy, tr_red,
                                                       p.symbol_defs);
                drift_item(local, "reduced energy conserved" + tag, e, drift_limit);
                fs::path csv = dir / (stem + tag + "-reduced.csv");
                std::ofstream os(csv);
                write_csv(tr_red, os);
                files.push_back(csv.string());
                if (full) {
                    Report cp = compare_projection(tr_full, red.chart, tr_red,
                                                   projection_tol, p.symbol_defs);
                    for (auto& item : cp.items) {
                        item.name += tag;
                        local.items.push_back(std::move(item));
                    }
                }
            }
            locals[idx] = std::move(local);
            written[idx] = std::move(files);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    };

    if (grid.size() == 1) {
        run_one(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < grid.size(); ++i) pool.emplace_back(run_one, i);
        for (auto& th : pool) th.join();
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    // deterministic order regardless of thread scheduling
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (auto& item : locals[i].items) runs.items.push_back(std::move(item));
        for (auto& fpath : written[i]) out.lines.push_back("wrote " + fpath);
    }
    std::sort(out.lines.begin(), out.lines.end());
    for (const auto& line : out.lines) out.objects["files"].push_back(line);
    out.reports.push_back(std::move(runs));
    return emit(opt, "integrate", out);
}

int cmd_verify(const Options& opt) {
    Problem p = load(opt);
    Flow flow = problem_flow(p);
    Output out;
    out.reports.push_back(structural_checks(p, flow));

    VectorField x = sode(p.system);
    out.reports.push_back(verify_dynamics(x, p.system));
    out.reports.push_back(check_projectable(p.system, p.connection, true));

    Report rate;
    rate.title = "energy rate identity";
    rate.add_zero("X_L(E) + (j1Y)(L) = 0", energy_rate(p.system, p.connection));
    out.reports.push_back(std::move(rate));

    ReducedSystem red = reduce(p.system, p.connection, flow);
    out.reports.push_back(pullback_check(p.system, p.connection, red));
    out.reports.push_back(first_integral_check(red));
    out.reports.push_back(
        diff_report("reconstructed field equals the dynamical field",
                    reconstruct(p.system, p.connection, red), x));

    if (!p.ic_full.empty()) {
        Report numeric;
        numeric.title = "numeric conservation";
        Trajectory tr_full = integrate_full(p.system, p.connection, p.ic_full, p.span,
                                            p.integrator, p.symbol_defs);
        drift_item(numeric, "connection energy conserved",
                   evaluate_along(energy(p.system, p.connection), tr_full,
                                  p.symbol_defs),
                   1e-8);
        std::vector<double> ric = p.ic_reduced;
        if (ric.empty()) {
            std::vector<std::string> names;
            for (int i = 0; i < p.system.chart().dim(); ++i)
                names.push_back(p.system.chart().coord(i));
            for (const Expr& e : red.chart.qbar)
                ric.push_back(CompiledExpr::compile(e, names, p.symbol_defs)
                                  .eval(p.ic_full));
            for (const Expr& e : red.chart.vbar)
                ric.push_back(CompiledExpr::compile(e, names, p.symbol_defs)
                                  .eval(p.ic_full));
        }
        Trajectory tr_red =
            integrate_reduced(red, ric, p.span, p.integrator, p.symbol_defs);
        drift_item(numeric, "reduced energy conserved",
                   evaluate_along(red.energy, tr_red, p.symbol_defs), 1e-8);
        for (auto& item :
             compare_projection(tr_full, red.chart, tr_red, 1e-6, p.symbol_defs).items)
            numeric.items.push_back(std::move(item));
        out.reports.push_back(std::move(numeric));
    }
    return emit(opt, "verify", out);
}

void add_common(CLI::App* sub, Options& opt) {
    sub->add_option("file", opt.file, "problem definition file")->required();
    sub->add_option("--format", opt.format, "output format")
        ->check(CLI::IsMember({"text", "json"}));
    sub->add_option("--output", opt.output, "output directory for generated files");
    sub->add_option("--tol", opt.tol, "numeric tolerance override");
    sub->add_option("--probes", opt.probes, "probe count override");
    sub->add_option("--seed", opt.seed, "random seed override");
    sub->add_flag("--no-timestamp", opt.no_timestamp, "omit the timestamp line");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-dependent Lagrangian reduction toolkit"};
    app.require_subcommand(1);
    Options opt;

    int (*handler)(const Options&) = nullptr;
    auto wire = [&](const std::string& name, const std::string& desc,
                    int (*fn)(const Options&)) {
        CLI::App* sub = app.add_subcommand(name, desc);
        add_common(sub, opt);
        sub->callback([&handler, fn] { handler = fn; });
        return sub;
    };
    wire("check", "validate regularity, symmetry and the flow", cmd_check);
    wire("derive", "derive the canonical forms, energy and dynamics", cmd_derive);
    wire("reduce", "build and verify the reduced system", cmd_reduce);
    wire("reconstruct", "rebuild the full dynamics from the reduced system",
         cmd_reconstruct);
    CLI::App* integ =
        wire("integrate", "integrate numerically and write CSV trajectories",
             cmd_integrate);
    integ->add_flag("--full", opt.run_full, "integrate the full system only");
    integ->add_flag("--reduced", opt.run_reduced, "integrate the reduced system only");
    integ->add_flag("--both", opt.run_both, "integrate both systems (default)");
    integ->add_option("--ic-grid", opt.ic_grid,
                      "file with one full initial condition per line");
    wire("verify", "run the complete invariant suite", cmd_verify);

    try {
        app.parse(argc, argv);
        return handler(opt);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const UnknownVariable& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const UnboundVariable& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedConnection& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
