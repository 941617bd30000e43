#include "lagred/problem.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace lagred {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) throw InputError("empty entry in list '" + s + "'");
        out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError(key + ": '" + s + "' is not a number");
    }
}

long long parse_integer(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError(key + ": '" + s + "' is not an integer");
    }
}

Expr parse_expression(const std::string& key, const std::string& s) {
    try {
        return parse(s);
    } catch (const ParseError& e) {
        throw InputError(key + ": " + e.what());
    }
}

class Fields {
public:
    void insert(const std::string& key, const std::string& value, std::size_t line) {
        if (!map_.emplace(key, value).second)
            throw InputError("line " + std::to_string(line) + ": duplicate key '" +
                             key + "'");
    }
    const std::string* find(const std::string& key) {
        seen_.insert(key);
        auto it = map_.find(key);
        return it == map_.end() ? nullptr : &it->second;
    }
    std::string require(const std::string& key) {
        const std::string* v = find(key);
        if (!v) throw InputError("missing required key '" + key + "'");
        return *v;
    }
    /// every key matching the prefix, e.g. the per-symbol numeric section
    std::map<std::string, std::string> section(const std::string& prefix) {
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : map_)
            if (k.rfind(prefix, 0) == 0) {
                out.emplace(k.substr(prefix.size()), v);
                seen_.insert(k);
            }
        return out;
    }
    void reject_unknown() const {
        for (const auto& [k, v] : map_)
            if (!seen_.count(k)) throw InputError("unknown key '" + k + "'");
    }

private:
    std::map<std::string, std::string> map_;
    std::set<std::string> seen_;
};

} // namespace

Problem parse_problem(std::istream& in) {
    Fields fields;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("line " + std::to_string(lineno) +
                             ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw InputError("line " + std::to_string(lineno) +
                             ": empty key or value");
        fields.insert(key, value, lineno);
    }

    std::vector<std::string> coords = split_list(fields.require("coordinates"));
    Chart chart(coords);
    std::size_t n = coords.size();

    Expr lagrangian = parse_expression("lagrangian", fields.require("lagrangian"));
    std::vector<std::string> gamma_text = split_list(fields.require("connection"));
    if (gamma_text.size() != n)
        throw InputError("connection has " + std::to_string(gamma_text.size()) +
                         " components, expected " + std::to_string(n));
    std::vector<Expr> gamma;
    for (const auto& g : gamma_text) gamma.push_back(parse_expression("connection", g));

    Problem p(LagrangianSystem(chart, lagrangian), Connection(chart, std::move(gamma)));

    if (const std::string* v = fields.find("symbols")) p.symbols = split_list(*v);
    std::set<std::string> declared(p.symbols.begin(), p.symbols.end());
    std::set<std::string> used = symbol_names(lagrangian);
    for (const Expr& g : p.connection.gamma())
        for (const auto& s : symbol_names(g)) used.insert(s);
    for (const auto& s : used)
        if (!declared.count(s))
            throw InputError("symbol '" + s + "' is used but not declared");

    for (const auto& [name, text] : fields.section("numeric.")) {
        if (!declared.count(name))
            throw InputError("numeric." + name + " realizes an undeclared symbol");
        p.symbol_defs.emplace(name, parse_expression("numeric." + name, text));
    }

    if (const std::string* v = fields.find("flow")) {
        std::vector<std::string> phi_text = split_list(*v);
        if (phi_text.size() != n)
            throw InputError("flow has " + std::to_string(phi_text.size()) +
                             " components, expected " + std::to_string(n));
        std::vector<Expr> phi;
        for (const auto& t : phi_text) phi.push_back(parse_expression("flow", t));
        p.flow = Flow{chart, std::move(phi), FlowProvenance::UserSupplied};
    }

    if (const std::string* v = fields.find("ic.full")) {
        for (const auto& x : split_list(*v)) p.ic_full.push_back(parse_double("ic.full", x));
        if (p.ic_full.size() != 2 * n + 1)
            throw InputError("ic.full has " + std::to_string(p.ic_full.size()) +
                             " entries, expected " + std::to_string(2 * n + 1));
    }
    if (const std::string* v = fields.find("ic.reduced")) {
        for (const auto& x : split_list(*v))
            p.ic_reduced.push_back(parse_double("ic.reduced", x));
        if (p.ic_reduced.size() != 2 * n)
            throw InputError("ic.reduced has " + std::to_string(p.ic_reduced.size()) +
                             " entries, expected " + std::to_string(2 * n));
    }
    if (const std::string* v = fields.find("span")) {
        std::vector<std::string> ends = split_list(*v);
        if (ends.size() != 2) throw InputError("span needs exactly two endpoints");
        p.span = {parse_double("span", ends[0]), parse_double("span", ends[1])};
    }

    if (const std::string* v = fields.find("integrator.method")) {
        if (*v == "rk4")
            p.integrator.method = Method::RK4;
        else if (*v == "dopri54")
            p.integrator.method = Method::DOPRI54;
        else
            throw InputError("integrator.method must be rk4 or dopri54, got '" + *v +
                             "'");
    }
    if (const std::string* v = fields.find("integrator.step"))
        p.integrator.step = parse_double("integrator.step", *v);
    if (const std::string* v = fields.find("integrator.abs_tol"))
        p.integrator.abs_tol = parse_double("integrator.abs_tol", *v);
    if (const std::string* v = fields.find("integrator.rel_tol"))
        p.integrator.rel_tol = parse_double("integrator.rel_tol", *v);
    if (const std::string* v = fields.find("integrator.max_steps"))
        p.integrator.max_steps =
            static_cast<std::size_t>(parse_integer("integrator.max_steps", *v));

    if (const std::string* v = fields.find("tol")) p.tol = parse_double("tol", *v);
    if (const std::string* v = fields.find("probes"))
        p.probes = static_cast<int>(parse_integer("probes", *v));
    if (const std::string* v = fields.find("seed"))
        p.seed = static_cast<std::uint64_t>(parse_integer("seed", *v));
    if (p.tol <= 0 || p.probes <= 0)
        throw InputError("tol and probes must be positive");

    fields.reject_unknown();
    return p;
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open problem file '" + path + "'");
    return parse_problem(in);
}

Flow problem_flow(const Problem& p) {
    if (p.flow) return *p.flow;
    return flow_auto(p.connection);
}

} // namespace lagred
