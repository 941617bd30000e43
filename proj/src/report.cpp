#include "lagred/report.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

namespace lagred {

bool Report::passed() const {
    for (const auto& item : items)
        if (!item.pass) return false;
    return true;
}

void Report::add(const std::string& name, bool pass, const std::string& detail) {
    items.push_back({name, pass, detail});
}

void Report::add_zero(const std::string& name, const Expr& residual) {
    Expr c = canon(residual);
    add(name, c.is_literal_zero(), "residual = " + print(c));
}

std::string Report::to_text() const {
    std::ostringstream os;
    os << title << (passed() ? "  [pass]" : "  [FAIL]") << "\n";
    for (const auto& item : items) {
        os << "  " << (item.pass ? "pass" : "FAIL") << "  " << item.name;
        if (!item.detail.empty()) os << "  (" << item.detail << ")";
        os << "\n";
    }
    return os.str();
}

nlohmann::json Report::to_json() const {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& item : items)
        checks.push_back({{"name", item.name}, {"pass", item.pass}, {"detail", item.detail}});
    return {{"title", title}, {"pass", passed()}, {"checks", checks}};
}

namespace {

nlohmann::json chart_json(const Chart& ch) {
    nlohmann::json coords = nlohmann::json::array();
    for (int i = 0; i < ch.dim(); ++i) coords.push_back(ch.coord(i));
    return coords;
}

} // namespace

nlohmann::json to_json(const VectorField& x, const std::string& role) {
    nlohmann::json coeff = nlohmann::json::array();
    for (const auto& c : x.coeff) coeff.push_back(print(c));
    return {{"role", role}, {"kind", "vector_field"}, {"chart", chart_json(x.chart)},
            {"coefficients", coeff}};
}

nlohmann::json to_json(const OneForm& a, const std::string& role) {
    nlohmann::json coeff = nlohmann::json::array();
    for (const auto& c : a.coeff) coeff.push_back(print(c));
    return {{"role", role}, {"kind", "one_form"}, {"chart", chart_json(a.chart)},
            {"coefficients", coeff}};
}

nlohmann::json to_json(const TwoForm& w, const std::string& role) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : w.a) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& c : row) r.push_back(print(c));
        rows.push_back(r);
    }
    return {{"role", role}, {"kind", "two_form"}, {"chart", chart_json(w.chart)},
            {"coefficients", rows}};
}

} // namespace lagred
